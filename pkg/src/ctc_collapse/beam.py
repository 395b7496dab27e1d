"""CTC prefix beam search with optional blank collapse and n-gram LM fusion.

Per candidate prefix c the search tracks two log probabilities: ending in
blank (p_b) and ending in the last non-blank label (p_nb). Stepping over an
emission row updates them with the usual recursions:

    p_b(c)      gains  p_tot(c) * y[blank]
    p_nb(c)     gains  p_nb(c) * y[last(c)]          (stay on the last label)
    p_nb(c + k) gains  p_b(c) * y[k]   if k == last(c)   (repeat needs a blank)
                       p_tot(c) * y[k] otherwise

Hypotheses that land on the same prefix merge by log-sum-exp of the matching
components. The ranking score is log-linear: log p_tot plus lm_weight times
the accumulated LM log probability plus length_penalty per completed word.
The LM is word-level: a word is scored when the word-separator label is
emitted, and the trailing partial word plus the sentence end are scored once
at the end of the utterance.

Pruning drops candidates scoring more than ``beam_threshold`` below the
step's best, then keeps the ``beam_size`` best. Ties break lexicographically
on the prefix, so decoding is fully deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .collapse import CollapseResult, blank_collapse
from .emissions import Alphabet, EmissionMatrix
from .greedy import LabelSequence
from .lm import ArpaModel, LmState, score_sentence_end, score_token

NEG_INF = -math.inf


def _logaddexp(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


@dataclass(frozen=True)
class DecoderConfig:
    """Beam search knobs.

    ``beam_threshold`` is a log-domain margin below the best candidate;
    ``math.inf`` disables threshold pruning. ``collapse_mode`` is ``"none"``,
    ``"weak"``, or ``"strong"`` (the latter reads ``theta``). ``word_separator``
    names the label that closes a word for LM scoring and the length penalty.
    """

    beam_size: int = 25
    beam_threshold: float = math.inf
    lm_weight: float = 0.0
    length_penalty: float = 0.0
    collapse_mode: str = "none"
    theta: float = 0.999
    word_separator: str = " "

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.beam_threshold < 0:
            raise ValueError("beam_threshold must be >= 0")
        if self.collapse_mode not in ("none", "weak", "strong"):
            raise ValueError(f"unknown collapse_mode {self.collapse_mode!r}")


@dataclass
class Hypothesis:
    """One beam entry: a prefix with its blank/non-blank mass and LM state.

    ``prefix`` holds label indices (no blanks). ``alignment`` records, per
    prefix token, the 1-based frame (in the decoded matrix) where it was
    emitted, following the highest-mass path into the prefix.
    """

    prefix: tuple[int, ...]
    log_p_b: float = NEG_INF
    log_p_nb: float = NEG_INF
    lm_state: LmState | None = None
    lm_log: float = 0.0
    num_words: int = 0
    pending: tuple[int, ...] = ()
    alignment: tuple[int, ...] = ()
    align_mass: float = NEG_INF

    @property
    def log_p_tot(self) -> float:
        return _logaddexp(self.log_p_b, self.log_p_nb)


def initial_hypothesis(lm: ArpaModel | None = None) -> Hypothesis:
    """Empty prefix, certain to be 'all blank so far'."""
    return Hypothesis(
        prefix=(),
        log_p_b=0.0,
        log_p_nb=NEG_INF,
        lm_state=lm.initial_state() if lm is not None else None,
    )


def hypothesis_score(hyp: Hypothesis, cfg: DecoderConfig) -> float:
    """Log-linear ranking score: acoustics + weighted LM + word count penalty."""
    return hyp.log_p_tot + cfg.lm_weight * hyp.lm_log + cfg.length_penalty * hyp.num_words


# Candidate record layout, kept as a plain list for speed:
# [pb, pnb, lm_state, lm_log, num_words, pending, alignment, align_mass]
_PB, _PNB, _LM_STATE, _LM_LOG, _NUM_WORDS, _PENDING, _ALIGN, _ALIGN_MASS = range(8)


def step(
    beams: list[Hypothesis],
    row: np.ndarray,
    alphabet: Alphabet,
    cfg: DecoderConfig,
    lm: ArpaModel | None = None,
    frame_index: int = 1,
) -> list[Hypothesis]:
    """Advance all beams over one emission row and prune.

    ``frame_index`` (1-based, in the matrix being decoded) is recorded in
    alignments of newly extended prefixes.
    """
    probs = row.tolist()
    blank = alphabet.blank_index
    log_blank = probs[blank]
    n_labels = len(alphabet.labels)
    label_probs = [probs[alphabet.column_of_label(i)] for i in range(n_labels)]
    separator_label = None
    if lm is not None and cfg.word_separator in alphabet.labels:
        separator_label = alphabet.labels.index(cfg.word_separator)
    lam = cfg.lm_weight
    beta = cfg.length_penalty
    lse = _logaddexp

    cands: dict[tuple[int, ...], list] = {}

    for hyp in beams:
        pb = hyp.log_p_b
        pnb = hyp.log_p_nb
        p_tot = lse(pb, pnb)
        prefix = hyp.prefix
        last = prefix[-1] if prefix else -1
        alignment = hyp.alignment

        # Same prefix: absorb a blank, or sit on the last label.
        rec = cands.get(prefix)
        if rec is None:
            rec = [NEG_INF, NEG_INF, hyp.lm_state, hyp.lm_log, hyp.num_words,
                   hyp.pending, alignment, hyp.align_mass]
            cands[prefix] = rec
        elif hyp.align_mass > rec[_ALIGN_MASS]:
            rec[_ALIGN] = alignment
            rec[_ALIGN_MASS] = hyp.align_mass
        rec[_PB] = lse(rec[_PB], p_tot + log_blank)
        if last >= 0 and pnb != NEG_INF:
            rec[_PNB] = lse(rec[_PNB], pnb + label_probs[last])

        # Extend by each non-blank label; a repeat is only reachable
        # through the blank-terminated mass.
        for lab in range(n_labels):
            contrib = (pb if lab == last else p_tot) + label_probs[lab]
            if contrib == NEG_INF:
                continue
            child_prefix = prefix + (lab,)
            crec = cands.get(child_prefix)
            if crec is None:
                if lm is None:
                    lm_fields = (None, 0.0, 0, ())
                elif lab == separator_label and hyp.pending:
                    word = alphabet.text(hyp.pending)
                    logp, state = score_token(lm, hyp.lm_state, word)
                    lm_fields = (state, hyp.lm_log + logp, hyp.num_words + 1, ())
                elif lab == separator_label:
                    lm_fields = (hyp.lm_state, hyp.lm_log, hyp.num_words, ())
                else:
                    lm_fields = (hyp.lm_state, hyp.lm_log, hyp.num_words,
                                 hyp.pending + (lab,))
                cands[child_prefix] = [NEG_INF, contrib, *lm_fields,
                                       alignment + (frame_index,), contrib]
            else:
                crec[_PNB] = lse(crec[_PNB], contrib)
                if contrib > crec[_ALIGN_MASS]:
                    crec[_ALIGN] = alignment + (frame_index,)
                    crec[_ALIGN_MASS] = contrib

    scored = []
    for prefix, rec in cands.items():
        p_tot = lse(rec[_PB], rec[_PNB])
        if p_tot == NEG_INF:
            continue
        score = p_tot + lam * rec[_LM_LOG] + beta * rec[_NUM_WORDS] if lm is not None else p_tot
        scored.append((-score, prefix, rec))
    scored.sort(key=lambda item: item[:2])
    if cfg.beam_threshold != math.inf and scored:
        cutoff = -scored[0][0] - cfg.beam_threshold
        keep = 0
        for neg_score, _, _ in scored:
            if -neg_score < cutoff:
                break
            keep += 1
        scored = scored[:keep]
    return [
        Hypothesis(
            prefix=prefix,
            log_p_b=rec[_PB],
            log_p_nb=rec[_PNB],
            lm_state=rec[_LM_STATE],
            lm_log=rec[_LM_LOG],
            num_words=rec[_NUM_WORDS],
            pending=rec[_PENDING],
            alignment=rec[_ALIGN],
            align_mass=rec[_ALIGN_MASS],
        )
        for _, prefix, rec in scored[: cfg.beam_size]
    ]


@dataclass(frozen=True)
class DecodeResult:
    """Best prefix with its final score and frame alignment.

    ``alignment`` gives, per output token, the 1-based frame of the
    *original* (uncollapsed) matrix where it was emitted. ``frames_decoded``
    is the matrix length the beam search actually walked.
    """

    sequence: LabelSequence
    log_score: float
    alignment: tuple[int, ...]
    frames_total: int
    frames_decoded: int
    collapse: CollapseResult | None = None


def _finalize(
    hyp: Hypothesis, alphabet: Alphabet, cfg: DecoderConfig, lm: ArpaModel | None
) -> float:
    """Final ranking score: score the trailing partial word, then </s>."""
    if lm is None:
        return hypothesis_score(hyp, cfg)
    lm_log = hyp.lm_log
    num_words = hyp.num_words
    state = hyp.lm_state
    if hyp.pending:
        logp, state = score_token(lm, state, alphabet.text(hyp.pending))
        lm_log += logp
        num_words += 1
    lm_log += score_sentence_end(lm, state)
    return hyp.log_p_tot + cfg.lm_weight * lm_log + cfg.length_penalty * num_words


def decode(
    matrix: EmissionMatrix,
    cfg: DecoderConfig,
    lm: ArpaModel | None = None,
) -> DecodeResult:
    """Run (optionally collapsed) prefix beam search over a whole utterance."""
    collapse_result = None
    frames = matrix
    if cfg.collapse_mode != "none":
        collapse_result = blank_collapse(
            matrix, cfg.collapse_mode,
            cfg.theta if cfg.collapse_mode == "strong" else None,
        )
        frames = collapse_result.collapsed

    beams = [initial_hypothesis(lm)]
    for t in range(frames.num_frames):
        beams = step(beams, frames.frames[t], matrix.alphabet, cfg, lm, frame_index=t + 1)

    best = min(
        beams,
        key=lambda h: (-_finalize(h, matrix.alphabet, cfg, lm), h.prefix),
    )
    alignment = best.alignment
    if collapse_result is not None and alignment:
        alignment = tuple(collapse_result.kept_indices[p - 1] for p in alignment)
    return DecodeResult(
        sequence=LabelSequence(best.prefix),
        log_score=_finalize(best, matrix.alphabet, cfg, lm),
        alignment=alignment,
        frames_total=matrix.num_frames,
        frames_decoded=frames.num_frames,
        collapse=collapse_result,
    )
