"""Synthetic peaky emissions with controllable blank statistics.

The generator lays out an alignment for a transcript: each label occupies a
short run of frames (geometric lengths, mostly 1-2), and every gap around
and between labels holds a blank run (shifted negative binomial, heavier
tail). Blank run lengths are sized so that the corpus-level collapsible
fraction lands on ``blank_fraction`` in expectation.

Per frame, the dominant label receives a random mass drawn from a two-part
mixture: a "saturated" component hugging 1 and a "hesitant" component well
below it. ``peak_confidence`` is the mixture mean, so raising it increases
the share of frames whose blank probability clears a high threshold, which
is how model quality is emulated. Residual mass is spread uniformly over
the other labels, so the dominant label always wins the argmax and greedy
decoding returns the transcript exactly.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .emissions import (
    Alphabet,
    EmissionMatrix,
    Utterance,
    save_alphabet,
    save_emission,
    write_manifest,
)
from .greedy import LabelSequence, greedy_decode

_SATURATED = (0.9995, 0.99995)
_HESITANT = (0.55, 0.95)
_SAT_MEAN = sum(_SATURATED) / 2
_HES_MEAN = sum(_HESITANT) / 2

WORDS = (
    "the and for are but not you all any can her was one our out day get has him "
    "his how man new now old see two way who boy did its let put say she too use "
    "that with have this will your from they know want been good much some time "
    "very when come here just like long make many over such take than them well were"
).split()


def default_alphabet() -> Alphabet:
    """Space plus lowercase letters, blank in column 0."""
    return Alphabet((" ",) + tuple(string.ascii_lowercase), blank_index=0)


@dataclass(frozen=True)
class SynthConfig:
    """Generator knobs; see the module docstring for how they interact."""

    blank_fraction: float = 0.45
    peak_confidence: float = 0.99
    label_run_p: float = 0.7
    blank_run_shape: float = 2.0
    seed: int = 0
    frame_shift_s: float = 0.02
    alphabet: Alphabet = field(default_factory=default_alphabet)

    def __post_init__(self):
        if not 0.0 < self.blank_fraction < 1.0:
            raise ValueError("blank_fraction must lie in (0, 1)")
        if not 0.5 < self.peak_confidence < 1.0:
            raise ValueError("peak_confidence must lie in (0.5, 1)")
        if not 0.0 < self.label_run_p <= 1.0:
            raise ValueError("label_run_p must lie in (0, 1]")
        if self.blank_run_shape <= 0 or self.frame_shift_s <= 0:
            raise ValueError("blank_run_shape and frame_shift_s must be positive")


def tokens_from_text(text: str, alphabet: Alphabet) -> LabelSequence:
    """Map a transcript string to label indices, one per character."""
    index = {lab: i for i, lab in enumerate(alphabet.labels)}
    try:
        return LabelSequence(tuple(index[ch] for ch in text))
    except KeyError as exc:
        raise ValueError(f"transcript character {exc.args[0]!r} not in alphabet") from exc


def _saturated_share(peak_confidence: float) -> float:
    return float(np.clip((peak_confidence - _HES_MEAN) / (_SAT_MEAN - _HES_MEAN), 0.0, 1.0))


def generate_emission(
    transcript: LabelSequence | str,
    cfg: SynthConfig,
    utt_id: str = "utt",
    salt: int = 0,
) -> tuple[EmissionMatrix, Utterance]:
    """Build one emission whose greedy decode equals ``transcript``.

    Deterministic for a fixed (cfg.seed, salt) pair.
    """
    alphabet = cfg.alphabet
    if isinstance(transcript, str):
        tokens = tokens_from_text(transcript, alphabet)
    else:
        tokens = transcript
    text = tokens.text(alphabet)
    rng = np.random.default_rng([cfg.seed, salt])

    n = len(tokens)
    f = cfg.blank_fraction
    if n > 0:
        label_lens = rng.geometric(cfg.label_run_p, size=n)
        total_label = int(label_lens.sum())
        # Aim the expected collapsible-frame share at f: the n+1 blank runs
        # contribute their full length at the ends and length-1 inside.
        mean_blank = (f * total_label + (n - 1)) / ((n + 1) * (1.0 - f))
        extra = max(0.0, mean_blank - 1.0)
        r = cfg.blank_run_shape
        p = r / (r + extra) if extra > 0 else 1.0
        blank_lens = 1 + rng.negative_binomial(r, p, size=n + 1)
    else:
        label_lens = np.zeros(0, dtype=int)
        blank_lens = np.array([1 + rng.negative_binomial(cfg.blank_run_shape, 0.5)])

    dom_cols: list[int] = []
    blank_col = alphabet.blank_index
    for i in range(n):
        dom_cols.extend([blank_col] * int(blank_lens[i]))
        dom_cols.extend([alphabet.column_of_label(tokens.tokens[i])] * int(label_lens[i]))
    dom_cols.extend([blank_col] * int(blank_lens[-1]))

    t_total = len(dom_cols)
    v = alphabet.size
    share = _saturated_share(cfg.peak_confidence)
    saturated = rng.random(t_total) < share
    dom_mass = np.where(
        saturated,
        rng.uniform(*_SATURATED, size=t_total),
        rng.uniform(*_HESITANT, size=t_total),
    )
    rows = np.repeat(((1.0 - dom_mass) / (v - 1))[:, None], v, axis=1)
    rows[np.arange(t_total), dom_cols] = dom_mass
    matrix = EmissionMatrix(np.log(rows), alphabet)

    utterance = Utterance(
        id=utt_id,
        emission_path=Path(f"{utt_id}.ctce"),
        reference=text,
        duration_s=t_total * cfg.frame_shift_s,
    )
    return matrix, utterance


def generate_corpus(
    transcripts: list[str], cfg: SynthConfig, out_dir: str | Path
) -> Path:
    """Write emissions, alphabet, and manifest for a list of transcripts.

    Returns the manifest path. Every emission is verified to greedy-decode
    back to its transcript before it is written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_alphabet(cfg.alphabet, out_dir / "alphabet.json")
    utterances = []
    for i, text in enumerate(transcripts):
        utt_id = f"utt{i:05d}"
        matrix, utt = generate_emission(text, cfg, utt_id=utt_id, salt=i)
        decoded = greedy_decode(matrix).text(cfg.alphabet)
        if decoded != text:
            raise AssertionError(
                f"{utt_id}: greedy decode {decoded!r} does not match transcript {text!r}"
            )
        path = out_dir / f"{utt_id}.ctce"
        save_emission(matrix, path)
        utterances.append(
            Utterance(id=utt_id, emission_path=path, reference=text, duration_s=utt.duration_s)
        )
    manifest = out_dir / "manifest.jsonl"
    write_manifest(utterances, manifest)
    return manifest


def sample_transcripts(
    count: int, seed: int = 0, min_words: int = 3, max_words: int = 8
) -> list[str]:
    """Random word sequences from the built-in vocabulary."""
    rng = np.random.default_rng([seed, 0xC0])
    out = []
    for _ in range(count):
        k = int(rng.integers(min_words, max_words + 1))
        out.append(" ".join(rng.choice(WORDS, size=k)))
    return out
