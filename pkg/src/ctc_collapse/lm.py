"""Back-off n-gram language model loaded from ARPA text.

The ARPA file stores log10 probabilities and back-off weights; everything is
converted to natural logs at parse time. Scoring follows the standard
back-off rule: use the longest matching n-gram, otherwise add the context's
back-off weight and retry with a shorter context. Tokens may be words or
characters; the model does not care.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

LN10 = math.log(10.0)
UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"

# Natural-log floor for out-of-vocabulary tokens when the model has no <unk>.
OOV_FLOOR = math.log(1e-10)


class ArpaFormatError(Exception):
    """Structural problem in an ARPA file (message names the line)."""


@dataclass(frozen=True)
class LmState:
    """Scoring context: the most recent (order - 1) tokens."""

    context: tuple[str, ...] = ()


@dataclass
class ArpaModel:
    """Parsed ARPA model: n-gram table plus vocabulary.

    ``entries`` maps a token tuple to (natural-log probability, natural-log
    back-off weight); back-off defaults to 0 when the file omits it.
    """

    order: int
    entries: dict[tuple[str, ...], tuple[float, float]]
    vocabulary: frozenset[str] = field(default_factory=frozenset)

    def initial_state(self) -> LmState:
        """Sentence-start state: begins with <s> when the model knows it."""
        if BOS in self.vocabulary and self.order > 1:
            return LmState((BOS,))
        return LmState(())


_NGRAM_HEADER = re.compile(r"ngram\s+(\d+)\s*=\s*(\d+)")
_SECTION = re.compile(r"\\(\d+)-grams:")


def parse_arpa(path: str | Path) -> ArpaModel:
    """Load an ARPA file, validating section structure and counts."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    counts: dict[int, int] = {}
    entries: dict[tuple[str, ...], tuple[float, float]] = {}
    loaded: dict[int, int] = {}
    i = 0
    n_lines = len(lines)

    while i < n_lines and lines[i].strip() != "\\data\\":
        if lines[i].strip():
            raise ArpaFormatError(f"line {i + 1}: expected \\data\\ header")
        i += 1
    if i == n_lines:
        raise ArpaFormatError("missing \\data\\ header")
    i += 1
    while i < n_lines:
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        m = _NGRAM_HEADER.fullmatch(line)
        if m is None:
            break
        counts[int(m.group(1))] = int(m.group(2))
        i += 1
    if not counts:
        raise ArpaFormatError("\\data\\ section lists no ngram counts")
    order = max(counts)

    current_n: int | None = None
    saw_end = False
    for lineno in range(i, n_lines):
        line = lines[lineno].strip()
        if not line:
            continue
        if line == "\\end\\":
            saw_end = True
            break
        m = _SECTION.fullmatch(line)
        if m is not None:
            current_n = int(m.group(1))
            if current_n not in counts:
                raise ArpaFormatError(
                    f"line {lineno + 1}: section \\{current_n}-grams: not announced in \\data\\"
                )
            loaded.setdefault(current_n, 0)
            continue
        if current_n is None:
            raise ArpaFormatError(f"line {lineno + 1}: entry outside any n-gram section")
        parts = line.split()
        if len(parts) not in (current_n + 1, current_n + 2):
            raise ArpaFormatError(
                f"line {lineno + 1}: expected {current_n}-gram entry, got {len(parts)} fields"
            )
        try:
            logp = float(parts[0]) * LN10
            backoff = float(parts[current_n + 1]) * LN10 if len(parts) == current_n + 2 else 0.0
        except ValueError as exc:
            raise ArpaFormatError(f"line {lineno + 1}: unparseable number") from exc
        tokens = tuple(parts[1 : current_n + 1])
        if current_n > 1 and tokens[:-1] not in entries:
            raise ArpaFormatError(
                f"line {lineno + 1}: {current_n}-gram {' '.join(tokens)!r} has no "
                f"{current_n - 1}-gram prefix entry"
            )
        entries[tokens] = (logp, backoff)
        loaded[current_n] += 1
    if not saw_end:
        raise ArpaFormatError("missing \\end\\ marker")
    for n, expected in counts.items():
        got = loaded.get(n, 0)
        if got != expected:
            raise ArpaFormatError(
                f"\\data\\ announces {expected} {n}-grams but file contains {got}"
            )

    vocabulary = frozenset(tok for (tok,) in (k for k in entries if len(k) == 1))
    return ArpaModel(order=order, entries=entries, vocabulary=vocabulary)


def _backoff_logprob(model: ArpaModel, context: tuple[str, ...], token: str) -> float:
    hit = model.entries.get(context + (token,))
    if hit is not None:
        return hit[0]
    if not context:
        # Unigram miss; unreachable for in-vocabulary tokens.
        return OOV_FLOOR
    ctx_entry = model.entries.get(context)
    weight = ctx_entry[1] if ctx_entry is not None else 0.0
    return weight + _backoff_logprob(model, context[1:], token)


def score_token(model: ArpaModel, state: LmState, token: str) -> tuple[float, LmState]:
    """Natural-log probability of ``token`` in ``state``, plus the next state.

    Out-of-vocabulary tokens are scored (and carried forward) as <unk>; if
    the model has no <unk> entry a fixed floor probability applies.
    """
    if token not in model.vocabulary:
        token = UNK
    context = state.context[-(model.order - 1) :] if model.order > 1 else ()
    if token in model.vocabulary:
        logp = _backoff_logprob(model, context, token)
    else:
        logp = OOV_FLOOR  # model has no <unk> entry
    new_context = (context + (token,))[-(model.order - 1) :] if model.order > 1 else ()
    return logp, LmState(new_context)


def score_sentence_end(model: ArpaModel, state: LmState) -> float:
    """Natural-log probability of </s> in ``state``; 0 when the model lacks </s>."""
    if EOS not in model.vocabulary:
        return 0.0
    logp, _ = score_token(model, state, EOS)
    return logp


def score_sequence(model: ArpaModel, tokens, state: LmState | None = None) -> float:
    """Sum of token scores from ``state`` (default: sentence start)."""
    if state is None:
        state = model.initial_state()
    total = 0.0
    for tok in tokens:
        logp, state = score_token(model, state, tok)
        total += logp
    return total
