"""Exact references for validating the beam search at small scale.

Two independent routes to the same quantity: full enumeration of every
alignment path, and the standard forward recursion over a blank-interleaved
target. Each checks the other; the beam search is checked against both.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .emissions import EmissionMatrix
from .greedy import LabelSequence, collapse_path

ENUMERATION_LIMIT = 10_000_000


class InstanceTooLargeError(Exception):
    """Raised when |L'|^T exceeds the enumeration guard."""


@dataclass(frozen=True)
class PathEnumeration:
    """Exact posterior of every label sequence reachable from a matrix."""

    posteriors: dict[tuple[int, ...], float]

    def best(self) -> tuple[tuple[int, ...], float]:
        """Highest-posterior sequence; ties break to the lexicographically least."""
        seq = min(self.posteriors, key=lambda s: (-self.posteriors[s], s))
        return seq, self.posteriors[seq]


def enumerate_posteriors(matrix: EmissionMatrix) -> PathEnumeration:
    """Sum path probabilities onto their collapsed label sequences.

    Walks every one of the |L'|^T alignment paths, so it is guarded to
    small instances.
    """
    t_total = matrix.num_frames
    v = matrix.alphabet.size
    if v**t_total > ENUMERATION_LIMIT:
        raise InstanceTooLargeError(
            f"{v}^{t_total} paths exceed the {ENUMERATION_LIMIT} guard"
        )
    probs = np.exp(matrix.frames)
    posteriors: dict[tuple[int, ...], float] = {}
    for path in itertools.product(range(v), repeat=t_total):
        p = 1.0
        for t, col in enumerate(path):
            p *= probs[t, col]
            if p == 0.0:
                break
        if p == 0.0:
            continue
        seq = collapse_path(path, matrix.alphabet).tokens
        posteriors[seq] = posteriors.get(seq, 0.0) + p
    if t_total == 0:
        posteriors[()] = 1.0
    return PathEnumeration(posteriors)


def ctc_forward(matrix: EmissionMatrix, target: LabelSequence) -> float:
    """Natural-log probability of ``target`` via the forward recursion.

    The target is interleaved with blanks (blank, l1, blank, l2, ..., blank);
    state s at frame t comes from s, s-1, and, when skipping the blank
    between distinct labels is legal, s-2. Returns -inf when no alignment
    fits in the available frames.
    """
    t_total = matrix.num_frames
    alphabet = matrix.alphabet
    tokens = target.tokens
    if t_total == 0:
        return 0.0 if not tokens else -math.inf

    blank = alphabet.blank_index
    ext = [blank]
    for tok in tokens:
        ext.append(alphabet.column_of_label(tok))
        ext.append(blank)
    s_total = len(ext)

    log_y = matrix.frames
    alpha = np.full(s_total, -np.inf)
    alpha[0] = log_y[0, ext[0]]
    if s_total > 1:
        alpha[1] = log_y[0, ext[1]]
    for t in range(1, t_total):
        prev = alpha
        alpha = np.full(s_total, -np.inf)
        for s in range(s_total):
            acc = prev[s]
            if s >= 1:
                acc = np.logaddexp(acc, prev[s - 1])
            if s >= 2 and ext[s] != blank and ext[s] != ext[s - 2]:
                acc = np.logaddexp(acc, prev[s - 2])
            if acc != -np.inf:
                alpha[s] = acc + log_y[t, ext[s]]
    tail = alpha[-1]
    if s_total > 1:
        tail = np.logaddexp(tail, alpha[-2])
    return float(tail)
