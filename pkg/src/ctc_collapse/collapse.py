"""Blank-frame detection and blank collapse.

A frame is *weakly* blank when blank wins the per-frame argmax, and
*strongly* blank at threshold theta when its blank probability is at least
theta. The consecutive extension of a blank set marks the droppable frames:
every leading-run blank, every trailing-run blank, and every blank whose
predecessor is blank, which keeps exactly the first blank of each interior
run. Blank collapse deletes the droppable frames, shortening the matrix the
beam search has to walk while keeping one blank separator wherever repeats
could merge.

Two independent implementations of the droppable-index computation are kept
side by side: a direct set-based one on top of ``consecutive_extension`` and
a run-length-encoding one (``blank_collapse`` uses the latter). They are
required to agree on every input and are tested exhaustively against each
other.

Frame indices in all public results are 1-based (t = 1..T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .emissions import EmissionMatrix


@dataclass(frozen=True)
class BlankFrameSet:
    """Frames classified as blank, with the rule that produced them.

    ``kind`` is ``"weak"`` (argmax rule) or ``"strong"`` (threshold rule);
    ``theta`` is set only for strong sets. Indices are sorted and 1-based.
    """

    indices: tuple[int, ...]
    kind: str
    theta: float | None = None


@dataclass(frozen=True)
class CollapseResult:
    """A collapsed emission plus the map back to original frame numbers.

    ``kept_indices[i]`` is the 1-based original frame behind collapsed row
    ``i`` (0-based row, as usual for arrays).
    """

    collapsed: EmissionMatrix
    kept_indices: tuple[int, ...]


@dataclass(frozen=True)
class RunLengthEncoding:
    """Maximal runs of equal adjacent values: ``values[i]`` repeated ``counts[i]``."""

    values: tuple
    counts: tuple[int, ...]

    def expand(self) -> list:
        out = []
        for v, c in zip(self.values, self.counts):
            out.extend([v] * c)
        return out


def run_length_encode(values) -> RunLengthEncoding:
    """Encode a sequence as (value, run length) pairs, like unique_consecutive."""
    vals: list = []
    counts: list[int] = []
    for v in values:
        if vals and vals[-1] == v:
            counts[-1] += 1
        else:
            vals.append(v)
            counts.append(1)
    return RunLengthEncoding(tuple(vals), tuple(counts))


def weak_blank_frames(matrix: EmissionMatrix) -> BlankFrameSet:
    """Frames where blank wins the argmax (ties break toward the lowest column)."""
    if matrix.num_frames == 0:
        return BlankFrameSet((), "weak")
    winners = np.argmax(matrix.frames, axis=1)
    idx = np.flatnonzero(winners == matrix.alphabet.blank_index) + 1
    return BlankFrameSet(tuple(int(i) for i in idx), "weak")


def strong_blank_frames(matrix: EmissionMatrix, theta: float) -> BlankFrameSet:
    """Frames whose blank probability is at least ``theta``."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must be in [0, 1], got {theta}")
    if matrix.num_frames == 0:
        return BlankFrameSet((), "strong", theta)
    # Inclusive at exact equality for both in-memory float64 values and
    # values that went through the file format's float32 rounding.
    if theta > 0.0:
        log_theta = min(math.log(theta), float(np.float32(math.log(theta))))
    else:
        log_theta = -math.inf
    blank_col = matrix.frames[:, matrix.alphabet.blank_index]
    idx = np.flatnonzero(blank_col >= log_theta) + 1
    return BlankFrameSet(tuple(int(i) for i in idx), "strong", theta)


def consecutive_extension(blank_indices, num_frames: int) -> set[int]:
    """Droppable subset of a blank-frame set (1-based indices).

    A blank frame t is droppable when its predecessor is blank, when t = 1,
    or when every frame from t to the end is blank.
    """
    members = set(blank_indices)
    if not members <= set(range(1, num_frames + 1)):
        raise ValueError("blank indices must lie within 1..num_frames")
    out = set()
    for t in members:
        if t == 1 or (t - 1) in members:
            out.add(t)
        elif all(s in members for s in range(t, num_frames + 1)):
            out.add(t)
    return out


def _kept_indices_direct(blank_mask) -> list[int]:
    """Kept frames (1-based) via the set definition: complement of the extension."""
    t_total = len(blank_mask)
    blanks = [i + 1 for i, b in enumerate(blank_mask) if b]
    droppable = consecutive_extension(blanks, t_total)
    return [t for t in range(1, t_total + 1) if t not in droppable]


def _kept_indices_rle(blank_mask) -> list[int]:
    """Kept frames (1-based) via run-length encoding of the blank indicator.

    The leading blank run only shifts the start offset, the trailing blank
    run terminates the scan, and each interior blank run of length m keeps
    its first frame and skips the remaining m - 1.
    """
    rle = run_length_encode(blank_mask)
    n_runs = len(rle.values)
    gaps: list[int] = []
    lead = 0
    carry = 0
    for i, (is_blank, count) in enumerate(zip(rle.values, rle.counts)):
        if is_blank:
            if i == 0:
                lead = count
            elif i == n_runs - 1:
                break
            else:
                gaps.append(1 + carry)
                carry = count - 1
        else:
            for _ in range(count):
                gaps.append(1 + carry)
                carry = 0
    pos = lead
    kept = []
    for g in gaps:
        pos += g
        kept.append(pos)
    return kept


def blank_collapse(
    matrix: EmissionMatrix, mode: str, theta: float | None = None
) -> CollapseResult:
    """Drop the droppable blank frames of ``matrix``.

    ``mode`` is ``"weak"`` or ``"strong"``; strong requires ``theta``. Kept
    rows are copied verbatim, so collapsed row i equals original row
    ``kept_indices[i]``.
    """
    if mode == "weak":
        blanks = weak_blank_frames(matrix)
    elif mode == "strong":
        if theta is None:
            raise ValueError("strong collapse requires theta")
        blanks = strong_blank_frames(matrix, theta)
    else:
        raise ValueError(f"unknown collapse mode {mode!r}")
    mask = [False] * matrix.num_frames
    for t in blanks.indices:
        mask[t - 1] = True
    kept = _kept_indices_rle(mask)
    rows = matrix.frames[[t - 1 for t in kept], :] if kept else matrix.frames[:0, :]
    collapsed = EmissionMatrix(rows, matrix.alphabet)
    return CollapseResult(collapsed=collapsed, kept_indices=tuple(kept))


def remap_alignment(collapsed_positions, result: CollapseResult) -> list[int]:
    """Map 1-based positions in the collapsed matrix back to original frames."""
    n = len(result.kept_indices)
    out = []
    for p in collapsed_positions:
        if not 1 <= p <= n:
            raise IndexError(f"collapsed position {p} out of range 1..{n}")
        out.append(result.kept_indices[p - 1])
    return out
