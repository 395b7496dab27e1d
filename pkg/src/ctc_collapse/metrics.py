"""Evaluation metrics: word error rate, real-time factor, collapse statistics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .collapse import consecutive_extension, run_length_encode, strong_blank_frames, weak_blank_frames
from .emissions import EmissionMatrix, load_emission, read_manifest


@dataclass(frozen=True)
class WerCount:
    """Edit errors against a reference, plus the reference word count."""

    errors: int
    words: int

    @property
    def percent(self) -> float:
        if self.words == 0:
            return 0.0 if self.errors == 0 else float("inf")
        return 100.0 * self.errors / self.words


def wer(hypothesis: str, reference: str) -> WerCount:
    """Word-level Levenshtein distance (unit costs) over the reference length.

    An empty reference against a non-empty hypothesis counts every
    hypothesis word as an insertion, with words == 0.
    """
    hyp = hypothesis.split()
    ref = reference.split()
    if not ref:
        return WerCount(errors=len(hyp), words=0)
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, start=1):
        cur = [i] + [0] * len(hyp)
        for j, h in enumerate(hyp, start=1):
            cur[j] = min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (r != h),
            )
        prev = cur
    return WerCount(errors=prev[-1], words=len(ref))


def measure_rtf(decode_time_s: float, audio_s: float) -> float:
    """Decode wall time divided by audio duration."""
    if audio_s <= 0:
        raise ValueError(f"audio duration must be positive, got {audio_s}")
    return decode_time_s / audio_s


def reduction_percent(value: float, baseline: float) -> float:
    """How much smaller ``value`` is than ``baseline``, in percent."""
    if baseline == 0:
        return 0.0
    return 100.0 * (1.0 - value / baseline)


def droppable_count(matrix: EmissionMatrix, mode: str, theta: float | None = None) -> int:
    """Number of frames the collapse would drop."""
    if mode == "weak":
        blanks = weak_blank_frames(matrix)
    elif mode == "strong":
        if theta is None:
            raise ValueError("strong mode requires theta")
        blanks = strong_blank_frames(matrix, theta)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return len(consecutive_extension(blanks.indices, matrix.num_frames))


def collapsible_fraction(
    matrix: EmissionMatrix, mode: str, theta: float | None = None
) -> float:
    """Percentage of frames the collapse would drop."""
    if matrix.num_frames == 0:
        raise ValueError("collapsible fraction is undefined for an empty matrix")
    return 100.0 * droppable_count(matrix, mode, theta) / matrix.num_frames


def run_length_histogram(manifest_path) -> dict[str, Counter]:
    """Run-size counts per frame type (blank vs non-blank by argmax).

    Returns ``{"blank": Counter, "non_blank": Counter}`` mapping run length
    to the number of runs of that length across the whole corpus.
    """
    hist = {"blank": Counter(), "non_blank": Counter()}
    for utt in read_manifest(manifest_path):
        matrix = load_emission(utt.emission_path)
        if matrix.num_frames == 0:
            continue
        blank_set = set(weak_blank_frames(matrix).indices)
        mask = [t in blank_set for t in range(1, matrix.num_frames + 1)]
        rle = run_length_encode(mask)
        for is_blank, count in zip(rle.values, rle.counts):
            hist["blank" if is_blank else "non_blank"][count] += 1
    return hist
