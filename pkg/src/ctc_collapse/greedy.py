"""Best-path decoding: per-frame argmax, then merge repeats and strip blanks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .emissions import Alphabet, EmissionMatrix


@dataclass(frozen=True)
class LabelSequence:
    """A decoded sequence of label indices (into ``Alphabet.labels``; no blanks)."""

    tokens: tuple[int, ...]

    def __post_init__(self):
        if isinstance(self.tokens, list):
            object.__setattr__(self, "tokens", tuple(self.tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    def text(self, alphabet: Alphabet) -> str:
        return alphabet.text(self.tokens)


def collapse_path(path, alphabet: Alphabet) -> LabelSequence:
    """Reduce an alignment path (extended-label columns) to a label sequence.

    Adjacent duplicates merge first, then blanks are removed, so a blank
    between equal labels keeps them distinct.
    """
    tokens: list[int] = []
    prev = None
    for col in path:
        if col == prev:
            continue
        prev = col
        if col != alphabet.blank_index:
            tokens.append(alphabet.label_of_column(col))
    return LabelSequence(tuple(tokens))


def greedy_decode(matrix: EmissionMatrix) -> LabelSequence:
    """Argmax per frame (ties to the lowest column), collapsed to labels."""
    if matrix.num_frames == 0:
        return LabelSequence(())
    path = np.argmax(matrix.frames, axis=1)
    return collapse_path((int(c) for c in path), matrix.alphabet)
