"""Plain helper functions shared across test modules."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ctc_collapse import Alphabet, EmissionMatrix


def make_random_emission(
    rng: np.random.Generator, t: int, n_labels: int, blank_alpha: float = 1.0
) -> EmissionMatrix:
    """Dirichlet rows; blank_alpha > 1 biases mass toward the blank column."""
    alphabet = Alphabet(tuple(chr(ord("a") + i) for i in range(n_labels)), blank_index=0)
    alpha = np.ones(alphabet.size)
    alpha[0] = blank_alpha
    rows = rng.dirichlet(alpha, size=t) if t > 0 else np.zeros((0, alphabet.size))
    with np.errstate(divide="ignore"):
        return EmissionMatrix(np.log(rows), alphabet)


def write_unigram_arpa(path: Path, words: list[str]) -> Path:
    """Uniform unigram model over ``words`` plus sentence markers and <unk>."""
    p = 1.0 / (len(words) + 2)
    lines = ["\\data\\", f"ngram 1={len(words) + 3}", "", "\\1-grams:", "-99\t<s>"]
    for w in ["</s>", "<unk>"] + list(words):
        lines.append(f"{math.log10(p):.6f}\t{w}")
    lines += ["", "\\end\\", ""]
    path.write_text("\n".join(lines), encoding="utf-8")
    return path


def peaky_emission(
    dominant_columns: list[int],
    alphabet: Alphabet,
    confidence: float = 0.98,
) -> EmissionMatrix:
    """One frame per entry; ``dominant_columns[t]`` gets ``confidence`` mass."""
    v = alphabet.size
    rows = np.full((len(dominant_columns), v), (1.0 - confidence) / (v - 1))
    for t, col in enumerate(dominant_columns):
        rows[t, col] = confidence
    return EmissionMatrix(np.log(rows), alphabet)
