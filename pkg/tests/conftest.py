"""Shared fixtures: ARPA fixtures and synthetic corpora."""

from __future__ import annotations

from pathlib import Path

import pytest

from ctc_collapse.synth import WORDS, SynthConfig, generate_corpus, sample_transcripts
from helpers import write_unigram_arpa

ACCEPTANCE_SEED = 20260810


# Properly normalized 2-gram model: unigrams are uniform 0.25 over
# {a, b, </s>, <unk>}; P(b|a) = P(a|<s>) = 0.5 with back-off weight 2/3.
BIGRAM_ARPA = """\\data\\
ngram 1=5
ngram 2=2

\\1-grams:
-99\t<s>\t-0.1760913
-0.6020600\ta\t-0.1760913
-0.6020600\tb
-0.6020600\t</s>
-0.6020600\t<unk>

\\2-grams:
-0.3010300\t<s> a
-0.3010300\ta b

\\end\\
"""


@pytest.fixture()
def bigram_arpa(tmp_path) -> Path:
    path = tmp_path / "bigram.arpa"
    path.write_text(BIGRAM_ARPA, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def word_lm_path(tmp_path_factory) -> Path:
    return write_unigram_arpa(tmp_path_factory.mktemp("lm") / "words.arpa", WORDS)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory) -> Path:
    """20 utterances; enough for integration tests."""
    cfg = SynthConfig(blank_fraction=0.45, peak_confidence=0.99, seed=101)
    manifest = generate_corpus(
        sample_transcripts(20, seed=101, min_words=2, max_words=5),
        cfg,
        tmp_path_factory.mktemp("small_corpus"),
    )
    return manifest


@pytest.fixture(scope="session")
def acceptance_corpus(tmp_path_factory) -> Path:
    """The 1000-utterance corpus shared by the acceptance criteria."""
    cfg = SynthConfig(
        blank_fraction=0.45, peak_confidence=0.995, seed=ACCEPTANCE_SEED
    )
    manifest = generate_corpus(
        sample_transcripts(1000, seed=ACCEPTANCE_SEED),
        cfg,
        tmp_path_factory.mktemp("acceptance_corpus"),
    )
    return manifest
