"""Emission matrix I/O, alphabet files, and manifests."""

from __future__ import annotations

import json
import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctc_collapse import (
    Alphabet,
    EmissionMatrix,
    Utterance,
    load_alphabet,
    load_emission,
    read_manifest,
    save_alphabet,
    save_emission,
    write_manifest,
)
from ctc_collapse.emissions import (
    AlphabetError,
    DimensionError,
    HeaderError,
    ManifestError,
    NormalizationError,
)
from helpers import make_random_emission

ALPHA2 = Alphabet(("a", "b"), blank_index=0)


def ctce_bytes(rows: list[list[float]], version: int = 1) -> bytes:
    t = len(rows)
    v = len(rows[0]) if rows else 3
    payload = b"".join(struct.pack("<f", x) for row in rows for x in row)
    return b"CTCE" + struct.pack("<III", version, t, v) + payload


class TestCtceFormat:
    def test_load_stated_example(self, tmp_path):
        rows = [
            [math.log(0.5), math.log(0.25), math.log(0.25)],
            [0.0, -math.inf, -math.inf],
        ]
        path = tmp_path / "x.ctce"
        path.write_bytes(ctce_bytes(rows))
        m = load_emission(path, ALPHA2)
        assert m.num_frames == 2
        expected = np.array(rows, dtype=np.float32).astype(np.float64)
        assert np.array_equal(m.frames, expected)

    def test_row_sum_violation_rejected(self, tmp_path):
        rows = [[math.log(1.0), math.log(0.25), math.log(0.25)]]  # sums to 1.5
        path = tmp_path / "bad.ctce"
        path.write_bytes(ctce_bytes(rows))
        with pytest.raises(NormalizationError):
            load_emission(path, ALPHA2)

    def test_empty_matrix_is_legal(self, tmp_path):
        path = tmp_path / "empty.ctce"
        path.write_bytes(ctce_bytes([]))
        m = load_emission(path, ALPHA2)
        assert m.num_frames == 0

    def test_empty_matrix_saves_header_only(self, tmp_path):
        m = EmissionMatrix(np.zeros((0, 3)), ALPHA2)
        save_emission(m, tmp_path / "e.ctce")
        assert (tmp_path / "e.ctce").stat().st_size == 16
        assert load_emission(tmp_path / "e.ctce", ALPHA2).num_frames == 0

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.ctce"
        path.write_bytes(b"NOPE" + b"\x00" * 12)
        with pytest.raises(HeaderError):
            load_emission(path, ALPHA2)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "x.ctce"
        path.write_bytes(ctce_bytes([], version=7))
        with pytest.raises(HeaderError):
            load_emission(path, ALPHA2)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "x.ctce"
        path.write_bytes(b"CTCE\x01\x00")
        with pytest.raises(HeaderError):
            load_emission(path, ALPHA2)

    def test_payload_size_mismatch(self, tmp_path):
        path = tmp_path / "x.ctce"
        path.write_bytes(b"CTCE" + struct.pack("<III", 1, 2, 3) + b"\x00" * 8)
        with pytest.raises(DimensionError):
            load_emission(path, ALPHA2)

    def test_alphabet_size_mismatch(self, tmp_path):
        rows = [[math.log(0.5), math.log(0.5)]]
        path = tmp_path / "x.ctce"
        path.write_bytes(b"CTCE" + struct.pack("<III", 1, 1, 2)
                         + b"".join(struct.pack("<f", x) for x in rows[0]))
        with pytest.raises(DimensionError):
            load_emission(path, ALPHA2)

    def test_companion_alphabet_used_by_default(self, tmp_path):
        save_alphabet(ALPHA2, tmp_path / "alphabet.json")
        m = EmissionMatrix(np.log([[0.5, 0.25, 0.25]]), ALPHA2)
        save_emission(m, tmp_path / "u.ctce")
        loaded = load_emission(tmp_path / "u.ctce")
        assert loaded.alphabet == ALPHA2
        assert np.allclose(loaded.frames, m.frames, rtol=1e-6)

    def test_missing_companion_alphabet(self, tmp_path):
        m = EmissionMatrix(np.log([[0.5, 0.25, 0.25]]), ALPHA2)
        save_emission(m, tmp_path / "u.ctce")
        with pytest.raises(AlphabetError):
            load_emission(tmp_path / "u.ctce")

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), t=st.integers(0, 20), n=st.integers(1, 6))
    def test_round_trip_identity(self, tmp_path_factory, seed, t, n):
        rng = np.random.default_rng(seed)
        m = make_random_emission(rng, t, n)
        base = tmp_path_factory.mktemp("rt")
        save_emission(m, base / "m.ctce")
        once = load_emission(base / "m.ctce", m.alphabet)
        # One float32 rounding on the way to disk, bit-exact ever after.
        assert np.allclose(once.frames, m.frames, rtol=1e-6, atol=0.0, equal_nan=False)
        save_emission(once, base / "m2.ctce")
        assert load_emission(base / "m2.ctce", m.alphabet) == once
        assert (base / "m.ctce").read_bytes() == (base / "m2.ctce").read_bytes()

    def test_round_trip_with_inf(self, tmp_path):
        with np.errstate(divide="ignore"):
            m = EmissionMatrix(np.log([[1.0, 0.0, 0.0], [0.25, 0.5, 0.25]]), ALPHA2)
        save_emission(m, tmp_path / "m.ctce")
        loaded = load_emission(tmp_path / "m.ctce", ALPHA2)
        assert np.allclose(loaded.frames, m.frames, rtol=1e-6, atol=0.0)
        assert np.isneginf(loaded.frames[0, 1]) and np.isneginf(loaded.frames[0, 2])


class TestEmissionMatrixInvariants:
    def test_rejects_nan(self):
        with pytest.raises(NormalizationError):
            EmissionMatrix(np.array([[0.0, math.nan, -1.0]]), ALPHA2)

    def test_rejects_positive_inf(self):
        with pytest.raises(NormalizationError):
            EmissionMatrix(np.array([[math.inf, -1.0, -1.0]]), ALPHA2)

    def test_frames_read_only(self):
        m = EmissionMatrix(np.log([[0.5, 0.25, 0.25]]), ALPHA2)
        with pytest.raises(ValueError):
            m.frames[0, 0] = 0.0

    def test_rows_stay_stochastic_after_load(self, tmp_path):
        rng = np.random.default_rng(3)
        m = make_random_emission(rng, 12, 4)
        save_emission(m, tmp_path / "m.ctce")
        loaded = load_emission(tmp_path / "m.ctce", m.alphabet)
        sums = np.exp(loaded.frames).sum(axis=1)
        assert np.all(np.abs(sums - 1.0) <= 1e-4)


class TestAlphabet:
    def test_round_trip(self, tmp_path):
        save_alphabet(ALPHA2, tmp_path / "a.json")
        assert load_alphabet(tmp_path / "a.json") == ALPHA2

    def test_duplicate_labels_rejected(self):
        with pytest.raises(AlphabetError):
            Alphabet(("a", "a"))

    def test_empty_label_rejected(self):
        with pytest.raises(AlphabetError):
            Alphabet(("a", ""))

    def test_blank_index_range(self):
        with pytest.raises(AlphabetError):
            Alphabet(("a",), blank_index=2)
        assert Alphabet(("a",), blank_index=1).size == 2

    def test_column_mapping_with_interior_blank(self):
        alpha = Alphabet(("a", "b"), blank_index=1)
        assert [alpha.column_of_label(i) for i in range(2)] == [0, 2]
        assert alpha.label_of_column(2) == 1
        with pytest.raises(ValueError):
            alpha.label_of_column(1)


class TestManifest:
    def test_single_line(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"id":"u1","emission":"u1.ctce","ref":"a b","duration_s":1.0}\n')
        (utt,) = read_manifest(path)
        assert utt.id == "u1"
        assert utt.emission_path == tmp_path / "u1.ctce"
        assert utt.reference == "a b"
        assert utt.duration_s == 1.0

    def test_empty_file(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("")
        assert read_manifest(path) == []

    def test_missing_id_names_line(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"emission":"u1.ctce"}\n')
        with pytest.raises(ManifestError, match=":1:"):
            read_manifest(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"id":"u1","emission":"u1.ctce"}\n{broken\n')
        with pytest.raises(ManifestError, match=":2:"):
            read_manifest(path)

    def test_duplicate_id_rejected(self, tmp_path):
        line = '{"id":"u1","emission":"u1.ctce"}\n'
        path = tmp_path / "m.jsonl"
        path.write_text(line + line)
        with pytest.raises(ManifestError, match="duplicate"):
            read_manifest(path)

    def test_missing_ref_is_empty(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"id":"u1","emission":"u1.ctce"}\n')
        (utt,) = read_manifest(path)
        assert utt.reference == ""

    def test_write_read_round_trip(self, tmp_path):
        utts = [
            Utterance(id="a", emission_path=tmp_path / "a.ctce", reference="x", duration_s=1.5),
            Utterance(id="b", emission_path=tmp_path / "b.ctce", reference="", duration_s=0.0),
        ]
        write_manifest(utts, tmp_path / "m.jsonl")
        assert read_manifest(tmp_path / "m.jsonl") == utts

    def test_negative_duration_rejected(self, tmp_path):
        with pytest.raises(ManifestError):
            Utterance(id="u", emission_path="u.ctce", duration_s=-1.0)
