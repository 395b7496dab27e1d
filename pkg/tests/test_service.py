"""HTTP service surface, plus the CLI talking to a live server."""

from __future__ import annotations

import socket
import threading
import time

import pytest
from fastapi.testclient import TestClient

from ctc_collapse import DecoderConfig, decode, load_emission, read_manifest
from ctc_collapse.service import create_app
from ctc_collapse.synth import WORDS


@pytest.fixture()
def client() -> TestClient:
    return TestClient(create_app())


def emission_payload(matrix) -> dict:
    return {
        "log_probs": matrix.frames.tolist(),
        "alphabet": {
            "labels": list(matrix.alphabet.labels),
            "blank_index": matrix.alphabet.blank_index,
        },
    }


@pytest.fixture()
def sample_matrix(small_corpus):
    utt = read_manifest(small_corpus)[0]
    return load_emission(utt.emission_path), utt


class TestBasics:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"

    def test_lm_registry(self, client, word_lm_path):
        resp = client.post("/v1/lm", json={"name": "words", "path": str(word_lm_path)})
        assert resp.status_code == 200
        info = resp.json()
        assert info == {"name": "words", "order": 1,
                        "vocabulary_size": len(WORDS) + 3}
        listing = client.get("/v1/lm").json()
        assert [m["name"] for m in listing] == ["words"]

    def test_lm_missing_file(self, client, tmp_path):
        resp = client.post("/v1/lm", json={"name": "x", "path": str(tmp_path / "no.arpa")})
        assert resp.status_code == 404

    def test_lm_malformed_file(self, client, tmp_path):
        bad = tmp_path / "bad.arpa"
        bad.write_text("not an arpa file")
        resp = client.post("/v1/lm", json={"name": "x", "path": str(bad)})
        assert resp.status_code == 422


class TestDecodeEndpoints:
    def test_greedy(self, client, sample_matrix):
        matrix, utt = sample_matrix
        resp = client.post("/v1/greedy", json={"emission": emission_payload(matrix)})
        assert resp.status_code == 200
        assert resp.json()["text"] == utt.reference

    def test_decode_matches_library(self, client, sample_matrix):
        matrix, utt = sample_matrix
        body = {
            "emission": emission_payload(matrix),
            "settings": {"beam_size": 8, "beam_threshold": 50.0,
                         "collapse_mode": "strong", "theta": 0.999},
        }
        resp = client.post("/v1/decode", json=body)
        assert resp.status_code == 200
        got = resp.json()
        cfg = DecoderConfig(beam_size=8, beam_threshold=50.0,
                            collapse_mode="strong", theta=0.999)
        expected = decode(matrix, cfg)
        assert got["text"] == expected.sequence.text(matrix.alphabet) == utt.reference
        assert got["alignment"] == list(expected.alignment)
        assert got["frames_decoded"] == expected.frames_decoded < got["frames_total"]
        assert got["log_score"] == pytest.approx(expected.log_score, rel=1e-12)

    def test_decode_with_registered_lm(self, client, sample_matrix, word_lm_path):
        matrix, utt = sample_matrix
        client.post("/v1/lm", json={"name": "words", "path": str(word_lm_path)})
        body = {
            "emission": emission_payload(matrix),
            "settings": {"beam_size": 8, "lm_weight": 0.5, "lm_name": "words"},
        }
        resp = client.post("/v1/decode", json=body)
        assert resp.status_code == 200
        assert resp.json()["text"] == utt.reference

    def test_decode_unknown_lm(self, client, sample_matrix):
        matrix, _ = sample_matrix
        body = {"emission": emission_payload(matrix), "settings": {"lm_name": "ghost"}}
        assert client.post("/v1/decode", json=body).status_code == 404

    def test_unnormalized_rows_rejected(self, client):
        body = {
            "emission": {
                "log_probs": [[0.0, 0.0, 0.0]],
                "alphabet": {"labels": ["a", "b"], "blank_index": 0},
            }
        }
        assert client.post("/v1/greedy", json=body).status_code == 422

    def test_collapse_endpoint(self, client, sample_matrix):
        matrix, _ = sample_matrix
        resp = client.post(
            "/v1/collapse",
            json={"emission": emission_payload(matrix), "mode": "strong",
                  "theta": 0.999, "include_frames": True},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["frames_kept"] == len(body["kept_indices"]) == len(body["log_probs"])
        assert body["frames_kept"] < body["frames_total"]
        assert body["collapsible_pct"] == pytest.approx(
            100.0 * (body["frames_total"] - body["frames_kept"]) / body["frames_total"]
        )
        assert body["kept_indices"] == sorted(body["kept_indices"])

    def test_collapse_bad_mode(self, client, sample_matrix):
        matrix, _ = sample_matrix
        resp = client.post(
            "/v1/collapse", json={"emission": emission_payload(matrix), "mode": "no"}
        )
        assert resp.status_code == 422


class TestCorpusEndpoints:
    def test_synth_then_stats_then_bench(self, client, tmp_path, word_lm_path):
        out = tmp_path / "corpus"
        resp = client.post(
            "/v1/synth",
            json={"out_dir": str(out), "num_utterances": 6, "seed": 17,
                  "peak_confidence": 0.99},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["utterances"] == 6
        manifest = body["manifest"]
        assert len(read_manifest(manifest)) == 6

        resp = client.post("/v1/stats", json={"manifest": manifest, "thetas": [0.9, 0.999]})
        assert resp.status_code == 200
        stats = resp.json()
        modes = [(f["mode"], f["theta"]) for f in stats["fractions"]]
        assert modes == [("weak", None), ("strong", 0.9), ("strong", 0.999)]
        weak = stats["fractions"][0]["collapsible_pct"]
        assert all(f["collapsible_pct"] <= weak + 1e-9 for f in stats["fractions"][1:])
        assert any(r["frame_type"] == "blank" for r in stats["run_lengths"])

        client.post("/v1/lm", json={"name": "words", "path": str(word_lm_path)})
        resp = client.post(
            "/v1/bench",
            json={
                "manifest": manifest,
                "lm_name": "words",
                "configs": [{"collapse_mode": "strong", "theta": 0.999,
                             "beam_size": 8, "beam_threshold": 50.0,
                             "lm_weight": 0.5}],
                "timing": "fast",
            },
        )
        assert resp.status_code == 200
        report = resp.json()
        assert report["schema_version"] == "bench.v1"
        assert [r["collapse_mode"] for r in report["rows"]] == ["none", "strong"]
        assert report["rows"][1]["frame_reduction_pct"] > 0

    def test_bench_missing_manifest(self, client, tmp_path):
        resp = client.post(
            "/v1/bench",
            json={"manifest": str(tmp_path / "no.jsonl"), "configs": [{}]},
        )
        assert resp.status_code == 422

    def test_stats_missing_manifest(self, client, tmp_path):
        resp = client.post("/v1/stats", json={"manifest": str(tmp_path / "no.jsonl")})
        assert resp.status_code == 422


class TestCliThinClient:
    @pytest.fixture()
    def server_url(self):
        import uvicorn

        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
        sock.close()
        config = uvicorn.Config(create_app(), host="127.0.0.1", port=port,
                                log_level="error")
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        deadline = time.time() + 10
        while not server.started:
            if time.time() > deadline:
                raise RuntimeError("service did not start")
            time.sleep(0.02)
        yield f"http://127.0.0.1:{port}"
        server.should_exit = True
        thread.join(timeout=5)

    def test_decode_via_server(self, server_url, small_corpus, capsys):
        from ctc_collapse.cli import main

        utt = read_manifest(small_corpus)[0]
        code = main([
            "decode", "--emission", str(utt.emission_path),
            "--server", server_url, "--collapse", "strong", "--theta", "0.999",
            "--gamma", "50", "--beam-size", "8",
        ])
        assert code == 0
        remote_text, remote_alignment = capsys.readouterr().out.splitlines()

        code = main([
            "decode", "--emission", str(utt.emission_path),
            "--collapse", "strong", "--theta", "0.999",
            "--gamma", "50", "--beam-size", "8",
        ])
        assert code == 0
        local_text, local_alignment = capsys.readouterr().out.splitlines()
        assert remote_text == local_text == utt.reference
        assert remote_alignment == local_alignment
