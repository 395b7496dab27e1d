"""FastAPI service wrapping the decoding toolkit.

Holds parsed language models in memory (register once, decode many) and
exposes decode, greedy, collapse, synth, bench, and corpus-stats endpoints.
Run it with ``ctc-collapse serve`` or mount ``create_app()`` under any ASGI
server.
"""

from __future__ import annotations

import math
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..beam import DecoderConfig, decode
from ..bench import SCHEMA_VERSION, run_experiment
from ..collapse import blank_collapse
from ..emissions import (
    Alphabet,
    AlphabetError,
    EmissionError,
    EmissionMatrix,
    ManifestError,
    load_emission,
    read_manifest,
)
from ..greedy import greedy_decode
from ..lm import ArpaFormatError, ArpaModel, parse_arpa
from ..metrics import droppable_count, run_length_histogram
from ..synth import SynthConfig, generate_corpus, sample_transcripts
from . import schemas


class LmRegistry:
    """Named language models shared across requests."""

    def __init__(self):
        self._models: dict[str, ArpaModel] = {}
        self._lock = threading.Lock()

    def register(self, name: str, model: ArpaModel) -> None:
        with self._lock:
            self._models[name] = model

    def get(self, name: str) -> ArpaModel:
        with self._lock:
            model = self._models.get(name)
        if model is None:
            raise HTTPException(status_code=404, detail=f"no language model named {name!r}")
        return model

    def list(self) -> list[tuple[str, ArpaModel]]:
        with self._lock:
            return sorted(self._models.items())


def _build_matrix(payload: schemas.EmissionPayload) -> EmissionMatrix:
    try:
        alphabet = Alphabet(tuple(payload.alphabet.labels), payload.alphabet.blank_index)
        rows = np.asarray(payload.log_probs, dtype=np.float64)
        if rows.size == 0:
            rows = rows.reshape(0, alphabet.size)
        return EmissionMatrix(rows, alphabet)
    except (AlphabetError, EmissionError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _build_config(settings: schemas.DecoderSettings) -> DecoderConfig:
    try:
        return DecoderConfig(
            beam_size=settings.beam_size,
            beam_threshold=settings.beam_threshold if settings.beam_threshold is not None else math.inf,
            lm_weight=settings.lm_weight,
            length_penalty=settings.length_penalty,
            collapse_mode=settings.collapse_mode,
            theta=settings.theta,
            word_separator=settings.word_separator,
        )
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(title="ctc-collapse", version=__version__)
    registry = LmRegistry()

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/v1/lm", response_model=schemas.LmInfo)
    def register_lm(req: schemas.LmRegisterRequest):
        if not Path(req.path).exists():
            raise HTTPException(status_code=404, detail=f"no such file: {req.path}")
        try:
            model = parse_arpa(req.path)
        except ArpaFormatError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        registry.register(req.name, model)
        return schemas.LmInfo(
            name=req.name, order=model.order, vocabulary_size=len(model.vocabulary)
        )

    @app.get("/v1/lm", response_model=list[schemas.LmInfo])
    def list_lms():
        return [
            schemas.LmInfo(name=name, order=m.order, vocabulary_size=len(m.vocabulary))
            for name, m in registry.list()
        ]

    @app.post("/v1/greedy", response_model=schemas.GreedyResponse)
    def greedy(req: schemas.GreedyRequest):
        matrix = _build_matrix(req.emission)
        seq = greedy_decode(matrix)
        return schemas.GreedyResponse(
            tokens=list(seq.tokens), text=seq.text(matrix.alphabet)
        )

    @app.post("/v1/decode", response_model=schemas.DecodeResponse)
    def decode_emission(req: schemas.DecodeRequest):
        matrix = _build_matrix(req.emission)
        cfg = _build_config(req.settings)
        lm = registry.get(req.settings.lm_name) if req.settings.lm_name else None
        result = decode(matrix, cfg, lm)
        return schemas.DecodeResponse(
            tokens=list(result.sequence.tokens),
            text=result.sequence.text(matrix.alphabet),
            log_score=result.log_score,
            alignment=list(result.alignment),
            frames_total=result.frames_total,
            frames_decoded=result.frames_decoded,
        )

    @app.post("/v1/collapse", response_model=schemas.CollapseResponse)
    def collapse_emission(req: schemas.CollapseRequest):
        matrix = _build_matrix(req.emission)
        if req.mode not in ("weak", "strong"):
            raise HTTPException(status_code=422, detail=f"unknown collapse mode {req.mode!r}")
        result = blank_collapse(matrix, req.mode, req.theta if req.mode == "strong" else None)
        total = matrix.num_frames
        kept = len(result.kept_indices)
        return schemas.CollapseResponse(
            kept_indices=list(result.kept_indices),
            frames_total=total,
            frames_kept=kept,
            collapsible_pct=100.0 * (total - kept) / total if total else 0.0,
            log_probs=result.collapsed.frames.tolist() if req.include_frames else None,
        )

    @app.post("/v1/synth", response_model=schemas.SynthResponse)
    def synth(req: schemas.SynthRequest):
        cfg = SynthConfig(
            blank_fraction=req.blank_fraction,
            peak_confidence=req.peak_confidence,
            label_run_p=req.label_run_p,
            blank_run_shape=req.blank_run_shape,
            seed=req.seed,
            frame_shift_s=req.frame_shift_s,
        )
        transcripts = req.transcripts
        if transcripts is None:
            transcripts = sample_transcripts(req.num_utterances, seed=req.seed)
        manifest = generate_corpus(transcripts, cfg, req.out_dir)
        return schemas.SynthResponse(manifest=str(manifest), utterances=len(transcripts))

    @app.post("/v1/bench", response_model=schemas.BenchResponse)
    def bench(req: schemas.BenchRequest):
        lm = registry.get(req.lm_name) if req.lm_name else None
        configs = [
            DecoderConfig(
                beam_size=c.beam_size,
                beam_threshold=c.beam_threshold if c.beam_threshold is not None else math.inf,
                lm_weight=c.lm_weight,
                length_penalty=c.length_penalty,
                collapse_mode=c.collapse_mode,
                theta=c.theta,
            )
            for c in req.configs
        ]
        try:
            report = run_experiment(
                req.manifest, lm, configs, timing=req.timing, reps=req.reps,
                out_dir=req.out_dir,
            )
        except (FileNotFoundError, ManifestError, EmissionError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        rows = [
            schemas.BenchRowModel(
                collapse_mode=r.collapse_mode,
                theta=r.theta,
                gamma=r.gamma if math.isfinite(r.gamma) else None,
                beam_size=r.beam_size,
                wer_pct=r.wer_pct,
                rtf=r.rtf,
                frame_reduction_pct=r.frame_reduction_pct,
                time_reduction_pct=r.time_reduction_pct,
                utterances=r.utterances,
            )
            for r in report.rows
        ]
        return schemas.BenchResponse(schema_version=SCHEMA_VERSION, rows=rows)

    @app.post("/v1/stats", response_model=schemas.StatsResponse)
    def stats(req: schemas.StatsRequest):
        try:
            utterances = read_manifest(req.manifest)
            matrices = [load_emission(u.emission_path) for u in utterances]
        except (FileNotFoundError, ManifestError, EmissionError, AlphabetError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        fractions: list[schemas.FractionRow] = []
        modes: list[tuple[str, float | None]] = [("weak", None)]
        modes += [("strong", t) for t in req.thetas]
        for mode, theta in modes:
            dropped = 0
            total = 0
            for m in matrices:
                dropped += droppable_count(m, mode, theta)
                total += m.num_frames
            fractions.append(
                schemas.FractionRow(
                    mode=mode,
                    theta=theta,
                    collapsible_pct=100.0 * dropped / total if total else 0.0,
                )
            )
        hist = run_length_histogram(req.manifest)
        run_rows = [
            schemas.RunLengthRow(frame_type=kind, run_length=size, count=count)
            for kind in ("blank", "non_blank")
            for size, count in sorted(hist[kind].items())
        ]
        return schemas.StatsResponse(fractions=fractions, run_lengths=run_rows)

    return app
