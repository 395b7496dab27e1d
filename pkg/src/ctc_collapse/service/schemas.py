"""Pydantic request/response models for the decoding service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class AlphabetSpec(BaseModel):
    labels: list[str]
    blank_index: int = 0


class EmissionPayload(BaseModel):
    """Inline emission: natural-log probability rows, frame-major."""

    log_probs: list[list[float]]
    alphabet: AlphabetSpec


class DecoderSettings(BaseModel):
    beam_size: int = Field(default=25, ge=1)
    beam_threshold: float | None = Field(default=None, ge=0.0, description="log-domain margin; omit for no pruning")
    lm_weight: float = 0.0
    length_penalty: float = 0.0
    collapse_mode: str = "none"
    theta: float = 0.999
    word_separator: str = " "
    lm_name: str | None = None


class DecodeRequest(BaseModel):
    emission: EmissionPayload
    settings: DecoderSettings = DecoderSettings()


class DecodeResponse(BaseModel):
    tokens: list[int]
    text: str
    log_score: float
    alignment: list[int]
    frames_total: int
    frames_decoded: int


class GreedyRequest(BaseModel):
    emission: EmissionPayload


class GreedyResponse(BaseModel):
    tokens: list[int]
    text: str


class CollapseRequest(BaseModel):
    emission: EmissionPayload
    mode: str = "strong"
    theta: float = 0.999
    include_frames: bool = False


class CollapseResponse(BaseModel):
    kept_indices: list[int]
    frames_total: int
    frames_kept: int
    collapsible_pct: float
    log_probs: list[list[float]] | None = None


class LmRegisterRequest(BaseModel):
    name: str
    path: str


class LmInfo(BaseModel):
    name: str
    order: int
    vocabulary_size: int


class SynthRequest(BaseModel):
    out_dir: str
    transcripts: list[str] | None = None
    num_utterances: int = Field(default=10, ge=0)
    seed: int = 0
    blank_fraction: float = 0.45
    peak_confidence: float = 0.99
    label_run_p: float = 0.7
    blank_run_shape: float = 2.0
    frame_shift_s: float = 0.02


class SynthResponse(BaseModel):
    manifest: str
    utterances: int


class BenchConfigSpec(BaseModel):
    collapse_mode: str = "none"
    theta: float = 0.999
    beam_size: int = Field(default=25, ge=1)
    beam_threshold: float | None = None
    lm_weight: float = 0.0
    length_penalty: float = 0.0


class BenchRequest(BaseModel):
    manifest: str
    lm_name: str | None = None
    configs: list[BenchConfigSpec]
    timing: str = "repeatable"
    reps: int = Field(default=3, ge=1)
    out_dir: str | None = None


class BenchRowModel(BaseModel):
    collapse_mode: str
    theta: float | None
    gamma: float | None = None  # None means no threshold pruning
    beam_size: int
    wer_pct: float
    rtf: float
    frame_reduction_pct: float
    time_reduction_pct: float
    utterances: int


class BenchResponse(BaseModel):
    schema_version: str
    rows: list[BenchRowModel]


class StatsRequest(BaseModel):
    manifest: str
    thetas: list[float] = [0.999, 0.99, 0.9]


class FractionRow(BaseModel):
    mode: str
    theta: float | None
    collapsible_pct: float


class RunLengthRow(BaseModel):
    frame_type: str
    run_length: int
    count: int


class StatsResponse(BaseModel):
    fractions: list[FractionRow]
    run_lengths: list[RunLengthRow]


class HealthResponse(BaseModel):
    status: str
    version: str
