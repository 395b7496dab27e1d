"""Experiment runner: decode a corpus under a grid of configurations.

For every configuration the whole manifest is decoded and the corpus WER,
mean RTF, and frame/time reductions are reported. Reductions always compare
against the no-collapse baseline sharing the same pruning and LM settings;
when the grid lacks such a baseline it is added automatically.

Timing covers collapse plus beam search only. Emissions and the LM are
loaded before the clock starts. ``timing="repeatable"`` decodes sequentially
and takes the median of ``reps`` repetitions; ``timing="fast"`` does a
single pass.

Report schema (version ``bench.v1``): CSV columns
``collapse_mode,theta,gamma,beam_size,wer_pct,rtf,frame_reduction_pct,
time_reduction_pct,utterances``. The JSON report carries the same rows plus
run metadata, and one ``hyps_<row>.jsonl`` file per configuration records
the per-utterance outputs.
"""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass, replace
from pathlib import Path

from .beam import DecoderConfig, decode
from .emissions import load_emission, read_manifest
from .lm import ArpaModel, parse_arpa
from .metrics import measure_rtf, reduction_percent, wer

CSV_HEADER = (
    "collapse_mode,theta,gamma,beam_size,wer_pct,rtf,"
    "frame_reduction_pct,time_reduction_pct,utterances"
)
SCHEMA_VERSION = "bench.v1"


@dataclass(frozen=True)
class BenchRow:
    collapse_mode: str
    theta: float | None
    gamma: float
    beam_size: int
    wer_pct: float
    rtf: float
    frame_reduction_pct: float
    time_reduction_pct: float
    utterances: int

    def to_csv(self) -> str:
        theta = f"{self.theta:.6g}" if self.theta is not None else ""
        return (
            f"{self.collapse_mode},{theta},{self.gamma:.6g},{self.beam_size},"
            f"{self.wer_pct:.4f},{self.rtf:.6f},{self.frame_reduction_pct:.4f},"
            f"{self.time_reduction_pct:.4f},{self.utterances}"
        )


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...]
    meta: dict

    def to_csv(self) -> str:
        return "\n".join([CSV_HEADER] + [r.to_csv() for r in self.rows]) + "\n"

    def to_json(self) -> str:
        payload = {
            "schema": SCHEMA_VERSION,
            "meta": self.meta,
            "rows": [vars(r) for r in self.rows],
        }
        return json.dumps(payload, indent=2) + "\n"


def _pair_key(cfg: DecoderConfig) -> tuple:
    return (cfg.beam_threshold, cfg.beam_size, cfg.lm_weight, cfg.length_penalty)


def _with_baselines(configs: list[DecoderConfig]) -> list[DecoderConfig]:
    """Insert a no-collapse baseline ahead of any config missing one."""
    out: list[DecoderConfig] = []
    have: set[tuple] = set()
    for cfg in configs:
        if cfg.collapse_mode == "none":
            if _pair_key(cfg) not in have:
                have.add(_pair_key(cfg))
                out.append(cfg)
            continue
        if _pair_key(cfg) not in have:
            have.add(_pair_key(cfg))
            out.append(replace(cfg, collapse_mode="none"))
        out.append(cfg)
    return out


def run_experiment(
    manifest_path: str | Path,
    lm: ArpaModel | str | Path | None,
    configs: list[DecoderConfig],
    timing: str = "repeatable",
    reps: int = 3,
    out_dir: str | Path | None = None,
) -> BenchReport:
    """Decode the corpus under every configuration and aggregate a report."""
    if not configs:
        raise ValueError("config grid is empty")
    if timing not in ("repeatable", "fast"):
        raise ValueError(f"unknown timing mode {timing!r}")
    if timing == "fast":
        reps = 1

    manifest_path = Path(manifest_path)
    utterances = read_manifest(manifest_path)
    emissions = [load_emission(u.emission_path) for u in utterances]
    model = None
    if lm is not None:
        model = lm if isinstance(lm, ArpaModel) else parse_arpa(lm)

    configs = _with_baselines(list(configs))
    rows: list[BenchRow] = []
    baseline_time: dict[tuple, float] = {}
    baseline_frames: dict[tuple, int] = {}
    all_hyps: list[list[dict]] = []

    for cfg in configs:
        total_errors = 0
        total_words = 0
        total_frames = 0
        total_decoded = 0
        total_time = 0.0
        rtf_values: list[float] = []
        hyps: list[dict] = []
        for utt, matrix in zip(utterances, emissions):
            times = []
            result = None
            for _ in range(max(1, reps)):
                start = time.perf_counter()
                result = decode(matrix, cfg, model)
                times.append(time.perf_counter() - start)
            decode_s = statistics.median(times)
            text = result.sequence.text(matrix.alphabet)
            counts = wer(text, utt.reference)
            total_errors += counts.errors
            total_words += counts.words
            total_frames += result.frames_total
            total_decoded += result.frames_decoded
            total_time += decode_s
            if utt.duration_s > 0:
                rtf_values.append(measure_rtf(decode_s, utt.duration_s))
            hyps.append(
                {
                    "id": utt.id,
                    "ref": utt.reference,
                    "hyp": text,
                    "errors": counts.errors,
                    "words": counts.words,
                    "frames_total": result.frames_total,
                    "frames_decoded": result.frames_decoded,
                    "alignment": list(result.alignment),
                    "decode_s": decode_s,
                }
            )

        key = _pair_key(cfg)
        if cfg.collapse_mode == "none":
            baseline_time[key] = total_time
            baseline_frames[key] = total_frames
        frame_reduction = reduction_percent(total_decoded, baseline_frames.get(key, total_frames))
        time_reduction = reduction_percent(total_time, baseline_time.get(key, total_time))
        wer_pct = 100.0 * total_errors / total_words if total_words else 0.0
        rows.append(
            BenchRow(
                collapse_mode=cfg.collapse_mode,
                theta=cfg.theta if cfg.collapse_mode == "strong" else None,
                gamma=cfg.beam_threshold,
                beam_size=cfg.beam_size,
                wer_pct=wer_pct,
                rtf=statistics.mean(rtf_values) if rtf_values else 0.0,
                frame_reduction_pct=frame_reduction,
                time_reduction_pct=time_reduction,
                utterances=len(utterances),
            )
        )
        all_hyps.append(hyps)

    if isinstance(lm, ArpaModel):
        lm_desc = "<preloaded>"
    else:
        lm_desc = str(lm) if lm is not None else None
    report = BenchReport(
        rows=tuple(rows),
        meta={
            "manifest": str(manifest_path),
            "lm": lm_desc,
            "timing": timing,
            "reps": reps,
        },
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.csv").write_text(report.to_csv(), encoding="utf-8")
        (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
        for i, hyps in enumerate(all_hyps):
            lines = "".join(json.dumps(h) + "\n" for h in hyps)
            (out_dir / f"hyps_{i:03d}.jsonl").write_text(lines, encoding="utf-8")
    return report
