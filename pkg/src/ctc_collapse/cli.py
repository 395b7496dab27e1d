"""Command line front end.

Subcommands: ``synth`` (generate a corpus), ``stats`` (collapsible fractions
and run-length histograms), ``decode`` (one utterance, locally or against a
running service), ``bench`` (WER/RTF experiment grid), and ``serve`` (start
the HTTP service).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .beam import DecoderConfig, decode as beam_decode
from .bench import run_experiment
from .emissions import load_alphabet, load_emission, read_manifest
from .lm import parse_arpa
from .metrics import droppable_count, run_length_histogram
from .synth import SynthConfig, generate_corpus, sample_transcripts


def _add_decoder_flags(p: argparse.ArgumentParser, grid: bool) -> None:
    if grid:
        p.add_argument("--collapse", default="none",
                       help="comma list of modes: none, weak, strong")
        p.add_argument("--theta", default="0.999",
                       help="comma list of blank thresholds for strong collapse")
        p.add_argument("--gamma", default="50",
                       help="comma list of beam-threshold margins; 'inf' disables")
    else:
        p.add_argument("--collapse", default="none", choices=["none", "weak", "strong"])
        p.add_argument("--theta", type=float, default=0.999)
        p.add_argument("--gamma", type=float, default=50.0)
    p.add_argument("--beam-size", type=int, default=25)
    p.add_argument("--lm-weight", type=float, default=1.57)
    p.add_argument("--length-penalty", type=float, default=-0.64)
    p.add_argument("--word-separator", default=" ")


def _floats(csv: str) -> list[float]:
    return [float(x) for x in csv.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctc-collapse",
                                     description="CTC decoding with blank collapse")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--num-utterances", type=int, default=100)
    p.add_argument("--transcripts", help="file with one transcript per line")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--blank-fraction", type=float, default=0.45)
    p.add_argument("--peak-confidence", type=float, default=0.99)
    p.add_argument("--label-run-p", type=float, default=0.7)
    p.add_argument("--blank-run-shape", type=float, default=2.0)
    p.add_argument("--frame-shift", type=float, default=0.02)

    p = sub.add_parser("stats", help="collapsible fractions and run-length histogram")
    p.add_argument("--manifest", required=True)
    p.add_argument("--theta", default="0.9,0.99,0.999",
                   help="comma list of thresholds to report")
    p.add_argument("--out", help="directory for CSV/JSON output")

    p = sub.add_parser("decode", help="decode a single emission file")
    p.add_argument("--emission", required=True)
    p.add_argument("--alphabet", help="alphabet JSON (default: alphabet.json next to the emission)")
    p.add_argument("--lm", help="ARPA language model")
    _add_decoder_flags(p, grid=False)
    p.add_argument("--server", help="base URL of a running service; decode remotely")
    p.add_argument("--json", action="store_true", help="print a JSON object")

    p = sub.add_parser("bench", help="run a decoding experiment grid")
    p.add_argument("--manifest", required=True)
    p.add_argument("--lm", help="ARPA language model")
    _add_decoder_flags(p, grid=True)
    p.add_argument("--out", required=True, help="directory for report.csv/report.json")
    p.add_argument("--timing", choices=["repeatable", "fast"], default="repeatable")
    p.add_argument("--reps", type=int, default=3)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _cmd_synth(args) -> int:
    cfg = SynthConfig(
        blank_fraction=args.blank_fraction,
        peak_confidence=args.peak_confidence,
        label_run_p=args.label_run_p,
        blank_run_shape=args.blank_run_shape,
        seed=args.seed,
        frame_shift_s=args.frame_shift,
    )
    if args.transcripts:
        transcripts = [
            line.strip()
            for line in Path(args.transcripts).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    else:
        transcripts = sample_transcripts(args.num_utterances, seed=args.seed)
    manifest = generate_corpus(transcripts, cfg, args.out)
    print(manifest)
    return 0


def _cmd_stats(args) -> int:
    thetas = _floats(args.theta)
    utterances = read_manifest(args.manifest)
    matrices = [load_emission(u.emission_path) for u in utterances]
    fraction_rows = []
    for mode, theta in [("weak", None)] + [("strong", t) for t in thetas]:
        dropped = sum(droppable_count(m, mode, theta) for m in matrices)
        total = sum(m.num_frames for m in matrices)
        pct = 100.0 * dropped / total if total else 0.0
        fraction_rows.append((mode, theta, pct))
        label = mode if theta is None else f"strong({theta:g})"
        print(f"collapsible {label}: {pct:.2f}%")
    hist = run_length_histogram(args.manifest)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        lines = ["mode,theta,collapsible_pct"]
        for mode, theta, pct in fraction_rows:
            lines.append(f"{mode},{'' if theta is None else f'{theta:g}'},{pct:.4f}")
        (out / "collapsible_fractions.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        lines = ["frame_type,run_length,count"]
        for kind in ("blank", "non_blank"):
            for size, count in sorted(hist[kind].items()):
                lines.append(f"{kind},{size},{count}")
        (out / "run_lengths.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        payload = {
            "fractions": [
                {"mode": m, "theta": t, "collapsible_pct": p} for m, t, p in fraction_rows
            ],
            "run_lengths": {k: dict(sorted(v.items())) for k, v in hist.items()},
        }
        (out / "stats.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return 0


def _decode_remote(args) -> int:
    import httpx

    alphabet_path = args.alphabet or str(Path(args.emission).parent / "alphabet.json")
    alphabet = load_alphabet(alphabet_path)
    matrix = load_emission(args.emission, alphabet)
    payload = {
        "emission": {
            "log_probs": matrix.frames.tolist(),
            "alphabet": {"labels": list(alphabet.labels), "blank_index": alphabet.blank_index},
        },
        "settings": {
            "beam_size": args.beam_size,
            "beam_threshold": None if math.isinf(args.gamma) else args.gamma,
            "lm_weight": args.lm_weight,
            "length_penalty": args.length_penalty,
            "collapse_mode": args.collapse,
            "theta": args.theta,
            "word_separator": args.word_separator,
        },
    }
    response = httpx.post(args.server.rstrip("/") + "/v1/decode", json=payload, timeout=300.0)
    response.raise_for_status()
    body = response.json()
    if args.json:
        print(json.dumps(body))
    else:
        print(body["text"])
        print(" ".join(str(t) for t in body["alignment"]))
    return 0


def _cmd_decode(args) -> int:
    if args.server:
        return _decode_remote(args)
    alphabet = load_alphabet(args.alphabet) if args.alphabet else None
    matrix = load_emission(args.emission, alphabet)
    lm = parse_arpa(args.lm) if args.lm else None
    cfg = DecoderConfig(
        beam_size=args.beam_size,
        beam_threshold=args.gamma,
        lm_weight=args.lm_weight if lm is not None else 0.0,
        length_penalty=args.length_penalty if lm is not None else 0.0,
        collapse_mode=args.collapse,
        theta=args.theta,
        word_separator=args.word_separator,
    )
    result = beam_decode(matrix, cfg, lm)
    if args.json:
        print(json.dumps({
            "text": result.sequence.text(matrix.alphabet),
            "tokens": list(result.sequence.tokens),
            "log_score": result.log_score,
            "alignment": list(result.alignment),
            "frames_total": result.frames_total,
            "frames_decoded": result.frames_decoded,
        }))
    else:
        print(result.sequence.text(matrix.alphabet))
        print(" ".join(str(t) for t in result.alignment))
    return 0


def _cmd_bench(args) -> int:
    modes = [m.strip() for m in args.collapse.split(",") if m.strip()]
    thetas = _floats(args.theta)
    gammas = [math.inf if g.strip() in ("inf", "none") else float(g)
              for g in args.gamma.split(",") if g.strip()]
    lm = parse_arpa(args.lm) if args.lm else None
    lm_weight = args.lm_weight if lm is not None else 0.0
    length_penalty = args.length_penalty if lm is not None else 0.0
    configs = []
    for gamma in gammas:
        for mode in modes:
            for theta in thetas if mode == "strong" else [0.999]:
                configs.append(
                    DecoderConfig(
                        beam_size=args.beam_size,
                        beam_threshold=gamma,
                        lm_weight=lm_weight,
                        length_penalty=length_penalty,
                        collapse_mode=mode,
                        theta=theta,
                        word_separator=args.word_separator,
                    )
                )
    report = run_experiment(
        args.manifest, lm, configs, timing=args.timing, reps=args.reps, out_dir=args.out
    )
    print(report.to_csv(), end="")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "synth": _cmd_synth,
        "stats": _cmd_stats,
        "decode": _cmd_decode,
        "bench": _cmd_bench,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except Exception as exc:  # surface a clean one-liner, exit nonzero
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
