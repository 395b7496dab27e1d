"""CTC decoding toolkit with blank-frame collapsing.

Core pieces: emission/corpus I/O (:mod:`ctc_collapse.emissions`), blank
collapse (:mod:`ctc_collapse.collapse`), greedy and LM-fused prefix beam
search (:mod:`ctc_collapse.greedy`, :mod:`ctc_collapse.beam`), exact
small-scale oracles (:mod:`ctc_collapse.oracle`), a synthetic corpus
generator (:mod:`ctc_collapse.synth`), and a WER/RTF benchmark harness
(:mod:`ctc_collapse.metrics`, :mod:`ctc_collapse.bench`). A FastAPI service
lives in :mod:`ctc_collapse.service`, and ``ctc-collapse`` is the CLI.
"""

__version__ = "0.1.0"

from .beam import DecodeResult, DecoderConfig, Hypothesis, decode, hypothesis_score, step
from .collapse import (
    BlankFrameSet,
    CollapseResult,
    RunLengthEncoding,
    blank_collapse,
    consecutive_extension,
    remap_alignment,
    run_length_encode,
    strong_blank_frames,
    weak_blank_frames,
)
from .emissions import (
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
from .greedy import LabelSequence, collapse_path, greedy_decode
from .lm import ArpaModel, LmState, parse_arpa, score_sentence_end, score_sequence, score_token
from .metrics import collapsible_fraction, measure_rtf, run_length_histogram, wer
from .oracle import PathEnumeration, ctc_forward, enumerate_posteriors
from .synth import SynthConfig, generate_corpus, generate_emission, sample_transcripts

__all__ = [
    "__version__",
    "Alphabet",
    "ArpaModel",
    "BlankFrameSet",
    "CollapseResult",
    "DecodeResult",
    "DecoderConfig",
    "EmissionMatrix",
    "Hypothesis",
    "LabelSequence",
    "LmState",
    "PathEnumeration",
    "RunLengthEncoding",
    "SynthConfig",
    "Utterance",
    "blank_collapse",
    "collapse_path",
    "collapsible_fraction",
    "consecutive_extension",
    "ctc_forward",
    "decode",
    "enumerate_posteriors",
    "generate_corpus",
    "generate_emission",
    "greedy_decode",
    "hypothesis_score",
    "load_alphabet",
    "load_emission",
    "measure_rtf",
    "parse_arpa",
    "read_manifest",
    "remap_alignment",
    "run_length_encode",
    "run_length_histogram",
    "sample_transcripts",
    "save_alphabet",
    "save_emission",
    "score_sentence_end",
    "score_sequence",
    "score_token",
    "step",
    "strong_blank_frames",
    "weak_blank_frames",
    "wer",
    "write_manifest",
]
