"""Emission matrices, alphabets, and corpus manifests.

File formats
------------
CTCE (binary, little-endian): magic ``b"CTCE"``, u32 version (=1), u32 T,
u32 V, then T*V float32 natural-log probabilities, frame-major. The file
carries no label names; an alphabet JSON lives next to it (``alphabet.json``
in the same directory by default) with ``{"labels": [...], "blank_index": 0}``.

Manifest (JSON lines): one object per utterance with keys ``id``,
``emission`` (path, relative to the manifest), ``ref`` (transcript, optional)
and ``duration_s``.

All log-probabilities are natural logs. In memory everything is float64;
the file stores float32, so saving rounds to float32 resolution once and
file-borne matrices round-trip bit-exactly from then on.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CTCE_MAGIC = b"CTCE"
CTCE_VERSION = 1
ROW_SUM_TOLERANCE = 1e-4


class EmissionError(Exception):
    """Base class for emission file/format problems."""


class HeaderError(EmissionError):
    """Bad magic, unsupported version, or truncated header."""


class DimensionError(EmissionError):
    """Payload size or shape disagrees with the header/alphabet."""


class NormalizationError(EmissionError):
    """A row's probabilities do not sum to 1 within tolerance."""


class ManifestError(Exception):
    """A manifest line could not be parsed."""


class AlphabetError(Exception):
    """Invalid or missing alphabet definition."""


@dataclass(frozen=True)
class Alphabet:
    """Label inventory: non-blank labels plus the position of the blank.

    The extended label set has ``len(labels) + 1`` entries; the blank
    occupies column ``blank_index`` and the remaining columns hold ``labels``
    in order.
    """

    labels: tuple[str, ...]
    blank_index: int = 0

    def __post_init__(self):
        if isinstance(self.labels, list):
            object.__setattr__(self, "labels", tuple(self.labels))
        if len(set(self.labels)) != len(self.labels):
            raise AlphabetError("labels must be unique")
        if any(not lab for lab in self.labels):
            raise AlphabetError("labels must be non-empty strings")
        if not 0 <= self.blank_index <= len(self.labels):
            raise AlphabetError(
                f"blank_index {self.blank_index} out of range for {len(self.labels)} labels"
            )

    @property
    def size(self) -> int:
        """Number of columns in an emission row (labels plus blank)."""
        return len(self.labels) + 1

    def column_of_label(self, label_index: int) -> int:
        """Emission column for the label at ``labels[label_index]``."""
        return label_index if label_index < self.blank_index else label_index + 1

    def label_of_column(self, column: int) -> int:
        """Label index for a non-blank emission column."""
        if column == self.blank_index:
            raise ValueError("blank column has no label index")
        return column if column < self.blank_index else column - 1

    def text(self, label_indices) -> str:
        """Join label strings for a sequence of label indices."""
        return "".join(self.labels[i] for i in label_indices)


@dataclass(frozen=True)
class EmissionMatrix:
    """T x V matrix of per-frame natural-log label probabilities.

    Rows are frames; columns follow the alphabet's extended label order.
    Each row must exponentiate-sum to 1 within ``ROW_SUM_TOLERANCE``.
    Instances are immutable; the backing array is marked read-only.
    """

    frames: np.ndarray
    alphabet: Alphabet

    def __post_init__(self):
        arr = np.asarray(self.frames, dtype=np.float64)
        if arr.ndim != 2:
            arr = arr.reshape(-1, self.alphabet.size)
        if arr.shape[1] != self.alphabet.size and arr.size > 0:
            raise DimensionError(
                f"matrix has {arr.shape[1]} columns, alphabet has {self.alphabet.size}"
            )
        if arr.size == 0:
            arr = arr.reshape(0, self.alphabet.size)
        if np.isnan(arr).any() or np.isposinf(arr).any():
            raise NormalizationError("entries must be finite or -inf")
        if arr.shape[0] > 0:
            sums = np.exp(arr).sum(axis=1)
            bad = np.abs(sums - 1.0) > ROW_SUM_TOLERANCE
            if bad.any():
                t = int(np.argmax(bad))
                raise NormalizationError(
                    f"row {t} exponentiates to {sums[t]:.6f}, expected 1 +/- {ROW_SUM_TOLERANCE}"
                )
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmissionMatrix):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(
            self.frames, other.frames, equal_nan=False
        )


@dataclass(frozen=True)
class Utterance:
    """One corpus entry: an emission file plus its reference transcript."""

    id: str
    emission_path: Path
    reference: str = ""
    duration_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "emission_path", Path(self.emission_path))
        if self.duration_s < 0:
            raise ManifestError(f"utterance {self.id!r}: duration_s must be >= 0")


def save_alphabet(alphabet: Alphabet, path: str | Path) -> None:
    payload = {"labels": list(alphabet.labels), "blank_index": alphabet.blank_index}
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_alphabet(path: str | Path) -> Alphabet:
    path = Path(path)
    if not path.exists():
        raise AlphabetError(f"alphabet file not found: {path}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    try:
        return Alphabet(tuple(payload["labels"]), int(payload["blank_index"]))
    except (KeyError, TypeError) as exc:
        raise AlphabetError(f"malformed alphabet file {path}: {exc}") from exc


def save_emission(matrix: EmissionMatrix, path: str | Path) -> None:
    """Write a CTCE file (float32 payload).

    Saving rounds to float32; a matrix that came from a CTCE file writes
    back bit-identically.
    """
    frames = matrix.frames.astype(np.float32)
    t, v = frames.shape
    header = CTCE_MAGIC + struct.pack("<III", CTCE_VERSION, t, v)
    Path(path).write_bytes(header + frames.tobytes(order="C"))


def load_emission(path: str | Path, alphabet: Alphabet | None = None) -> EmissionMatrix:
    """Read a CTCE file, validating header, dimensions, and row sums.

    When ``alphabet`` is omitted, ``alphabet.json`` next to the emission file
    is used.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 16:
        raise HeaderError(f"{path}: file shorter than the 16-byte CTCE header")
    if raw[:4] != CTCE_MAGIC:
        raise HeaderError(f"{path}: bad magic {raw[:4]!r}")
    version, t, v = struct.unpack("<III", raw[4:16])
    if version != CTCE_VERSION:
        raise HeaderError(f"{path}: unsupported CTCE version {version}")
    payload = raw[16:]
    if len(payload) != 4 * t * v:
        raise DimensionError(
            f"{path}: header promises {t}x{v} float32 ({4 * t * v} bytes), got {len(payload)}"
        )
    if alphabet is None:
        alphabet = load_alphabet(path.parent / "alphabet.json")
    if v != alphabet.size:
        raise DimensionError(
            f"{path}: file has {v} columns, alphabet has {alphabet.size}"
        )
    frames = np.frombuffer(payload, dtype="<f4").reshape(t, v)
    return EmissionMatrix(frames, alphabet)


def read_manifest(path: str | Path) -> list[Utterance]:
    """Parse a JSON-lines manifest into utterances, in file order."""
    path = Path(path)
    utterances: list[Utterance] = []
    seen: set[str] = set()
    base = path.parent
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or "id" not in obj:
            raise ManifestError(f"{path}:{lineno}: missing required key 'id'")
        if "emission" not in obj:
            raise ManifestError(f"{path}:{lineno}: missing required key 'emission'")
        uid = str(obj["id"])
        if uid in seen:
            raise ManifestError(f"{path}:{lineno}: duplicate utterance id {uid!r}")
        seen.add(uid)
        emission = Path(obj["emission"])
        if not emission.is_absolute():
            emission = base / emission
        utterances.append(
            Utterance(
                id=uid,
                emission_path=emission,
                reference=str(obj.get("ref", "") or ""),
                duration_s=float(obj.get("duration_s", 0.0)),
            )
        )
    return utterances


def write_manifest(utterances: list[Utterance], path: str | Path) -> None:
    """Write utterances as JSON lines; emission paths relative to the manifest."""
    path = Path(path)
    base = path.parent
    lines = []
    for utt in utterances:
        emission = utt.emission_path
        try:
            emission = emission.relative_to(base)
        except ValueError:
            pass
        lines.append(
            json.dumps(
                {
                    "id": utt.id,
                    "emission": str(emission),
                    "ref": utt.reference,
                    "duration_s": utt.duration_s,
                }
            )
        )
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
