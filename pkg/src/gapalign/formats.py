"""On-disk formats: emission/attention matrices, transcripts, reports.

Binary matrix files share one framing: a magic line, a single-line JSON
header, then a raw little-endian float32 payload in row-major order.

Emission file (``CTCEM1``)::

    CTCEM1\\n
    {"vocab": [...], "blank_index": 0, "separator_index": 1,
     "frame_duration": 0.02, "num_frames": 50}\\n
    <num_frames x len(vocab) float32 log-probabilities>

Attention file (``ATTN1``)::

    ATTN1\\n
    {"num_tokens": 4, "num_frames": 120, "frame_duration": 0.02,
     "token_to_word": [0, 0, 1, 1]}\\n
    <num_tokens x num_frames float32 non-negative weights>

Reference transcripts are UTF-8 lines ``start end word disfluent_flag`` with
the flag in {0, 1}; hypothesis transcripts are a single line of
space-separated words.  Reports are JSON documents with one top-level object.

Writers and readers are exact inverses: floats survive bit-identically
(binary payloads are stored as float32; text floats use shortest
round-tripping decimal rendering).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    MalformedHeaderError,
    NonProbabilisticError,
    SizeMismatchError,
    ValidationError,
)

EMISSIONS_MAGIC = b"CTCEM1\n"
ATTENTION_MAGIC = b"ATTN1\n"

# Per-frame probabilities must sum to 1 within this slack (float32 rounding
# plus whatever the producing model's softmax left behind).
ROW_SUM_TOLERANCE = 1e-3


@dataclass
class EmissionMatrix:
    """Frame-wise log-probability grid from a CTC acoustic model.

    ``values`` has shape (num_frames, len(vocab)) and holds natural-log
    probabilities as float32.  ``blank_index`` is the CTC blank label and
    ``separator_index`` the word-delimiter ("|") label.
    """

    vocab: list[str]
    blank_index: int
    separator_index: int
    frame_duration: float
    values: np.ndarray

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def num_labels(self) -> int:
        return self.values.shape[1]

    @property
    def duration(self) -> float:
        """Total audio duration implied by the frame grid, in seconds."""
        return self.num_frames * self.frame_duration


@dataclass(frozen=True)
class RefWord:
    """One manually annotated reference word."""

    text: str
    start: float
    end: float
    disfluent: bool


@dataclass
class HypTranscript:
    """ASR hypothesis: an ordered list of lowercase words."""

    words: list[str]


@dataclass
class AttentionMatrix:
    """Cross-attention weights of shape (num_tokens, num_frames).

    ``token_to_word[k]`` is the word index token ``k`` belongs to, or -1 for
    tokens outside any word (specials, punctuation).
    """

    weights: np.ndarray
    frame_duration: float
    token_to_word: list[int]

    @property
    def num_tokens(self) -> int:
        return self.weights.shape[0]

    @property
    def num_frames(self) -> int:
        return self.weights.shape[1]


def validate_emissions(m: EmissionMatrix, *, path: str | None = None) -> None:
    """Check every EmissionMatrix invariant; raise ValidationError subtypes."""
    v = len(m.vocab)
    if m.values.ndim != 2:
        raise MalformedHeaderError("values must be a 2-d grid", path=path)
    if m.num_frames < 1 or v < 2:
        raise MalformedHeaderError(
            f"need num_frames >= 1 and vocab size >= 2, got {m.num_frames}x{v}", path=path
        )
    if m.values.shape[1] != v:
        raise SizeMismatchError(
            f"value grid has {m.values.shape[1]} columns for a {v}-token vocab", path=path
        )
    if not 0 <= m.blank_index < v:
        raise MalformedHeaderError(f"blank_index {m.blank_index} outside vocab", path=path)
    if not 0 <= m.separator_index < v:
        raise MalformedHeaderError(f"separator_index {m.separator_index} outside vocab", path=path)
    if m.blank_index == m.separator_index:
        raise MalformedHeaderError("blank_index and separator_index must differ", path=path)
    if not (m.frame_duration > 0):
        raise MalformedHeaderError(f"frame_duration must be > 0, got {m.frame_duration}", path=path)
    vals = m.values.astype(np.float64)
    if np.any(np.isnan(vals)) or np.any(vals > 0.0):
        raise NonProbabilisticError("log-probabilities must be <= 0 and not NaN", path=path)
    row_sums = np.exp(vals).sum(axis=1)
    bad = np.where(np.abs(row_sums - 1.0) > ROW_SUM_TOLERANCE)[0]
    if bad.size:
        raise NonProbabilisticError(
            f"frame {bad[0]} probabilities sum to {row_sums[bad[0]]:.6f}", path=path
        )


def write_emissions(m: EmissionMatrix, path: str | Path) -> None:
    validate_emissions(m)
    header = {
        "vocab": m.vocab,
        "blank_index": m.blank_index,
        "separator_index": m.separator_index,
        "frame_duration": m.frame_duration,
        "num_frames": m.num_frames,
    }
    payload = np.ascontiguousarray(m.values, dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(EMISSIONS_MAGIC)
        f.write(json.dumps(header).encode("utf-8") + b"\n")
        f.write(payload)


def read_emissions(path: str | Path) -> EmissionMatrix:
    """Read and validate a CTCEM1 file.

    Raises:
        BadMagicError: the file does not start with the CTCEM1 magic line.
        MalformedHeaderError: header is not valid JSON or declares
            inconsistent fields.
        SizeMismatchError: payload length disagrees with num_frames x vocab.
        NonProbabilisticError: a value is positive or a row's probabilities
            do not sum to 1 within tolerance.
    """
    spath = str(path)
    with open(path, "rb") as f:
        magic = f.read(len(EMISSIONS_MAGIC))
        if magic != EMISSIONS_MAGIC:
            raise BadMagicError(f"expected {EMISSIONS_MAGIC!r}", path=spath)
        header = _read_header_line(
            f,
            spath,
            required={"vocab": list, "blank_index": int, "separator_index": int,
                      "frame_duration": (int, float), "num_frames": int},
        )
        payload = f.read()
    vocab = header["vocab"]
    if not all(isinstance(t, str) for t in vocab):
        raise MalformedHeaderError("vocab entries must be strings", path=spath)
    t, v = header["num_frames"], len(vocab)
    if t < 1 or v < 2:
        raise MalformedHeaderError(f"need num_frames >= 1 and vocab size >= 2, got {t}x{v}",
                                   path=spath)
    expected = t * v * 4
    if len(payload) != expected:
        raise SizeMismatchError(
            f"payload is {len(payload)} bytes, header declares {t}x{v} float32 = {expected}",
            path=spath,
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(t, v)
    values.flags.writeable = False
    m = EmissionMatrix(
        vocab=vocab,
        blank_index=header["blank_index"],
        separator_index=header["separator_index"],
        frame_duration=float(header["frame_duration"]),
        values=values,
    )
    validate_emissions(m, path=spath)
    return m


def validate_attention(a: AttentionMatrix, *, path: str | None = None) -> None:
    if a.weights.ndim != 2:
        raise MalformedHeaderError("weights must be a 2-d grid", path=path)
    if a.num_tokens < 1 or a.num_frames < 1:
        raise MalformedHeaderError(
            f"need num_tokens >= 1 and num_frames >= 1, got {a.weights.shape}", path=path
        )
    if not (a.frame_duration > 0):
        raise MalformedHeaderError(f"frame_duration must be > 0, got {a.frame_duration}", path=path)
    if len(a.token_to_word) != a.num_tokens:
        raise MalformedHeaderError(
            f"token_to_word has {len(a.token_to_word)} entries for {a.num_tokens} tokens",
            path=path,
        )
    # NaN fails the >= comparison, so this also rejects NaN weights.
    if not bool(np.all(a.weights >= 0)):
        raise ValidationError("attention weights must be non-negative", path=path)


def write_attention(a: AttentionMatrix, path: str | Path) -> None:
    validate_attention(a)
    header = {
        "num_tokens": a.num_tokens,
        "num_frames": a.num_frames,
        "frame_duration": a.frame_duration,
        "token_to_word": list(a.token_to_word),
    }
    with open(path, "wb") as f:
        f.write(ATTENTION_MAGIC)
        f.write(json.dumps(header).encode("utf-8") + b"\n")
        f.write(np.ascontiguousarray(a.weights, dtype="<f4").tobytes())


def read_attention(path: str | Path) -> AttentionMatrix:
    spath = str(path)
    with open(path, "rb") as f:
        magic = f.read(len(ATTENTION_MAGIC))
        if magic != ATTENTION_MAGIC:
            raise BadMagicError(f"expected {ATTENTION_MAGIC!r}", path=spath)
        header = _read_header_line(
            f,
            spath,
            required={"num_tokens": int, "num_frames": int,
                      "frame_duration": (int, float), "token_to_word": list},
        )
        payload = f.read()
    k, t = header["num_tokens"], header["num_frames"]
    if k < 1 or t < 1:
        raise MalformedHeaderError(f"need num_tokens >= 1 and num_frames >= 1, got {k}x{t}",
                                   path=spath)
    expected = k * t * 4
    if len(payload) != expected:
        raise SizeMismatchError(
            f"payload is {len(payload)} bytes, header declares {k}x{t} float32 = {expected}",
            path=spath,
        )
    weights = np.frombuffer(payload, dtype="<f4").reshape(k, t)
    weights.flags.writeable = False
    token_to_word = header["token_to_word"]
    if not all(isinstance(w, int) for w in token_to_word):
        raise MalformedHeaderError("token_to_word entries must be integers", path=spath)
    a = AttentionMatrix(weights=weights, frame_duration=float(header["frame_duration"]),
                        token_to_word=token_to_word)
    validate_attention(a, path=spath)
    return a


def _read_header_line(f, path: str, required: dict[str, type | tuple]) -> dict:
    raw = f.readline()
    if not raw.endswith(b"\n"):
        raise MalformedHeaderError("unterminated header line", path=path)
    try:
        header = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise MalformedHeaderError(f"header is not valid JSON: {e}", path=path) from e
    if not isinstance(header, dict):
        raise MalformedHeaderError("header must be a JSON object", path=path)
    for name, typ in required.items():
        if name not in header:
            raise MalformedHeaderError(f"header missing field {name!r}", path=path)
        if not isinstance(header[name], typ) or isinstance(header[name], bool):
            raise MalformedHeaderError(f"header field {name!r} has wrong type", path=path)
    return header


def read_ref_transcript(path: str | Path) -> list[RefWord]:
    """Parse ``start end word flag`` lines into validated RefWords.

    Words are lowercased.  An empty file yields an empty list.
    """
    spath = str(path)
    words: list[RefWord] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValidationError(
                    f"expected 'start end word flag', got {len(parts)} fields",
                    path=spath, line=lineno,
                )
            try:
                start, end = float(parts[0]), float(parts[1])
            except ValueError as e:
                raise ValidationError(f"bad timestamp: {e}", path=spath, line=lineno) from e
            if not (math.isfinite(start) and math.isfinite(end)):
                raise ValidationError("timestamps must be finite", path=spath, line=lineno)
            if end <= start:
                raise ValidationError(f"end {end} <= start {start}", path=spath, line=lineno)
            if parts[3] not in ("0", "1"):
                raise ValidationError(f"disfluent flag must be 0 or 1, got {parts[3]!r}",
                                      path=spath, line=lineno)
            word = RefWord(text=parts[2].lower(), start=start, end=end,
                           disfluent=parts[3] == "1")
            if words and word.start < words[-1].end:
                raise ValidationError(
                    f"word starts at {word.start} before previous word ends at {words[-1].end}",
                    path=spath, line=lineno,
                )
            words.append(word)
    return words


def write_ref_transcript(words: list[RefWord], path: str | Path) -> None:
    lines = []
    for w in words:
        if not w.text or any(c.isspace() for c in w.text):
            raise ValidationError(f"reference word {w.text!r} is empty or contains whitespace")
        lines.append(f"{w.start!r} {w.end!r} {w.text} {1 if w.disfluent else 0}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_hyp_transcript(path: str | Path) -> HypTranscript:
    """Read a one-line hypothesis transcript, lowercasing its words."""
    spath = str(path)
    text = Path(path).read_text(encoding="utf-8")
    words = text.lower().split()
    for w in words:
        if "|" in w:
            raise ValidationError(f"hypothesis word {w!r} contains the separator character",
                                  path=spath)
    return HypTranscript(words=words)


def write_hyp_transcript(h: HypTranscript, path: str | Path) -> None:
    for w in h.words:
        if not w or any(c.isspace() for c in w) or "|" in w:
            raise ValidationError(f"hypothesis word {w!r} violates transcript invariants")
    Path(path).write_text(" ".join(h.words) + "\n", encoding="utf-8")


def write_report(report: dict, path: str | Path) -> None:
    """Write a report as a JSON document with one top-level object."""
    if not isinstance(report, dict):
        raise ValidationError("report must be a single top-level record")
    Path(path).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")


def read_report(path: str | Path) -> dict:
    spath = str(path)
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"not valid JSON: {e}", path=spath) from e
    if not isinstance(doc, dict):
        raise ValidationError("report must be a single top-level record", path=spath)
    return doc
