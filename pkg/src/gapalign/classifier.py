"""Speech/empty decisions for alignment gaps.

Ships a deterministic baseline (mean non-blank emission mass inside the
gap), an ingestion path for predictions produced by external models, a
dataset builder for training such models, and evaluation metrics with
speech as the positive class.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .align import WordTiming
from .errors import (
    EmptyFrameRangeError,
    MissingGapIdError,
    NoPairsError,
    SetMismatchError,
    UnknownGapIdError,
    ValidationError,
)
from .formats import EmissionMatrix, RefWord
from .gaps import DEFAULT_MIN_GAP, DEFAULT_OVERLAP_THRESHOLD, EMPTY, SPEECH, Gap, extract_gaps, label_gap

BASELINE_THRESHOLD = 0.5


@dataclass(frozen=True)
class GapDatasetRow:
    """One labeled gap destined for a train or test manifest."""

    utterance_id: str
    start: float
    end: float
    label: str


@dataclass(frozen=True)
class ClassifierMetrics:
    """Confusion counts and derived scores, speech as positive class.

    precision/recall/f1 are None when their denominator is zero.
    """

    tp: int
    fp: int
    fn: int
    tn: int
    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
                "accuracy": self.accuracy, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


def gap_frame_range(g: Gap, m: EmissionMatrix) -> tuple[int, int]:
    """Indices [t0, t1) of frames lying fully inside the gap."""
    fd = m.frame_duration
    t0 = math.ceil(g.start / fd - 1e-9)
    t1 = math.floor(g.end / fd + 1e-9)
    if t1 - t0 < 1:
        raise EmptyFrameRangeError(
            f"gap [{g.start}, {g.end}] is shorter than one frame of {fd} s"
        )
    return t0, t1


def baseline_classify(g: Gap, m: EmissionMatrix,
                      threshold: float = BASELINE_THRESHOLD) -> tuple[str, float]:
    """Label a gap from emission mass: speech iff the mean non-blank
    probability over its frames strictly exceeds the threshold."""
    if g.start < -1e-9 or g.end > m.duration + 1e-9:
        raise ValidationError(
            f"gap [{g.start}, {g.end}] outside audio of duration {m.duration}"
        )
    t0, t1 = gap_frame_range(g, m)
    blank = m.values[t0:t1, m.blank_index].astype(np.float64)
    score = float(np.mean(1.0 - np.exp(blank)))
    return (SPEECH if score > threshold else EMPTY), score


def load_predictions(path: str | Path,
                     expected_ids) -> tuple[dict[str, tuple[str, float]], int]:
    """Read ``gap_id label score`` lines covering exactly the expected ids.

    Duplicate ids are tolerated, last occurrence wins; the returned counter
    says how many lines were overwritten that way.
    """
    spath = str(path)
    expected = set(expected_ids)
    out: dict[str, tuple[str, float]] = {}
    duplicates = 0
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValidationError(
                    f"expected 'gap_id label score', got {len(parts)} fields",
                    path=spath, line=lineno,
                )
            gap_id, label, raw_score = parts
            if gap_id not in expected:
                raise UnknownGapIdError(f"prediction for unknown gap {gap_id!r}",
                                        path=spath, line=lineno)
            if label not in (SPEECH, EMPTY):
                raise ValidationError(f"label must be speech or empty, got {label!r}",
                                      path=spath, line=lineno)
            try:
                score = float(raw_score)
            except ValueError as e:
                raise ValidationError(f"bad score: {e}", path=spath, line=lineno) from e
            if not math.isfinite(score):
                raise ValidationError("score must be finite", path=spath, line=lineno)
            if gap_id in out:
                duplicates += 1
            out[gap_id] = (label, score)
    missing = expected - out.keys()
    if missing:
        raise MissingGapIdError(
            f"no prediction for gap {sorted(missing)[0]!r} ({len(missing)} missing)",
            path=spath,
        )
    return out, duplicates


@dataclass
class AlignedUtterance:
    """The per-utterance inputs the dataset builder consumes."""

    utterance_id: str
    timings: list[WordTiming]
    duration: float
    ref_words: list[RefWord]


def build_gap_dataset(utterances: list[AlignedUtterance],
                      min_gap: float = DEFAULT_MIN_GAP,
                      split_fraction: float = 0.8, seed: int = 0,
                      overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD,
                      ) -> tuple[list[GapDatasetRow], list[GapDatasetRow]]:
    """Extract, label, shuffle, and split gaps from aligned utterances.

    The split is over gaps, not utterances; the shuffle is seeded so a given
    (corpus, seed) always produces the same manifests.
    """
    if not 0 <= split_fraction <= 1:
        raise ValidationError(f"split fraction must be in [0, 1], got {split_fraction}")
    rows = []
    for utt in utterances:
        if not utt.utterance_id or any(c.isspace() for c in utt.utterance_id):
            raise ValidationError(f"utterance id {utt.utterance_id!r} unusable in manifests")
        for g in extract_gaps(utt.timings, utt.duration, min_gap):
            rows.append(GapDatasetRow(
                utterance_id=utt.utterance_id, start=g.start, end=g.end,
                label=label_gap(g, utt.ref_words, overlap_threshold),
            ))
    random.Random(seed).shuffle(rows)
    n_train = int(len(rows) * split_fraction)
    return rows[:n_train], rows[n_train:]


def write_gap_dataset(rows: list[GapDatasetRow], path: str | Path) -> None:
    lines = [f"{r.utterance_id} {r.start!r} {r.end!r} {r.label}\n" for r in rows]
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_gap_dataset(path: str | Path) -> list[GapDatasetRow]:
    spath = str(path)
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValidationError(
                    f"expected 'utterance_id start end label', got {len(parts)} fields",
                    path=spath, line=lineno,
                )
            if parts[3] not in (SPEECH, EMPTY):
                raise ValidationError(f"label must be speech or empty, got {parts[3]!r}",
                                      path=spath, line=lineno)
            try:
                start, end = float(parts[1]), float(parts[2])
            except ValueError as e:
                raise ValidationError(f"bad gap bounds: {e}", path=spath, line=lineno) from e
            if not (end > start):
                raise ValidationError(f"gap end {end} <= start {start}", path=spath, line=lineno)
            rows.append(GapDatasetRow(utterance_id=parts[0], start=start, end=end,
                                      label=parts[3]))
    return rows


def metrics_from_confusion(tp: int, fp: int, fn: int, tn: int) -> ClassifierMetrics:
    """Accuracy/precision/recall/F1 from raw counts; None where undefined."""
    total = tp + fp + fn + tn
    if total == 0:
        raise NoPairsError("no predictions to evaluate")
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return ClassifierMetrics(tp=tp, fp=fp, fn=fn, tn=tn,
                             accuracy=(tp + tn) / total,
                             precision=precision, recall=recall, f1=f1)


def eval_classifier(predictions: dict[str, str],
                    labels: dict[str, str]) -> ClassifierMetrics:
    """Confusion-based metrics of predictions against ground-truth labels.

    Both mappings must cover exactly the same gap ids.
    """
    if set(predictions) != set(labels):
        only_pred = sorted(set(predictions) - set(labels))[:3]
        only_true = sorted(set(labels) - set(predictions))[:3]
        raise SetMismatchError(
            f"prediction/label id sets differ (extra predictions {only_pred}, "
            f"unmatched labels {only_true})"
        )
    for source in (predictions, labels):
        for gap_id, label in source.items():
            if label not in (SPEECH, EMPTY):
                raise ValidationError(f"gap {gap_id!r} has label {label!r}")
    tp = fp = fn = tn = 0
    for gap_id, predicted in predictions.items():
        actual = labels[gap_id]
        if predicted == SPEECH:
            if actual == SPEECH:
                tp += 1
            else:
                fp += 1
        elif actual == SPEECH:
            fn += 1
        else:
            tn += 1
    return metrics_from_confusion(tp, fp, fn, tn)
