"""Batch orchestration: config resolution, manifests, corpus evaluation.

The CLI is a thin argparse layer over this module.  Everything here is
deterministic: given the same config and input files, reports come out
byte-identical.  Batch runs record per-utterance failures and keep going;
aggregation uses only commutative counters and sum/count means.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .align import (
    DEFAULT_C,
    MODIFIED,
    STANDARD,
    WordTiming,
    align_words,
)
from .attention import attention_word_timings
from .classifier import (
    BASELINE_THRESHOLD,
    AlignedUtterance,
    baseline_classify,
    build_gap_dataset,
    load_predictions,
    metrics_from_confusion,
    write_gap_dataset,
)
from .errors import GapAlignError, NoPairsError, ValidationError
from .formats import (
    EmissionMatrix,
    HypTranscript,
    read_attention,
    read_emissions,
    read_hyp_transcript,
    read_ref_transcript,
    read_report,
    write_report,
)
from .gaps import (
    DEFAULT_MIN_GAP,
    DEFAULT_OVERLAP_THRESHOLD,
    EMPTY,
    SPEECH,
    Gap,
    coverage_counts,
    detection_counts,
    extract_gaps,
    label_gap,
)
from .metrics import (
    ALL_WORDS,
    AROUND_UNTRANSCRIBED,
    score_matched_pairs,
    summarize,
)
from .segmenter import MAX_SEGMENT, MIN_EDGE_DISTANCE, SILENCE_THRESHOLD
from .textalign import (
    categorize_words,
    edit_counts,
    levenshtein_align,
    neighbors_of_untranscribed,
)

ATTENTION = "attention"
METHODS = (STANDARD, MODIFIED, ATTENTION)

BASELINE = "baseline"
EXTERNAL = "external"

# min_gap values for the plot-ready coverage sweep CSV.
SWEEP_MIN_GAPS = tuple(round(0.1 * k, 1) for k in range(1, 11))


@dataclass
class PipelineConfig:
    """Tunables shared by the CLI commands; defaults match the shipped
    alignment recipe."""

    c: float = DEFAULT_C
    min_gap: float = DEFAULT_MIN_GAP
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD
    classifier: str = BASELINE
    baseline_threshold: float = BASELINE_THRESHOLD
    silence_threshold: float = SILENCE_THRESHOLD
    max_segment: float = MAX_SEGMENT
    min_edge_distance: float = MIN_EDGE_DISTANCE
    seed: int = 0

    def validate(self) -> None:
        if self.c > 0:
            raise ValidationError(f"c is a log-probability and must be <= 0, got {self.c}")
        if self.min_gap <= 0:
            raise ValidationError(f"min_gap must be > 0, got {self.min_gap}")
        if not 0 < self.overlap_threshold < 1:
            raise ValidationError(
                f"overlap_threshold must be in (0, 1), got {self.overlap_threshold}"
            )
        if self.classifier not in (BASELINE, EXTERNAL):
            raise ValidationError(f"classifier must be baseline or external, got "
                                  f"{self.classifier!r}")
        if self.silence_threshold <= 0 or self.max_segment <= 0:
            raise ValidationError("segment thresholds must be > 0")
        if self.min_edge_distance < 0:
            raise ValidationError("min_edge_distance must be >= 0")


_INT_FIELDS = {"seed"}
_STR_FIELDS = {"classifier"}


def resolve_config(config_path: str | None, overrides: dict) -> PipelineConfig:
    """defaults < config file < explicit flags, with unknown keys rejected."""
    cfg = PipelineConfig()
    known = {f.name for f in fields(PipelineConfig)}
    if config_path is not None:
        try:
            doc = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ValidationError(f"config is not valid JSON: {e}", path=config_path) from e
        if not isinstance(doc, dict):
            raise ValidationError("config must be a JSON object", path=config_path)
        for key, value in doc.items():
            if key not in known:
                raise ValidationError(f"unknown config key {key!r}", path=config_path)
            _set_config_field(cfg, key, value, config_path)
    for key, value in overrides.items():
        if value is not None:
            _set_config_field(cfg, key, value, None)
    cfg.validate()
    return cfg


def _set_config_field(cfg: PipelineConfig, key: str, value, path: str | None) -> None:
    if key in _STR_FIELDS:
        ok = isinstance(value, str)
    elif key in _INT_FIELDS:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    if not ok:
        raise ValidationError(f"config value for {key!r} has wrong type", path=path)
    setattr(cfg, key, value)


@dataclass
class Utterance:
    """One manifest entry; paths are resolved against the manifest's
    directory."""

    utterance_id: str
    emissions: str | None = None
    hypothesis: str | None = None
    reference: str | None = None
    attention: str | None = None
    duration: float | None = None


def read_manifest(path: str | Path) -> list[Utterance]:
    spath = str(path)
    doc = read_report(path)
    if "utterances" not in doc or not isinstance(doc["utterances"], list):
        raise ValidationError("manifest needs an 'utterances' list", path=spath)
    base = Path(path).parent
    out = []
    seen = set()
    for i, entry in enumerate(doc["utterances"]):
        if not isinstance(entry, dict):
            raise ValidationError(f"utterance {i} is not an object", path=spath)
        utt_id = entry.get("id")
        if not isinstance(utt_id, str) or not utt_id or any(c.isspace() for c in utt_id):
            raise ValidationError(f"utterance {i} has unusable id {utt_id!r}", path=spath)
        if utt_id in seen:
            raise ValidationError(f"duplicate utterance id {utt_id!r}", path=spath)
        seen.add(utt_id)
        u = Utterance(utterance_id=utt_id)
        for key in ("emissions", "hypothesis", "reference", "attention"):
            value = entry.get(key)
            if value is not None:
                if not isinstance(value, str):
                    raise ValidationError(f"utterance {utt_id}: {key} must be a path",
                                          path=spath)
                setattr(u, key, str(base / value))
        duration = entry.get("duration")
        if duration is not None:
            if isinstance(duration, bool) or not isinstance(duration, (int, float)):
                raise ValidationError(f"utterance {utt_id}: duration must be a number",
                                      path=spath)
            u.duration = float(duration)
        unknown = set(entry) - {"id", "emissions", "hypothesis", "reference",
                                "attention", "duration"}
        if unknown:
            raise ValidationError(
                f"utterance {utt_id}: unknown keys {sorted(unknown)}", path=spath
            )
        out.append(u)
    return out


def _need(u: Utterance, key: str) -> str:
    value = getattr(u, key)
    if value is None:
        raise ValidationError(f"utterance {u.utterance_id} has no {key} file")
    return value


def r3(x: float) -> float:
    """Times in output files are rendered at millisecond resolution."""
    return round(x, 3)


def timings_record(timings: list[WordTiming]) -> list[dict]:
    return [{"word_index": t.word_index, "text": t.text,
             "start": r3(t.start), "end": r3(t.end)} for t in timings]


def write_alignment_file(path: str | Path, timings: list[WordTiming], *,
                         variant: str, c: float | None, frame_duration: float,
                         duration: float, dropped_chars: int = 0) -> None:
    write_report({
        "variant": variant,
        "c": c,
        "frame_duration": frame_duration,
        "duration": r3(duration),
        "dropped_chars": dropped_chars,
        "words": timings_record(timings),
    }, path)


def read_alignment_file(path: str | Path) -> dict:
    spath = str(path)
    doc = read_report(path)
    for key in ("variant", "duration", "words"):
        if key not in doc:
            raise ValidationError(f"alignment file missing {key!r}", path=spath)
    if not isinstance(doc["words"], list):
        raise ValidationError("'words' must be a list", path=spath)
    prev_end = None
    for i, w in enumerate(doc["words"]):
        if not isinstance(w, dict) or not {"word_index", "text", "start", "end"} <= set(w):
            raise ValidationError(f"word {i} is missing fields", path=spath)
        if not (isinstance(w["start"], (int, float)) and isinstance(w["end"], (int, float))):
            raise ValidationError(f"word {i} has non-numeric times", path=spath)
        if w["end"] <= w["start"]:
            raise ValidationError(f"word {i} has end <= start", path=spath)
        if prev_end is not None and w["start"] < prev_end:
            raise ValidationError(f"word {i} overlaps its predecessor", path=spath)
        prev_end = w["end"]
    return doc


def alignment_timings(doc: dict) -> list[WordTiming]:
    return [WordTiming(word_index=w["word_index"], text=w["text"],
                       start=float(w["start"]), end=float(w["end"]))
            for w in doc["words"]]


def write_gaps_file(path: str | Path, utterance_id: str, duration: float,
                    min_gap: float, gaps: list[Gap], *,
                    classifier: str | None = None) -> None:
    records = []
    for k, g in enumerate(gaps):
        records.append({"gap_id": f"{utterance_id}:{k}", "start": r3(g.start),
                        "end": r3(g.end), "label": g.label, "score": g.score})
    doc = {"utterance_id": utterance_id, "duration": r3(duration),
           "min_gap": min_gap, "gaps": records}
    if classifier is not None:
        doc["classifier"] = classifier
    write_report(doc, path)


def read_gaps_file(path: str | Path) -> tuple[str, float, float, list[Gap], list[str]]:
    spath = str(path)
    doc = read_report(path)
    for key in ("utterance_id", "duration", "min_gap", "gaps"):
        if key not in doc:
            raise ValidationError(f"gaps file missing {key!r}", path=spath)
    if not isinstance(doc["gaps"], list):
        raise ValidationError("'gaps' must be a list", path=spath)
    gaps, gap_ids = [], []
    prev_end = None
    for i, g in enumerate(doc["gaps"]):
        if not isinstance(g, dict) or not {"gap_id", "start", "end"} <= set(g):
            raise ValidationError(f"gap {i} is missing fields", path=spath)
        start, end = g["start"], g["end"]
        if not (isinstance(start, (int, float)) and isinstance(end, (int, float))
                and end > start):
            raise ValidationError(f"gap {i} has invalid bounds", path=spath)
        if prev_end is not None and start < prev_end:
            raise ValidationError(f"gap {i} overlaps its predecessor", path=spath)
        prev_end = end
        gaps.append(Gap(start=float(start), end=float(end),
                        label=g.get("label"), score=g.get("score")))
        gap_ids.append(str(g["gap_id"]))
    if len(set(gap_ids)) != len(gap_ids):
        raise ValidationError("duplicate gap ids", path=spath)
    return (str(doc["utterance_id"]), float(doc["duration"]), float(doc["min_gap"]),
            gaps, gap_ids)


def align_with_method(method: str, *, emissions: EmissionMatrix | None,
                      hyp: HypTranscript | None, attention=None,
                      c: float = DEFAULT_C) -> list[WordTiming]:
    """Run one alignment method; attention needs only the ATTN1 matrix."""
    if method in (STANDARD, MODIFIED):
        if emissions is None or hyp is None:
            raise ValidationError(f"{method} alignment needs emissions and a hypothesis")
        return align_words(emissions, hyp, variant=method, c=c)
    if method == ATTENTION:
        if attention is None:
            raise ValidationError("attention alignment needs an attention file")
        words = hyp.words if hyp is not None else None
        return attention_word_timings(attention, words=words)
    raise ValidationError(f"unknown method {method!r}")


@dataclass
class _UttEval:
    """Per-utterance intermediate results feeding corpus aggregation."""

    utterance_id: str
    ref_words: list
    pairs: list
    duration: float
    gaps: list[Gap]
    gap_ids: list[str]
    truth_labels: list[str]
    predicted: list[tuple[str, float] | None]
    method_scores: dict
    modified_timings: list[WordTiming]


def _evaluate_utterance(u: Utterance, cfg: PipelineConfig, methods: list[str],
                        matches_only: bool) -> _UttEval:
    emissions = read_emissions(_need(u, "emissions"))
    hyp = read_hyp_transcript(_need(u, "hypothesis"))
    ref_words = read_ref_transcript(_need(u, "reference"))
    attention = read_attention(u.attention) if u.attention else None
    duration = u.duration if u.duration is not None else emissions.duration

    pairs = levenshtein_align([w.text for w in ref_words], hyp.words)
    neighbor_refs = neighbors_of_untranscribed(pairs)

    method_scores = {}
    modified_timings = None
    for method in methods:
        timings = align_with_method(method, emissions=emissions, hyp=hyp,
                                    attention=attention, c=cfg.c)
        if method == MODIFIED:
            modified_timings = timings
        scored = score_matched_pairs(pairs, ref_words, timings, matches_only)
        method_scores[method] = {
            ALL_WORDS: scored,
            AROUND_UNTRANSCRIBED: [s for s in scored if s.ref_index in neighbor_refs],
        }
    if modified_timings is None:
        modified_timings = align_words(emissions, hyp, variant=MODIFIED, c=cfg.c)

    gaps = extract_gaps(modified_timings, duration, cfg.min_gap)
    gap_ids = [f"{u.utterance_id}:{k}" for k in range(len(gaps))]
    truth = [label_gap(g, ref_words, cfg.overlap_threshold) for g in gaps]
    predicted: list[tuple[str, float] | None] = [None] * len(gaps)
    if cfg.classifier == BASELINE:
        predicted = [baseline_classify(g, emissions, cfg.baseline_threshold) for g in gaps]
    return _UttEval(utterance_id=u.utterance_id, ref_words=ref_words, pairs=pairs,
                    duration=duration, gaps=gaps, gap_ids=gap_ids, truth_labels=truth,
                    predicted=predicted, method_scores=method_scores,
                    modified_timings=modified_timings)


def evaluate_corpus(utterances: list[Utterance], cfg: PipelineConfig,
                    methods: list[str], matches_only: bool = False,
                    predictions_path: str | None = None,
                    sweep_csv_path: str | None = None) -> dict:
    """Full corpus evaluation: WER, categorization, per-method alignment
    scores, labeled gaps, classifier metrics, coverage and detection counts.

    Per-utterance failures are recorded under "failures" and excluded from
    every aggregate; the run continues.  Raises NoPairsError only when no
    utterance at all could be evaluated.
    """
    for m in methods:
        if m not in METHODS:
            raise ValidationError(f"unknown method {m!r}")
    if cfg.classifier == EXTERNAL and predictions_path is None:
        raise ValidationError("external classifier needs a predictions file")

    results: list[_UttEval] = []
    failures: dict[str, dict] = {}
    for u in utterances:
        try:
            results.append(_evaluate_utterance(u, cfg, methods, matches_only))
        except GapAlignError as e:
            failures[u.utterance_id] = {"error": e.code, "message": str(e)}
    if not results:
        raise NoPairsError("no utterance could be evaluated")

    if cfg.classifier == EXTERNAL:
        all_ids = [gap_id for r in results for gap_id in r.gap_ids]
        preds, _ = load_predictions(predictions_path, all_ids)
        for r in results:
            r.predicted = [preds[gap_id] for gap_id in r.gap_ids]

    sums = {"match": 0, "substitute": 0, "delete": 0, "insert": 0}
    ref_total = 0
    cat_totals: dict[str, dict[str, int]] = {
        "fluent": {"correct": 0, "incorrect": 0, "untranscribed": 0},
        "disfluent": {"correct": 0, "incorrect": 0, "untranscribed": 0},
    }
    pooled_scores = {m: {ALL_WORDS: [], AROUND_UNTRANSCRIBED: []} for m in methods}
    confusion = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    coverage = {"untranscribed": {"covered": 0, "uncovered": 0},
                "transcribed": {"covered": 0, "uncovered": 0}}
    detection = {cls: {"classified_and_covered": 0, "not_classified": 0,
                       "classified_but_uncovered": 0}
                 for cls in ("transcribed", "untranscribed")}
    gap_records: dict[str, list[dict]] = {}

    for r in results:
        counts = edit_counts(r.pairs)
        for op in sums:
            sums[op] += counts[op]
        ref_total += len(r.ref_words)
        cat = categorize_words(r.pairs, [w.disfluent for w in r.ref_words]).as_dict()
        for flag in cat_totals:
            for outcome in cat_totals[flag]:
                cat_totals[flag][outcome] += cat[flag][outcome]
        for m in methods:
            for scope in (ALL_WORDS, AROUND_UNTRANSCRIBED):
                pooled_scores[m][scope].extend(r.method_scores[m][scope])

        for g, (label, score), truth in zip(r.gaps, r.predicted, r.truth_labels):
            g.label, g.score = label, score
            if label == SPEECH:
                key = "tp" if truth == SPEECH else "fp"
            else:
                key = "fn" if truth == SPEECH else "tn"
            confusion[key] += 1
        cov = coverage_counts(r.gaps, r.ref_words, r.pairs, cfg.overlap_threshold)
        for cls, counts_ in cov.as_dict().items():
            for bucket, n in counts_.items():
                coverage[cls][bucket] += n
        det = detection_counts(r.gaps, r.ref_words, r.pairs, cfg.overlap_threshold)
        for cls in detection:
            for bucket in detection[cls]:
                detection[cls][bucket] += det[cls][bucket]
        gap_records[r.utterance_id] = [
            {"gap_id": gap_id, "start": r3(g.start), "end": r3(g.end),
             "label": g.label, "score": g.score, "reference_label": truth}
            for gap_id, g, truth in zip(r.gap_ids, r.gaps, r.truth_labels)
        ]

    scores_report: dict[str, dict] = {}
    for m in methods:
        scores_report[m] = {}
        for scope in (ALL_WORDS, AROUND_UNTRANSCRIBED):
            try:
                scores_report[m][scope] = summarize(pooled_scores[m][scope], scope).as_dict()
            except NoPairsError:
                scores_report[m][scope] = None

    try:
        clf = metrics_from_confusion(**confusion).as_dict()
    except NoPairsError:
        clf = None

    if sweep_csv_path is not None:
        _write_sweep_csv(sweep_csv_path, results, cfg)

    report = {
        "utterance_count": len(results),
        "failures": failures,
        "wer": {
            "wer": (sums["substitute"] + sums["delete"] + sums["insert"]) / ref_total
            if ref_total else None,
            "substitutions": sums["substitute"],
            "deletions": sums["delete"],
            "insertions": sums["insert"],
            "matches": sums["match"],
            "reference_words": ref_total,
        },
        "categorization": cat_totals,
        "scores": scores_report,
        "classifier": clf,
        "coverage": coverage,
        "detection": detection,
        "gaps": gap_records,
        "config": asdict(cfg),
    }
    return report


def _write_sweep_csv(path: str, results: list[_UttEval], cfg: PipelineConfig) -> None:
    """Coverage-vs-min_gap series, one row per candidate gap length."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["min_gap", "gap_count", "untranscribed_covered",
                         "untranscribed_uncovered", "transcribed_covered",
                         "transcribed_uncovered"])
        for min_gap in SWEEP_MIN_GAPS:
            gap_count = 0
            totals = {"untranscribed": [0, 0], "transcribed": [0, 0]}
            for r in results:
                gs = extract_gaps(r.modified_timings, r.duration, min_gap)
                gap_count += len(gs)
                cov = coverage_counts(gs, r.ref_words, r.pairs, cfg.overlap_threshold)
                for cls, counts_ in cov.as_dict().items():
                    totals[cls][0] += counts_["covered"]
                    totals[cls][1] += counts_["uncovered"]
            writer.writerow([min_gap, gap_count,
                             totals["untranscribed"][0], totals["untranscribed"][1],
                             totals["transcribed"][0], totals["transcribed"][1]])


def run_dataset(utterances: list[Utterance], cfg: PipelineConfig,
                split_fraction: float, output_dir: str | Path) -> dict:
    """Align each utterance, harvest labeled gaps, write train/test manifests."""
    aligned = []
    failures: dict[str, dict] = {}
    for u in utterances:
        try:
            emissions = read_emissions(_need(u, "emissions"))
            hyp = read_hyp_transcript(_need(u, "hypothesis"))
            ref_words = read_ref_transcript(_need(u, "reference"))
            duration = u.duration if u.duration is not None else emissions.duration
            timings = align_words(emissions, hyp, variant=MODIFIED, c=cfg.c)
            aligned.append(AlignedUtterance(utterance_id=u.utterance_id,
                                            timings=timings, duration=duration,
                                            ref_words=ref_words))
        except GapAlignError as e:
            failures[u.utterance_id] = {"error": e.code, "message": str(e)}
    if not aligned:
        raise NoPairsError("no utterance could be aligned for the dataset")
    train, test = build_gap_dataset(aligned, cfg.min_gap, split_fraction, cfg.seed,
                                    cfg.overlap_threshold)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_gap_dataset(train, out / "train.txt")
    write_gap_dataset(test, out / "test.txt")

    def stats(rows):
        return {"total": len(rows),
                "speech": sum(1 for r in rows if r.label == SPEECH),
                "empty": sum(1 for r in rows if r.label == EMPTY)}

    report = {
        "train": stats(train),
        "test": stats(test),
        "split_fraction": split_fraction,
        "seed": cfg.seed,
        "min_gap": cfg.min_gap,
        "failures": failures,
    }
    write_report(report, out / "dataset.json")
    return report
