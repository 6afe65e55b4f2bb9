"""Alignment gaps: extraction from word timings, labeling, coverage counts.

A gap is audio time not claimed by any aligned word.  Gaps at least
``min_gap`` long are the candidate locations of untranscribed speech; they
are labeled ``speech`` or ``empty`` against reference timings, and coverage
counters report how many reference words fall inside them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .align import WordTiming
from .errors import ValidationError
from .formats import RefWord
from .textalign import DELETE, WordAlignmentPair

DEFAULT_MIN_GAP = 0.3
DEFAULT_OVERLAP_THRESHOLD = 0.5

SPEECH = "speech"
EMPTY = "empty"


@dataclass
class Gap:
    """One unclaimed interval; label and score are filled by a classifier."""

    start: float
    end: float
    label: str | None = None
    score: float | None = None

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass
class CoverageReport:
    """How many words of each transcription class sit inside the gap union.

    ``fractions[i]`` is the share of reference word i's duration lying in
    the union of the given gaps.
    """

    untranscribed_covered: int = 0
    untranscribed_uncovered: int = 0
    transcribed_covered: int = 0
    transcribed_uncovered: int = 0
    fractions: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "untranscribed": {"covered": self.untranscribed_covered,
                              "uncovered": self.untranscribed_uncovered},
            "transcribed": {"covered": self.transcribed_covered,
                            "uncovered": self.transcribed_uncovered},
        }


def _check_ordered(timings: list[WordTiming]) -> None:
    for i, w in enumerate(timings):
        if w.end <= w.start:
            raise ValidationError(f"word {i} has end {w.end} <= start {w.start}")
        if i and w.start < timings[i - 1].end - 1e-9:
            raise ValidationError(
                f"word {i} starts at {w.start} before word {i - 1} ends at {timings[i - 1].end}"
            )


def extract_gaps(timings: list[WordTiming], audio_duration: float,
                 min_gap: float = DEFAULT_MIN_GAP) -> list[Gap]:
    """Intervals not claimed by any word, at least ``min_gap`` long.

    Candidates are the stretch before the first word, the stretches between
    consecutive words, and the stretch after the last word.  With no words
    at all the whole audio is one candidate.
    """
    if min_gap <= 0:
        raise ValidationError(f"min_gap must be > 0, got {min_gap}")
    _check_ordered(timings)
    if timings and audio_duration < timings[-1].end - 1e-9:
        raise ValidationError(
            f"audio duration {audio_duration} ends before the last word at {timings[-1].end}"
        )
    edges = [0.0]
    for w in timings:
        edges.extend((w.start, w.end))
    edges.append(max(audio_duration, edges[-1]))
    gaps = []
    for k in range(0, len(edges), 2):
        start, end = edges[k], edges[k + 1]
        if end - start >= min_gap:
            gaps.append(Gap(start=start, end=end))
    return gaps


def _overlap(a_start: float, a_end: float, b_start: float, b_end: float) -> float:
    return max(0.0, min(a_end, b_end) - max(a_start, b_start))


def _union_overlap(word: RefWord, gaps: list[Gap]) -> float:
    """Overlap of a word with the union of gaps (handles any overlaps)."""
    spans = sorted((g.start, g.end) for g in gaps)
    merged: list[list[float]] = []
    for s, e in spans:
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return sum(_overlap(word.start, word.end, s, e) for s, e in merged)


def label_gap(g: Gap, ref_words: list[RefWord],
              overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD) -> str:
    """``speech`` iff some reference word lies mostly (strictly more than
    ``overlap_threshold`` of its duration) inside the gap."""
    for w in ref_words:
        if _overlap(w.start, w.end, g.start, g.end) / (w.end - w.start) > overlap_threshold:
            return SPEECH
    return EMPTY


def _word_classes(ref_words: list[RefWord],
                  pairs: list[WordAlignmentPair]) -> list[str]:
    """Per reference word: 'untranscribed' for deletions, else 'transcribed'."""
    classes = [""] * len(ref_words)
    for p in pairs:
        if p.ref_index is None:
            continue
        if p.ref_index >= len(ref_words):
            raise ValidationError(
                f"alignment pair references word {p.ref_index} of {len(ref_words)}"
            )
        classes[p.ref_index] = "untranscribed" if p.op == DELETE else "transcribed"
    missing = classes.count("")
    if missing:
        raise ValidationError(f"{missing} reference words missing from alignment pairs")
    return classes


def coverage_counts(gaps: list[Gap], ref_words: list[RefWord],
                    pairs: list[WordAlignmentPair],
                    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD) -> CoverageReport:
    """Covered/uncovered word counts against the union of the given gaps.

    A word is covered iff strictly more than ``overlap_threshold`` of its
    duration lies inside the union.  Pass all gaps for raw coverage or only
    speech-labeled gaps for detection-style counts.
    """
    classes = _word_classes(ref_words, pairs)
    report = CoverageReport()
    for w, cls in zip(ref_words, classes):
        frac = _union_overlap(w, gaps) / (w.end - w.start)
        report.fractions.append(frac)
        covered = frac > overlap_threshold
        if cls == "untranscribed":
            if covered:
                report.untranscribed_covered += 1
            else:
                report.untranscribed_uncovered += 1
        elif covered:
            report.transcribed_covered += 1
        else:
            report.transcribed_uncovered += 1
    return report


def detection_counts(gaps: list[Gap], ref_words: list[RefWord],
                     pairs: list[WordAlignmentPair],
                     overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD) -> dict:
    """Three-way detection outcome per word class, from labeled gaps.

    classified_and_covered: the word lies mostly inside the union of
    speech-labeled gaps.  classified_but_uncovered: it touches a speech gap
    without being mostly inside the union.  not_classified: it touches no
    speech gap at all.  The three buckets partition each word class.
    """
    for g in gaps:
        if g.label not in (SPEECH, EMPTY):
            raise ValidationError("detection counts need every gap labeled speech or empty")
    speech_gaps = [g for g in gaps if g.label == SPEECH]
    classes = _word_classes(ref_words, pairs)
    out = {
        "transcribed": {"classified_and_covered": 0, "not_classified": 0,
                        "classified_but_uncovered": 0},
        "untranscribed": {"classified_and_covered": 0, "not_classified": 0,
                          "classified_but_uncovered": 0},
    }
    for w, cls in zip(ref_words, classes):
        frac = _union_overlap(w, speech_gaps) / (w.end - w.start)
        if frac > overlap_threshold:
            bucket = "classified_and_covered"
        elif any(_overlap(w.start, w.end, g.start, g.end) > 0 for g in speech_gaps):
            bucket = "classified_but_uncovered"
        else:
            bucket = "not_classified"
        out[cls][bucket] += 1
    return out
