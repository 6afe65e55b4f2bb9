"""Two-stage silence-based segmentation of long recordings.

Stage 1 cuts wherever the silence between consecutive words exceeds
``silence_threshold``.  Stage 2 repeatedly splits any segment still longer
than ``max_segment`` at the widest eligible inter-word gap, where eligible
means the cut point keeps at least ``min_edge_distance`` of audio on each
side.  A long segment with no eligible gap is emitted as-is.  Cuts always
land at the midpoint of an inter-word silence, never inside a word.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .formats import RefWord

SILENCE_THRESHOLD = 5.0
MAX_SEGMENT = 30.0
MIN_EDGE_DISTANCE = 10.0


@dataclass(frozen=True)
class Segment:
    """One contiguous slice of the recording and the words inside it."""

    start: float
    end: float
    first_word: int
    last_word: int


def plan_segments(ref_words: list[RefWord], total_duration: float,
                  silence_threshold: float = SILENCE_THRESHOLD,
                  max_segment: float = MAX_SEGMENT,
                  min_edge_distance: float = MIN_EDGE_DISTANCE) -> list[Segment]:
    """Plan segment boundaries over the whole recording.

    Segments are ordered, disjoint, jointly cover [0, total_duration], and
    every word lies wholly inside one segment.  Empty input yields no
    segments.
    """
    if not ref_words:
        return []
    for i in range(1, len(ref_words)):
        if ref_words[i].start < ref_words[i - 1].end - 1e-9:
            raise ValidationError(f"reference words {i - 1} and {i} overlap")
    if total_duration < ref_words[-1].end - 1e-9:
        raise ValidationError(
            f"total duration {total_duration} ends before the last word"
        )

    # Stage 1: hard cuts at long silences.
    cut_points = []
    for i in range(1, len(ref_words)):
        silence = ref_words[i].start - ref_words[i - 1].end
        if silence > silence_threshold:
            cut_points.append((ref_words[i - 1].end + ref_words[i].start) / 2)

    bounds = [0.0, *cut_points, total_duration]
    pieces = [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]

    # Stage 2: split oversized pieces at the widest eligible gap.
    final: list[tuple[float, float]] = []
    stack = list(reversed(pieces))
    while stack:
        start, end = stack.pop()
        if end - start <= max_segment:
            final.append((start, end))
            continue
        best = None
        for i in range(1, len(ref_words)):
            gap_start, gap_end = ref_words[i - 1].end, ref_words[i].start
            mid = (gap_start + gap_end) / 2
            if not (start < mid < end):
                continue
            if mid - start < min_edge_distance or end - mid < min_edge_distance:
                continue
            width = gap_end - gap_start
            # Widest gap wins; ties go to the earliest gap.
            if best is None or width > best[0] or (width == best[0] and gap_start < best[1]):
                best = (width, gap_start, mid)
        if best is None:
            final.append((start, end))
        else:
            stack.append((best[2], end))
            stack.append((start, best[2]))

    segments = []
    w = 0
    for start, end in final:
        first = w
        while w < len(ref_words) and ref_words[w].end <= end + 1e-9:
            w += 1
        segments.append(Segment(start=start, end=end, first_word=first, last_word=w - 1))
    return segments
