"""Alignment-quality scores comparing automatic timings to manual ones.

Each matched word pair gets a position score, a length score, and their
product.  Scores live in (0, 1], equal 1 only on exact agreement, and are
normalized by the reference word's half-length, so they are invariant to
shifting or scaling the time axis.  The reference word is always the first
argument; the metric is not symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

from .align import WordTiming
from .errors import NoPairsError, ZeroLengthReferenceError
from .formats import RefWord
from .textalign import MATCH, SUBSTITUTE, WordAlignmentPair

ALL_WORDS = "all_words"
AROUND_UNTRANSCRIBED = "around_untranscribed"

Span = WordTiming | RefWord


@dataclass(frozen=True)
class ScoredPair:
    """One reference/hypothesis word pair with its three scores."""

    ref_index: int
    hyp_index: int
    ref: Span
    hyp: Span
    m_p: float
    m_l: float
    m: float


@dataclass(frozen=True)
class ScoreSummary:
    """Arithmetic means of the three scores over a set of pairs."""

    scope: str
    count: int
    mean_position: float
    mean_length: float
    mean_combined: float

    def as_dict(self) -> dict:
        return {
            "scope": self.scope,
            "count": self.count,
            "position": self.mean_position,
            "length": self.mean_length,
            "combined": self.mean_combined,
        }


def _center_halflen(w: Span) -> tuple[float, float]:
    return (w.start + w.end) / 2, (w.end - w.start) / 2


def position_score(w1: Span, w2: Span) -> float:
    """1 / (|(p1 - p2) / l1| + 1): midpoint offset in reference half-lengths.

    w1 is the reference word; its half-length l1 must be positive.
    """
    p1, l1 = _center_halflen(w1)
    if l1 <= 0:
        raise ZeroLengthReferenceError(f"reference word has no duration: {w1!r}")
    p2, _ = _center_halflen(w2)
    return 1.0 / (abs((p1 - p2) / l1) + 1.0)


def length_score(w1: Span, w2: Span) -> float:
    """1 / (|(l1 - l2) / l1| + 1): half-length mismatch relative to w1's."""
    _, l1 = _center_halflen(w1)
    if l1 <= 0:
        raise ZeroLengthReferenceError(f"reference word has no duration: {w1!r}")
    _, l2 = _center_halflen(w2)
    return 1.0 / (abs((l1 - l2) / l1) + 1.0)


def combined_score(w1: Span, w2: Span) -> float:
    """Product of the position and length scores."""
    return position_score(w1, w2) * length_score(w1, w2)


def score_matched_pairs(pairs: list[WordAlignmentPair], ref_words: list[RefWord],
                        hyp_timings: list[WordTiming],
                        matches_only: bool = False) -> list[ScoredPair]:
    """Score every alignment pair that has timings on both sides.

    Substituted pairs are scored by default since their hypothesis words
    carry timings too; ``matches_only`` restricts to exact matches.  Pairs
    whose hypothesis word produced no timing (all characters dropped in
    tokenization, say) are skipped.
    """
    allowed = (MATCH,) if matches_only else (MATCH, SUBSTITUTE)
    by_hyp_index = {t.word_index: t for t in hyp_timings}
    scored = []
    for p in pairs:
        if p.op not in allowed:
            continue
        hyp = by_hyp_index.get(p.hyp_index)
        if hyp is None:
            continue
        ref = ref_words[p.ref_index]
        m_p = position_score(ref, hyp)
        m_l = length_score(ref, hyp)
        scored.append(ScoredPair(ref_index=p.ref_index, hyp_index=p.hyp_index,
                                 ref=ref, hyp=hyp, m_p=m_p, m_l=m_l, m=m_p * m_l))
    return scored


def summarize(scored: list[ScoredPair], scope: str = ALL_WORDS) -> ScoreSummary:
    """Mean of each score over the given pairs; at least one is required."""
    if not scored:
        raise NoPairsError(f"no scored pairs in scope {scope!r}")
    n = len(scored)
    return ScoreSummary(
        scope=scope,
        count=n,
        mean_position=sum(s.m_p for s in scored) / n,
        mean_length=sum(s.m_l for s in scored) / n,
        mean_combined=sum(s.m for s in scored) / n,
    )
