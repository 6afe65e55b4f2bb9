"""Word-level Levenshtein alignment, WER, and transcription-status counts.

Reference and hypothesis word lists are aligned with unit-cost edit
operations; the resulting pair sequence drives everything downstream that
needs to know which reference words the ASR transcribed, mangled, or
skipped entirely.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyReferenceError, ValidationError

MATCH = "match"
SUBSTITUTE = "substitute"
DELETE = "delete"
INSERT = "insert"


@dataclass(frozen=True)
class WordAlignmentPair:
    """One edit operation; indices are None on the side the op skips."""

    op: str
    ref_index: int | None
    hyp_index: int | None


@dataclass
class CategorizationCounts:
    """Reference words by transcription outcome, split by disfluency flag."""

    fluent_correct: int = 0
    fluent_incorrect: int = 0
    fluent_untranscribed: int = 0
    disfluent_correct: int = 0
    disfluent_incorrect: int = 0
    disfluent_untranscribed: int = 0

    def as_dict(self) -> dict:
        return {
            "fluent": {
                "correct": self.fluent_correct,
                "incorrect": self.fluent_incorrect,
                "untranscribed": self.fluent_untranscribed,
            },
            "disfluent": {
                "correct": self.disfluent_correct,
                "incorrect": self.disfluent_incorrect,
                "untranscribed": self.disfluent_untranscribed,
            },
        }


def levenshtein_align(ref: list[str], hyp: list[str]) -> list[WordAlignmentPair]:
    """Minimum-edit-distance pairing of reference and hypothesis words.

    Unit costs for substitute/delete/insert.  Backtrace ties prefer
    match/substitute over delete over insert, making the pair sequence
    deterministic.  Empty inputs are fine: the result is all inserts or all
    deletes.
    """
    nr, nh = len(ref), len(hyp)
    dist = [[0] * (nh + 1) for _ in range(nr + 1)]
    for i in range(1, nr + 1):
        dist[i][0] = i
    for j in range(1, nh + 1):
        dist[0][j] = j
    for i in range(1, nr + 1):
        row, prev = dist[i], dist[i - 1]
        rw = ref[i - 1]
        for j in range(1, nh + 1):
            sub = prev[j - 1] + (0 if rw == hyp[j - 1] else 1)
            dele = prev[j] + 1
            ins = row[j - 1] + 1
            row[j] = min(sub, dele, ins)

    pairs: list[WordAlignmentPair] = []
    i, j = nr, nh
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            sub_cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            if dist[i][j] == dist[i - 1][j - 1] + sub_cost:
                op = MATCH if sub_cost == 0 else SUBSTITUTE
                pairs.append(WordAlignmentPair(op, i - 1, j - 1))
                i, j = i - 1, j - 1
                continue
        if i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            pairs.append(WordAlignmentPair(DELETE, i - 1, None))
            i -= 1
            continue
        pairs.append(WordAlignmentPair(INSERT, None, j - 1))
        j -= 1
    pairs.reverse()
    return pairs


def edit_counts(pairs: list[WordAlignmentPair]) -> dict[str, int]:
    """Tally of each operation in an alignment."""
    counts = {MATCH: 0, SUBSTITUTE: 0, DELETE: 0, INSERT: 0}
    for p in pairs:
        counts[p.op] += 1
    return counts


def wer(ref: list[str], hyp: list[str]) -> float:
    """(substitutions + deletions + insertions) / reference length."""
    if not ref:
        raise EmptyReferenceError("WER is undefined for an empty reference")
    counts = edit_counts(levenshtein_align(ref, hyp))
    return (counts[SUBSTITUTE] + counts[DELETE] + counts[INSERT]) / len(ref)


def categorize_words(pairs: list[WordAlignmentPair],
                     ref_flags: list[bool]) -> CategorizationCounts:
    """Bucket each reference word by outcome and disfluency flag.

    match -> correct, substitute -> incorrect, delete -> untranscribed.
    Inserts carry no reference word and are ignored.
    """
    num_ref = sum(1 for p in pairs if p.ref_index is not None)
    if len(ref_flags) != num_ref:
        raise ValidationError(
            f"{len(ref_flags)} disfluency flags for {num_ref} reference words"
        )
    c = CategorizationCounts()
    for p in pairs:
        if p.ref_index is None:
            continue
        flag = "disfluent" if ref_flags[p.ref_index] else "fluent"
        outcome = {MATCH: "correct", SUBSTITUTE: "incorrect", DELETE: "untranscribed"}[p.op]
        setattr(c, f"{flag}_{outcome}", getattr(c, f"{flag}_{outcome}") + 1)
    return c


def neighbors_of_untranscribed(pairs: list[WordAlignmentPair]) -> set[int]:
    """Reference indices of transcribed words that border a deleted word.

    "Transcribed" means matched or substituted (both carry hypothesis
    timings).  Adjacency is by reference position; deletions at the sequence
    edges contribute only their one existing neighbor.
    """
    op_by_ref = {p.ref_index: p.op for p in pairs if p.ref_index is not None}
    out = set()
    for idx, op in op_by_ref.items():
        if op != DELETE:
            continue
        for neighbor in (idx - 1, idx + 1):
            if op_by_ref.get(neighbor) in (MATCH, SUBSTITUTE):
                out.add(neighbor)
    return out
