"""CTC forced alignment: trellis construction, backtracking, word timings.

Two trellis variants share one recurrence shape.  ``standard`` is the usual
stay/switch maximum over log-probabilities; ``modified`` clamps the stay
probability of separator rows at a floor ``c`` so the path can park on a
word boundary instead of stretching a word across audio the transcript
never mentions.  That parked stretch becomes an alignment gap downstream.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyAfterNormalizationError,
    InstanceTooLargeError,
    NoPathError,
    PathInfeasibleError,
    ValidationError,
)
from .formats import EmissionMatrix, HypTranscript

STANDARD = "standard"
MODIFIED = "modified"

# Stay probability floor for the modified variant, as a log-probability.
DEFAULT_C = -0.01

# Brute-force oracle bounds; beyond these the path count explodes.
ORACLE_MAX_FRAMES = 12
ORACLE_MAX_TOKENS = 6


@dataclass(frozen=True)
class WordSpan:
    """Token-index range [first, last] of one word, with its text."""

    first: int
    last: int
    word_index: int
    text: str


@dataclass
class TokenSequence:
    """Transcript rendered as vocabulary indices with separators interleaved.

    ``tokens[0]`` is always the separator; consecutive words are split by
    exactly one separator and no trailing separator is appended.
    ``dropped_chars`` counts characters discarded because the vocabulary
    does not contain them.
    """

    tokens: list[int]
    is_separator: list[bool]
    word_spans: list[WordSpan]
    dropped_chars: int = 0

    @property
    def num_tokens(self) -> int:
        return len(self.tokens)


@dataclass
class Trellis:
    """U x T grid of maximal log-probability partial-alignment scores."""

    values: np.ndarray
    variant: str
    c: float | None = None


@dataclass
class FramePath:
    """Best path through the trellis, resolved per frame.

    ``token_at_frame[t]`` is the token active at frame ``t``;
    ``enter_frame[j]``/``exit_frame[j]`` bound token ``j``'s span as
    [enter, exit).
    """

    token_at_frame: list[int]
    enter_frame: list[int]
    exit_frame: list[int]


@dataclass(frozen=True)
class WordTiming:
    """One aligned word with start/end in seconds."""

    word_index: int
    text: str
    start: float
    end: float


def tokenize(hyp: HypTranscript, emissions: EmissionMatrix) -> TokenSequence:
    """Map hypothesis words onto the emission vocabulary.

    Characters absent from the vocabulary are dropped (counted, not fatal);
    a word losing every character is skipped entirely.  Vocabulary lookup is
    case-insensitive on single-character tokens.
    """
    char_to_index: dict[str, int] = {}
    for i, tok in enumerate(emissions.vocab):
        if i == emissions.blank_index:
            continue
        key = tok.lower()
        if len(key) == 1 and key not in char_to_index:
            char_to_index[key] = i
    sep = emissions.separator_index

    tokens = [sep]
    seps = [True]
    spans: list[WordSpan] = []
    dropped = 0
    for word_index, word in enumerate(hyp.words):
        indices = []
        kept = []
        for ch in word.lower():
            idx = char_to_index.get(ch)
            if idx is None or idx == sep:
                dropped += 1
            else:
                indices.append(idx)
                kept.append(ch)
        if not indices:
            continue
        if spans:
            tokens.append(sep)
            seps.append(True)
        first = len(tokens)
        tokens.extend(indices)
        seps.extend([False] * len(indices))
        spans.append(WordSpan(first=first, last=len(tokens) - 1,
                              word_index=word_index, text="".join(kept)))
    if not spans:
        raise EmptyAfterNormalizationError(
            f"no hypothesis characters map into the vocabulary ({dropped} dropped)"
        )
    return TokenSequence(tokens=tokens, is_separator=seps, word_spans=spans,
                         dropped_chars=dropped)


def _stay_terms(m: EmissionMatrix, seq: TokenSequence, variant: str, c: float | None) -> np.ndarray:
    """Per-(row, frame) log-probability of staying on a token.

    Standard: blank probability for every row.  Modified: separator rows use
    max(blank, c) instead.
    """
    blank = m.values[:, m.blank_index].astype(np.float64)  # (T,)
    terms = np.broadcast_to(blank, (seq.num_tokens, blank.shape[0])).copy()
    if variant == MODIFIED:
        sep_rows = np.asarray(seq.is_separator)
        terms[sep_rows] = np.maximum(blank, float(c))
    return terms


def _emit_terms(m: EmissionMatrix, seq: TokenSequence) -> np.ndarray:
    """log-probability of each row's own token, per frame: shape (U, T)."""
    return m.values[:, seq.tokens].astype(np.float64).T


def _build_trellis(m: EmissionMatrix, seq: TokenSequence, variant: str,
                   c: float | None) -> Trellis:
    num_tokens, num_frames = seq.num_tokens, m.num_frames
    if num_frames < num_tokens:
        raise PathInfeasibleError(
            f"{num_frames} frames cannot traverse {num_tokens} tokens"
        )
    stay = _stay_terms(m, seq, variant, c)
    emit = _emit_terms(m, seq)
    grid = np.full((num_tokens, num_frames), -np.inf)
    grid[0, 0] = emit[0, 0]
    for t in range(1, num_frames):
        stay_scores = grid[:, t - 1] + stay[:, t]
        switch_scores = np.empty(num_tokens)
        switch_scores[0] = -np.inf
        switch_scores[1:] = grid[:-1, t - 1] + emit[1:, t]
        grid[:, t] = np.maximum(stay_scores, switch_scores)
    return Trellis(values=grid, variant=variant, c=c)


def build_trellis_standard(m: EmissionMatrix, seq: TokenSequence) -> Trellis:
    """Stay/switch DP: stay consumes the blank, switch consumes the token.

    trellis[j, t] = max(trellis[j, t-1] + lp[t, blank],
                        trellis[j-1, t-1] + lp[t, token_j])
    with trellis[0, 0] = lp[0, token_0] and row 0 accumulating stays.

    Raises PathInfeasibleError when there are fewer frames than tokens.
    """
    return _build_trellis(m, seq, STANDARD, None)


def build_trellis_modified(m: EmissionMatrix, seq: TokenSequence,
                           c: float = DEFAULT_C) -> Trellis:
    """Standard recurrence with separator stays clamped at floor ``c``.

    On separator rows (including row 0) the stay term becomes
    max(lp[t, blank], c), so sitting on a word boundary costs at most -c
    per frame even where the audio carries untranscribed speech.
    """
    if c > 0:
        raise ValidationError(f"c is a log-probability and must be <= 0, got {c}")
    return _build_trellis(m, seq, MODIFIED, c)


def backtrack(trellis: Trellis, m: EmissionMatrix, seq: TokenSequence) -> FramePath:
    """Trace the best path from the trellis corner back to (token 0, frame 0).

    Ties between staying and switching resolve to stay, which pushes each
    token's entry to the earliest frame among equal-score paths and makes
    the result deterministic.
    """
    grid = trellis.values
    num_tokens, num_frames = grid.shape
    if not np.isfinite(grid[num_tokens - 1, num_frames - 1]):
        raise NoPathError("trellis corner is -inf; no alignment path exists")
    stay = _stay_terms(m, seq, trellis.variant, trellis.c)
    emit = _emit_terms(m, seq)

    token_at_frame = [0] * num_frames
    j = num_tokens - 1
    for t in range(num_frames - 1, 0, -1):
        token_at_frame[t] = j
        if j > 0:
            stay_score = grid[j, t - 1] + stay[j, t]
            switch_score = grid[j - 1, t - 1] + emit[j, t]
            if switch_score > stay_score:
                j -= 1
    token_at_frame[0] = j
    if j != 0:
        raise NoPathError("backtrack did not reach token 0 at frame 0")

    enter = [0] * num_tokens
    exit_ = [0] * num_tokens
    prev = 0
    for t, tok in enumerate(token_at_frame):
        if t == 0 or tok != prev:
            enter[tok] = t
        exit_[tok] = t + 1
        prev = tok
    return FramePath(token_at_frame=token_at_frame, enter_frame=enter, exit_frame=exit_)


def path_score(path: FramePath, m: EmissionMatrix, seq: TokenSequence,
               variant: str = STANDARD, c: float | None = None) -> float:
    """Accumulate a path's log-probability with the trellis' own terms.

    Summed in frame order, so for the backtracked path this reproduces the
    trellis corner value exactly.
    """
    stay = _stay_terms(m, seq, variant, c)
    emit = _emit_terms(m, seq)
    score = emit[path.token_at_frame[0], 0]
    for t in range(1, len(path.token_at_frame)):
        j, prev = path.token_at_frame[t], path.token_at_frame[t - 1]
        score = score + (stay[j, t] if j == prev else emit[j, t])
    return float(score)


def path_to_word_timings(path: FramePath, seq: TokenSequence,
                         frame_duration: float) -> list[WordTiming]:
    """Convert token spans on the path to per-word timings in seconds.

    A word runs from its first token's entry frame to its last token's exit
    frame; separator frames belong to no word and surface as gaps.
    """
    timings = []
    for span in seq.word_spans:
        start = path.enter_frame[span.first] * frame_duration
        end = path.exit_frame[span.last] * frame_duration
        timings.append(WordTiming(word_index=span.word_index, text=span.text,
                                  start=start, end=end))
    return timings


def align_words(m: EmissionMatrix, hyp: HypTranscript, variant: str = MODIFIED,
                c: float = DEFAULT_C) -> list[WordTiming]:
    """tokenize -> trellis -> backtrack -> word timings, in one call."""
    seq = tokenize(hyp, m)
    if variant == STANDARD:
        trellis = build_trellis_standard(m, seq)
    elif variant == MODIFIED:
        trellis = build_trellis_modified(m, seq, c)
    else:
        raise ValidationError(f"unknown variant {variant!r}")
    path = backtrack(trellis, m, seq)
    return path_to_word_timings(path, seq, m.frame_duration)


def brute_force_best_path(m: EmissionMatrix, seq: TokenSequence,
                          variant: str = STANDARD,
                          c: float | None = None) -> tuple[list[int], float]:
    """Exhaustive test oracle: best monotone path by full enumeration.

    Enumerates every choice of switch frames (paths start on token 0 at
    frame 0, end on the last token at the last frame, and advance by at
    most one token per frame) and returns the best (token_at_frame, score).
    Guarded by size limits; this is for tests, not production alignment.
    """
    num_tokens, num_frames = seq.num_tokens, m.num_frames
    if num_frames > ORACLE_MAX_FRAMES or num_tokens > ORACLE_MAX_TOKENS:
        raise InstanceTooLargeError(
            f"oracle limited to T <= {ORACLE_MAX_FRAMES}, U <= {ORACLE_MAX_TOKENS}"
        )
    if num_frames < num_tokens:
        raise PathInfeasibleError(
            f"{num_frames} frames cannot traverse {num_tokens} tokens"
        )
    blank = [float(m.values[t, m.blank_index]) for t in range(num_frames)]
    if variant == MODIFIED:
        stay_for_row = [
            [max(b, float(c)) for b in blank] if seq.is_separator[j] else blank
            for j in range(num_tokens)
        ]
    else:
        stay_for_row = [blank] * num_tokens
    emit = [[float(m.values[t, tok]) for t in range(num_frames)] for tok in seq.tokens]

    best_score = -math.inf
    best_path: list[int] | None = None
    best_key: tuple[int, ...] | None = None
    for switches in itertools.combinations(range(1, num_frames), num_tokens - 1):
        tokens_at = []
        j = 0
        switch_set = set(switches)
        score = emit[0][0]
        tokens_at.append(0)
        for t in range(1, num_frames):
            if t in switch_set:
                j += 1
                score += emit[j][t]
            else:
                score += stay_for_row[j][t]
            tokens_at.append(j)
        # Exact ties break like the DP: stay-preference during backtracking
        # minimizes the final switch frame first, so compare reversed tuples.
        key = tuple(reversed(switches))
        if score > best_score or (score == best_score
                                  and (best_key is None or key < best_key)):
            best_score = score
            best_path = tokens_at
            best_key = key
    assert best_path is not None
    if not math.isfinite(best_score):
        raise NoPathError("every enumerated path has -inf score")
    return best_path, best_score
