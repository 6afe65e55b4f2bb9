"""Word timings from encoder-decoder cross-attention via DTW.

The attention grid scores how strongly decoder token ``k`` attends to audio
frame ``t``.  A monotone minimum-cost path through negated weights assigns
each token a contiguous frame interval; word intervals follow from the
token-to-word mapping.  These timings are the comparison signal for scoring
CTC alignments, not a replacement for them.
"""

from __future__ import annotations

import numpy as np

from .align import WordTiming
from .errors import ValidationError
from .formats import AttentionMatrix

# Backtracking preference on exact cost ties, most preferred first:
# diagonal, then same token at the previous frame, then previous token at
# this frame.  Keeps token boundaries deterministic.
_DIAG, _LEFT, _UP = 0, 1, 2


def dtw_path(weights: np.ndarray) -> list[tuple[int, int]]:
    """Minimum-cost monotone path from (0, 0) to (K-1, M-1).

    Cost of visiting (token k, frame t) is -weights[k, t]; admissible moves
    are (k+1, t+1), (k, t+1) and (k+1, t).  Returns the visited (token,
    frame) pairs in path order.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
        raise ValidationError(f"weights must be a non-empty 2-d grid, got shape {w.shape}")
    num_tokens, num_frames = w.shape
    cost = np.full((num_tokens, num_frames), np.inf)
    cost[0, 0] = -w[0, 0]
    for k in range(num_tokens):
        for t in range(num_frames):
            if k == 0 and t == 0:
                continue
            best = np.inf
            if k > 0 and t > 0:
                best = cost[k - 1, t - 1]
            if t > 0 and cost[k, t - 1] < best:
                best = cost[k, t - 1]
            if k > 0 and cost[k - 1, t] < best:
                best = cost[k - 1, t]
            cost[k, t] = best - w[k, t]

    path = [(num_tokens - 1, num_frames - 1)]
    k, t = num_tokens - 1, num_frames - 1
    while (k, t) != (0, 0):
        candidates = []
        if k > 0 and t > 0:
            candidates.append((cost[k - 1, t - 1], _DIAG, k - 1, t - 1))
        if t > 0:
            candidates.append((cost[k, t - 1], _LEFT, k, t - 1))
        if k > 0:
            candidates.append((cost[k - 1, t], _UP, k - 1, t))
        _, _, k, t = min(candidates)
        path.append((k, t))
    path.reverse()
    return path


def token_entry_frames(weights: np.ndarray) -> list[int]:
    """First frame on the DTW path where each token row is reached.

    An all-zero grid carries no signal; in that degenerate case the frames
    are partitioned uniformly, entry[k] = floor(k * M / K).
    """
    w = np.asarray(weights)
    num_tokens, num_frames = w.shape
    if not np.any(w):
        return [k * num_frames // num_tokens for k in range(num_tokens)]
    entries = [0] * num_tokens
    seen = 0
    for k, t in dtw_path(w):
        if k == seen:
            entries[k] = t
            seen += 1
    return entries


def attention_word_timings(a: AttentionMatrix,
                           words: list[str] | None = None) -> list[WordTiming]:
    """Per-word intervals implied by the attention path.

    A word spans from its first token's entry frame to the entry frame of
    the next mapped token group (the final group ends at the last frame).
    Tokens mapped to -1 belong to no word.  Words squeezed to zero frames
    are dropped.  ``words`` optionally supplies texts by word index.
    """
    for k, word_index in enumerate(a.token_to_word):
        if word_index < -1:
            raise ValidationError(f"token {k} maps to invalid word index {word_index}")
    prev = -1
    for word_index in a.token_to_word:
        if word_index != -1:
            if prev != -1 and word_index < prev:
                raise ValidationError("token_to_word word indices must be non-decreasing")
            prev = word_index

    entries = token_entry_frames(a.weights)
    # Group consecutive tokens sharing a word index into (word, first, last).
    groups: list[tuple[int, int, int]] = []
    for k, word_index in enumerate(a.token_to_word):
        if word_index == -1:
            continue
        if groups and groups[-1][0] == word_index:
            groups[-1] = (word_index, groups[-1][1], k)
        else:
            groups.append((word_index, k, k))

    timings = []
    fd = a.frame_duration
    for g, (word_index, first, last) in enumerate(groups):
        start_frame = entries[first]
        end_frame = entries[last + 1] if last + 1 < a.num_tokens else a.num_frames
        if end_frame <= start_frame:
            continue
        text = words[word_index] if words is not None and word_index < len(words) else ""
        timings.append(WordTiming(word_index=word_index, text=text,
                                  start=start_frame * fd, end=end_frame * fd))
    return timings
