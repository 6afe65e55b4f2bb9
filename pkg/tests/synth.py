"""Synthetic emission/attention fixtures shared across the test suite.

The planted-disfluency layout puts two short transcript words at frame
spikes and a sustained burst of an untranscribed character between them.
The standard aligner has to stretch a word over the burst; the modified
aligner can park on the separator instead, leaving a gap.
"""

from __future__ import annotations

import numpy as np

from gapalign import AttentionMatrix, EmissionMatrix, RefWord

VOCAB = ["<eps>", "|", "a", "b", "c", "d", "x"]
BLANK, SEP = 0, 1
FRAME = 0.02

SILENCE_BLANK = 0.99
SPIKE_PROB = 0.90


def _row(hot: dict[int, float], v: int) -> np.ndarray:
    rest = 1.0 - sum(hot.values())
    row = np.full(v, rest / (v - len(hot)))
    for idx, p in hot.items():
        row[idx] = p
    return row


def emissions_from_probs(probs: np.ndarray, fd: float = FRAME,
                         vocab: list[str] | None = None,
                         blank: int = BLANK, sep: int = SEP) -> EmissionMatrix:
    vocab = vocab if vocab is not None else VOCAB[: probs.shape[1]]
    return EmissionMatrix(vocab=vocab, blank_index=blank, separator_index=sep,
                          frame_duration=fd,
                          values=np.log(probs).astype(np.float32))


def random_emissions(rng: np.random.Generator, num_frames: int, num_labels: int,
                     fd: float = FRAME) -> EmissionMatrix:
    """Random rows bounded away from zero so no log-probability hits -inf."""
    probs = rng.random((num_frames, num_labels)) + 0.05
    probs /= probs.sum(axis=1, keepdims=True)
    vocab = ["<eps>", "|"] + [chr(ord("a") + i) for i in range(num_labels - 2)]
    return emissions_from_probs(probs, fd=fd, vocab=vocab)


def uniform_emissions(num_frames: int, num_labels: int, fd: float = FRAME) -> EmissionMatrix:
    probs = np.full((num_frames, num_labels), 1.0 / num_labels)
    vocab = ["<eps>", "|"] + [chr(ord("a") + i) for i in range(num_labels - 2)]
    return emissions_from_probs(probs, fd=fd, vocab=vocab)


def spiky_probs(num_frames: int, spikes: dict[int, int],
                planted: tuple[int, int] | None = None,
                boundary: tuple[int, ...] = ()) -> np.ndarray:
    """Silence everywhere except character spikes, an optional planted
    untranscribed burst (inclusive frame range), and separator boundary
    frames."""
    v = len(VOCAB)
    probs = np.tile(_row({BLANK: SILENCE_BLANK}, v), (num_frames, 1))
    for t, tok in spikes.items():
        probs[t] = _row({tok: SPIKE_PROB, BLANK: 0.05}, v)
    if planted is not None:
        x = VOCAB.index("x")
        lo, hi = planted
        probs[lo:hi + 1] = _row({x: SPIKE_PROB, BLANK: 0.01, SEP: 0.0005}, v)
    for t in boundary:
        probs[t] = _row({SEP: SPIKE_PROB, BLANK: 0.05}, v)
    return probs


# A 120-frame utterance: "ab" at frames 10-11, "cd" at 78-79, separator
# boundary at 76-77, and an untranscribed burst over frames 50-75.
PLANTED_LO, PLANTED_HI = 50, 75
PLANTED_T = 120


def planted_emissions(planted: bool = True) -> EmissionMatrix:
    a, b, c, d = (VOCAB.index(ch) for ch in "abcd")
    spikes = {10: a, 11: b, 78: c, 79: d}
    probs = spiky_probs(PLANTED_T, spikes,
                        planted=(PLANTED_LO, PLANTED_HI) if planted else None,
                        boundary=(76, 77))
    return emissions_from_probs(probs)


def planted_reference(planted: bool = True) -> list[RefWord]:
    words = [RefWord(text="ab", start=0.20, end=0.24, disfluent=False)]
    if planted:
        words.append(RefWord(text="uh", start=PLANTED_LO * FRAME,
                             end=(PLANTED_HI + 1) * FRAME, disfluent=True))
    words.append(RefWord(text="cd", start=1.56, end=1.60, disfluent=False))
    return words


PLANTED_HYP = "ab cd"


# Corpus variant tuned so the baseline classifier separates cleanly: the
# burst dominates the gap's frames (little silence between word one and the
# burst), pushing the mean non-blank mass well above 0.5.
CORPUS_T = 120
CORPUS_PLANTED_LO, CORPUS_PLANTED_HI = 20, 69


def corpus_emissions(planted: bool) -> EmissionMatrix:
    a, b, c, d = (VOCAB.index(ch) for ch in "abcd")
    spikes = {10: a, 11: b, 72: c, 73: d}
    probs = spiky_probs(CORPUS_T, spikes,
                        planted=(CORPUS_PLANTED_LO, CORPUS_PLANTED_HI) if planted else None,
                        boundary=(70, 71))
    return emissions_from_probs(probs)


def corpus_reference(planted: bool) -> list[RefWord]:
    words = [RefWord(text="ab", start=0.20, end=0.24, disfluent=False)]
    if planted:
        words.append(RefWord(text="uh", start=CORPUS_PLANTED_LO * FRAME,
                             end=(CORPUS_PLANTED_HI + 1) * FRAME, disfluent=True))
    words.append(RefWord(text="cd", start=1.44, end=1.48, disfluent=False))
    return words


def block_attention(num_tokens: int, frames_per_token: int,
                    fd: float = 0.5) -> AttentionMatrix:
    weights = np.zeros((num_tokens, num_tokens * frames_per_token), dtype=np.float32)
    for k in range(num_tokens):
        weights[k, k * frames_per_token:(k + 1) * frames_per_token] = 1.0
    return AttentionMatrix(weights=weights, frame_duration=fd,
                           token_to_word=list(range(num_tokens)))
