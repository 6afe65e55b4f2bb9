"""Forced alignment with gap detection for untranscribed (disfluent) speech.

The package aligns an ASR hypothesis to CTC emission frames, with a
modified trellis whose word-separator rows can absorb audio the transcript
never mentions.  The unclaimed stretches become alignment gaps, which are
labeled, classified, scored, and reported by the surrounding toolkit.
"""

from .align import (
    DEFAULT_C,
    MODIFIED,
    STANDARD,
    FramePath,
    TokenSequence,
    Trellis,
    WordSpan,
    WordTiming,
    align_words,
    backtrack,
    brute_force_best_path,
    build_trellis_modified,
    build_trellis_standard,
    path_score,
    path_to_word_timings,
    tokenize,
)
from .attention import attention_word_timings, dtw_path, token_entry_frames
from .classifier import (
    AlignedUtterance,
    ClassifierMetrics,
    GapDatasetRow,
    baseline_classify,
    build_gap_dataset,
    eval_classifier,
    load_predictions,
    metrics_from_confusion,
    read_gap_dataset,
    write_gap_dataset,
)
from .errors import (
    BadMagicError,
    EmptyAfterNormalizationError,
    EmptyFrameRangeError,
    EmptyReferenceError,
    GapAlignError,
    InfeasibleError,
    InstanceTooLargeError,
    MalformedHeaderError,
    MissingGapIdError,
    NoPairsError,
    NoPathError,
    NonProbabilisticError,
    PathInfeasibleError,
    SetMismatchError,
    SizeMismatchError,
    UnknownGapIdError,
    ValidationError,
    ZeroLengthReferenceError,
)
from .formats import (
    AttentionMatrix,
    EmissionMatrix,
    HypTranscript,
    RefWord,
    read_attention,
    read_emissions,
    read_hyp_transcript,
    read_ref_transcript,
    read_report,
    validate_attention,
    validate_emissions,
    write_attention,
    write_emissions,
    write_hyp_transcript,
    write_ref_transcript,
    write_report,
)
from .gaps import (
    CoverageReport,
    Gap,
    coverage_counts,
    detection_counts,
    extract_gaps,
    label_gap,
)
from .metrics import (
    ScoredPair,
    ScoreSummary,
    combined_score,
    length_score,
    position_score,
    score_matched_pairs,
    summarize,
)
from .pipeline import PipelineConfig, Utterance, evaluate_corpus, read_manifest
from .segmenter import Segment, plan_segments
from .textalign import (
    CategorizationCounts,
    WordAlignmentPair,
    categorize_words,
    edit_counts,
    levenshtein_align,
    neighbors_of_untranscribed,
    wer,
)

__version__ = "0.1.0"
