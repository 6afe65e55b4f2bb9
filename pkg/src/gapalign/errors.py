"""Exception hierarchy shared by all gapalign modules.

Every error carries a short machine-readable ``code`` that the CLI emits in
its JSON error records and maps to an exit code: validation failures exit 3,
infeasible-but-well-formed inputs exit 2, plain I/O problems exit 1.
"""

from __future__ import annotations


class GapAlignError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class ValidationError(GapAlignError):
    """A file or in-memory value violates a format or type invariant."""

    code = "validation"

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}: "
            if line is not None:
                where = f"{path}:{line}: "
        super().__init__(where + message)


class BadMagicError(ValidationError):
    code = "bad_magic"


class MalformedHeaderError(ValidationError):
    code = "malformed_header"


class SizeMismatchError(ValidationError):
    code = "size_mismatch"


class NonProbabilisticError(ValidationError):
    code = "non_probabilistic"


class MissingGapIdError(ValidationError):
    code = "missing_gap_id"


class UnknownGapIdError(ValidationError):
    code = "unknown_gap_id"


class SetMismatchError(ValidationError):
    code = "set_mismatch"


class ZeroLengthReferenceError(ValidationError):
    code = "zero_length_reference"


class InfeasibleError(GapAlignError):
    """Input is well formed but the requested computation has no answer."""

    code = "infeasible"


class PathInfeasibleError(InfeasibleError):
    """Fewer frames than tokens: no monotone alignment path exists."""

    code = "path_infeasible"


class NoPathError(InfeasibleError):
    """The trellis corner is -inf; no finite-score path reaches it."""

    code = "no_path"


class InstanceTooLargeError(InfeasibleError):
    """Brute-force oracle guard against combinatorial blowup."""

    code = "instance_too_large"


class EmptyAfterNormalizationError(InfeasibleError):
    """Every character of the hypothesis fell outside the vocabulary."""

    code = "empty_after_normalization"


class EmptyReferenceError(InfeasibleError):
    code = "empty_reference"


class NoPairsError(InfeasibleError):
    """No scoreable word pairs remain after filtering."""

    code = "no_pairs"


class EmptyFrameRangeError(InfeasibleError):
    """A gap is too short to contain a single whole frame."""

    code = "empty_frame_range"
