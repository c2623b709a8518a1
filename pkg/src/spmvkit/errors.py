"""Exception types shared across the package."""


class SparseError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(SparseError):
    """Operand dimensions do not agree."""


class UnsortedInput(SparseError):
    """Operation requires a sorted, duplicate-free COO matrix."""


class FillRatioExceeded(SparseError):
    """DIA storage would exceed the configured fill budget."""


class UnsupportedCombination(SparseError):
    """No kernel is registered for the requested (format, version) pair."""


class AllCandidatesFailed(SparseError):
    """Every tuning candidate failed, so no choice can be made."""


class ParseError(SparseError):
    """Malformed Matrix Market content or corpus manifest."""


class UnsupportedField(SparseError):
    """Matrix Market field or symmetry that this reader does not support."""


class IndexOverflow(SparseError):
    """Requested problem size exceeds the 32-bit index range."""


class Diverged(SparseError):
    """Iterative solve produced a non-finite quantity."""


class VerificationFailed(SparseError):
    """Tuned operator output does not match the reference result."""


class MissingBaseline(SparseError):
    """Report input lacks the baseline configuration for a matrix."""


class EmptyInput(SparseError):
    """Operation requires at least one input element."""
