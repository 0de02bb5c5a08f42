"""Exception hierarchy shared by every module."""


class CuspGrowthError(Exception):
    """Base class for all library errors."""


class SpecError(CuspGrowthError, ValueError):
    """Invalid group specification (bad matrix, bad parameter, unknown field)."""


class UsageError(CuspGrowthError, ValueError):
    """Arguments that do not belong together, e.g. points from different backends."""


class TruncationError(CuspGrowthError):
    """A query escapes the radius the model was built out to."""


class UnsupportedPresentationError(CuspGrowthError):
    """The word problem for the requested presentation is not implemented."""


class FitError(CuspGrowthError, ValueError):
    """Not enough data to fit an exponent."""


class HorizonError(CuspGrowthError):
    """A graph boundary proxy sits too close to the basepoint."""
