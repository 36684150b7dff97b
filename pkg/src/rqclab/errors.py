class RQCLabError(Exception):
    """Base class for errors raised by this package."""


class InputError(RQCLabError, ValueError):
    """Malformed or mismatched input."""


class CapacityError(RQCLabError):
    """Requested computation exceeds the exhaustive/dense capacity limits."""


class DegeneratePairError(RQCLabError, ValueError):
    """Tuple pair is permutation-related (r = 0); no distinguishing string exists."""


class DomainError(RQCLabError, ValueError):
    """Formula parameter outside the range where the formula is stated."""
