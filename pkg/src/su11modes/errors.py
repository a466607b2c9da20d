"""Exception types shared across the package."""


class Su11Error(Exception):
    """Base class for package errors."""


class ParameterError(Su11Error, ValueError):
    pass


class DomainError(Su11Error, ValueError):
    """An angle or slice falls outside the grid it refers to."""


class ResolutionError(Su11Error, ValueError):
    pass


class ConfigurationError(Su11Error, ValueError):
    pass


class InsufficientDataError(Su11Error, ValueError):
    pass


class ShapeError(Su11Error, ValueError):
    pass


class UndefinedWidthError(Su11Error, ValueError):
    pass


class AsymmetryError(Su11Error, ValueError):
    """Fourier coefficients of a covariance carry a large imaginary part."""


class RangeError(Su11Error, OverflowError):
    pass


class FormatError(Su11Error, ValueError):
    """A frame-stack file violates the FSTK layout."""


class MagicError(FormatError):
    pass


class VersionError(FormatError):
    pass


class TruncationError(FormatError):
    pass


class DimensionError(FormatError):
    pass


class VerificationError(Su11Error):
    """A closed-loop check did not meet its tolerance."""
