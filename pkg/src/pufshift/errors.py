"""Exception types shared across the package."""


class PufshiftError(Exception):
    """Base class for domain errors raised by this package."""


class ParameterError(PufshiftError, ValueError):
    """A configuration or argument value violates its documented range."""


class DimensionError(PufshiftError, ValueError):
    """Bit-vector or delay-grid shapes do not line up."""


class KeyMismatchError(PufshiftError, ValueError):
    """Parties of a shared-key session were built with different keys."""
