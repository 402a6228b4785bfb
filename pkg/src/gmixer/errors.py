"""Exception hierarchy shared across the package."""


class GmixerError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(GmixerError, ValueError):
    """Two vectors (or a vector and a store) disagree on dimensionality."""


class DegenerateGeometryError(GmixerError):
    """Geodesic interpolation is ill-defined (near-antipodal endpoints).

    Carries the offending angle so callers can log or skip the query.
    """

    def __init__(self, theta: float, message: str | None = None):
        self.theta = theta
        super().__init__(message or f"near-antipodal pair, angle={theta:.6f} rad")


class InvalidConfigError(GmixerError, ValueError):
    """A configuration value violates its contract (bad grid, k < 1, ...)."""


class BundleFormatError(GmixerError):
    """Structural problem in a GMXB file: bad magic, version, or truncation.

    ``offset`` is the byte position at which the problem was detected.
    """

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class BundleDataError(GmixerError):
    """A structurally valid bundle carries unusable data (NaN, zero vector,
    duplicate identifier). ``entry_id`` names the offending record."""

    def __init__(self, message: str, entry_id: str | None = None):
        self.entry_id = entry_id
        super().__init__(message)


class ConsistencyError(GmixerError):
    """Cross-structure mismatch, e.g. a candidate id missing from the store."""


class GenerationError(GmixerError):
    """Caption generation failed. ``retriable`` distinguishes transient
    transport/server failures from malformed payloads."""

    def __init__(self, message: str, retriable: bool = False):
        self.retriable = retriable
        super().__init__(message)
