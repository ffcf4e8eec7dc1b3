"""Exception types shared by all zakbench modules."""


class ZakError(Exception):
    """Base class for every error raised by this package."""


class ContractViolation(ZakError):
    """An operation was called with inputs violating its contract."""


class SingularSymbolError(ZakError):
    """A Fourier multiplier is non-finite at a grid wavenumber."""


class SingularDirectionError(ZakError):
    """A phase gradient was requested where the unit direction is undefined."""


class GridRangeError(ZakError):
    """A dyadic index, window, or scan domain is out of range."""


class CutoffExceedsBoxError(ZakError):
    """A spatial cutoff radius does not fit inside the periodic box."""


class RealityViolation(ZakError):
    """A field that must be real-valued has too large an imaginary part."""


class DivergenceError(ZakError):
    """A time step produced non-finite field values."""

    def __init__(self, step_index: int, message: str = ""):
        self.step_index = step_index
        super().__init__(message or f"non-finite field values at step {step_index}")


class InsufficientDataError(ZakError):
    """Too few snapshots or samples for the requested diagnostic."""


class SnapshotLookupError(ZakError):
    """A requested time is not stored in the trajectory."""


class BoxFitError(ZakError):
    """Initial data too wide for the periodic box."""


class SnapshotFormatError(ZakError):
    """A snapshot file has a malformed header or bad magic bytes."""


class SnapshotVersionError(SnapshotFormatError):
    """A snapshot file has an unsupported format version."""


class SnapshotCorruptionError(SnapshotFormatError):
    """A snapshot file is truncated or fails its integrity check."""
