"""Exception hierarchy shared across the package."""


class HurufError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(HurufError, ValueError):
    """Tensor/parameter dimensions do not satisfy an operation's contract."""


class ParameterError(HurufError, ValueError):
    """A configuration value is outside its allowed range."""


class StateError(HurufError, RuntimeError):
    """An operation was called in an invalid order (e.g. backward before forward)."""


class NumericError(HurufError, ArithmeticError):
    """A non-finite value appeared where finiteness is required."""


class TrainingError(HurufError, RuntimeError):
    """Training diverged or otherwise failed mid-run."""


class DataError(HurufError, ValueError):
    """Base class for dataset ingestion problems."""


class FormatError(DataError):
    """A source file row does not match the expected layout."""


class LabelError(DataError):
    """A label value is outside the declared class range."""


class PairingError(DataError):
    """Images file and labels file do not describe the same samples."""


class StoreError(HurufError):
    """Model persistence failure: I/O, integrity, or format-version mismatch."""
