"""Exception types shared across the package."""


class FladleError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(FladleError):
    """A required column is missing from an input file."""


class ParseError(FladleError):
    """A cell could not be parsed; message names the offending row."""


class DomainError(FladleError):
    """An observation time falls outside [0, 1] and rescaling was not requested."""


class DimensionError(FladleError):
    """Array lengths or grids do not line up."""


class InsufficientDataError(FladleError):
    """Too few subjects for the requested operation."""


class BandwidthTooSmallError(FladleError):
    """A kernel window is empty or degenerate; message names the location."""


class BandwidthSelectionError(FladleError):
    """No admissible candidate bandwidth remained."""


class DesignMismatchError(FladleError):
    """Subjects do not share a common time vector on the dense-regular path."""


class InsufficientGridError(FladleError):
    """Too few points per curve for the difference-based noise estimator."""


class SparseDesignError(FladleError):
    """A subject is too sparse for integration scores; use the conditional-expectation scores."""


class EmptySpectrumError(FladleError):
    """No positive eigenvalues are available."""


class DegenerateSpectrumError(FladleError):
    """All leading eigenvalues are zero."""


class InsufficientSignalError(FladleError):
    """A data half yields fewer than two positive eigenvalues."""


class CollinearityError(FladleError):
    """The regression design matrix is rank deficient; message names the columns."""


class NumericalError(FladleError):
    """A linear-algebra routine failed to converge or a system was singular."""
