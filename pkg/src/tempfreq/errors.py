"""Exception hierarchy shared by all tempfreq modules."""


class TempfreqError(Exception):
    """Base class for library errors."""


class ZeroMassError(TempfreqError, ValueError):
    """A density series has no mass to normalize or sample from."""


class GridMismatchError(TempfreqError, ValueError):
    """Series combined in one operation live on different grids."""


class EmptyInputError(TempfreqError, ValueError):
    pass


class DomainError(TempfreqError, ValueError):
    """An argument lies outside its mathematical domain."""


class NotNormalizedError(TempfreqError, ValueError):
    pass


class OutOfCurveRangeError(TempfreqError, ValueError):
    """A calendar age lies outside the calibration curve's knot span."""


class DegenerateSampleError(TempfreqError, ValueError):
    """A bandwidth cannot be selected (too few points or zero spread)."""


class AlignmentError(TempfreqError, ValueError):
    """Parallel arrays (timestamps and sites) differ in length."""


class CalibrationFailure(TempfreqError, ValueError):
    """One or more dates could not be calibrated.

    ``failures`` maps record id to the underlying error message.
    """

    def __init__(self, failures):
        self.failures = dict(failures)
        detail = "; ".join(f"{k}: {v}" for k, v in self.failures.items())
        super().__init__(f"{len(self.failures)} date(s) failed to calibrate: {detail}")


class ParseError(TempfreqError, ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class DuplicateKnotError(ParseError):
    pass


class SchemaError(TempfreqError, ValueError):
    """A dataset file lacks a required column."""


class IoError(TempfreqError, OSError):
    pass
