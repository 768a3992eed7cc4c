"""Exception hierarchy.

Errors split into two families so the CLI can map them onto exit codes:
``DataError`` (bad input, exit 2) and ``NumericalError`` (the pipeline could
not produce a valid answer, exit 3).
"""


class GFIError(Exception):
    """Base class for all package errors."""


class DataError(GFIError, ValueError):
    pass


class NumericalError(GFIError, ArithmeticError):
    pass


class CSVFormatError(DataError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class NonFiniteValueError(CSVFormatError):
    pass


class DegenerateCovariateError(DataError):
    pass


class SchemaMismatchError(DataError):
    pass


class EmptySampleError(DataError):
    pass


class InvalidDegreesOfFreedomError(DataError):
    pass


class CapacityError(NumericalError):
    pass


class RankDeficiencyError(NumericalError):
    pass


class AdmissibilityError(NumericalError):
    pass


class DegenerateFitError(NumericalError):
    pass


class EmptyCandidateSetError(NumericalError):
    pass


class ExperimentFailedError(NumericalError):
    pass


class ConvergenceWarning(UserWarning):
    pass
