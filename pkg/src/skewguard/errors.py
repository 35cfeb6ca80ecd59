"""Exception hierarchy.

Every error carries a short category name (the class name) so the CLI can
print a machine-parsable one-line failure.  Data problems map to exit code 2,
numerical failures to exit code 3.
"""


class SkewguardError(Exception):
    exit_code = 1

    @property
    def category(self):
        return type(self).__name__


class DataError(SkewguardError, ValueError):
    exit_code = 2


class NumericalError(SkewguardError, ArithmeticError):
    exit_code = 3


# -- data / contract errors -------------------------------------------------
class DimensionMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class MissingValue(ParseError):
    pass


class NonBinaryLabel(DataError):
    pass


class MinorityLabelError(DataError):
    """Label 1 is more frequent than label 0."""


class ZeroScaleColumn(DataError):
    pass


class ZeroVarianceColumn(DataError):
    pass


class InvalidProbability(DataError):
    pass


class InvalidDimension(DataError):
    pass


class InvalidConfig(DataError):
    pass


class TooFewRows(DataError):
    pass


class OneClassOnly(DataError):
    pass


class NoPositives(DataError):
    pass


class SingleMinorityRow(DataError):
    pass


class DegenerateMinority(DataError):
    """Too few minority rows for a robust fit."""


# -- numerical errors ---------------------------------------------------------
class NotPositiveDefinite(NumericalError):
    pass


class SingularMatrix(NumericalError):
    pass


class SingularData(NumericalError):
    """Exact-fit situation: at least h rows lie on a hyperplane."""


class EmptyInlierSet(NumericalError):
    pass


class SingularInformation(NumericalError):
    pass


class BenchmarkFailure(NumericalError):
    pass
