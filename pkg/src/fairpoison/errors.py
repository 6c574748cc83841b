"""Exception hierarchy. Each family carries the CLI exit code it maps to.

Exit code 2 is left to argparse for usage errors and 9 is used for I/O failures.
"""


class FairPoisonError(Exception):
    exit_code = 1


class DataError(FairPoisonError, ValueError):
    exit_code = 3


class DimensionMismatch(DataError):
    pass


class NonBinaryColumn(DataError):
    pass


class EmptyDataset(DataError):
    pass


class NonFiniteValue(DataError):
    pass


class MissingColumn(DataError):
    exit_code = 4


class ParseError(DataError):
    exit_code = 4

    def __init__(self, row, column, message=""):
        self.row = row
        self.column = column
        super().__init__(f"row {row}, column {column!r}: {message}".rstrip(": "))


class GroupError(FairPoisonError, ValueError):
    exit_code = 5


class EmptyGroup(GroupError):
    pass


class GroupCoverageUnsatisfiable(GroupError):
    pass


class TooSmall(DataError):
    pass


class PoolError(FairPoisonError, ValueError):
    exit_code = 6


class NoBinaryFeatures(PoolError):
    pass


class InsufficientCandidates(PoolError):
    pass


class PoolExhausted(PoolError):
    pass


class NumericError(FairPoisonError, ArithmeticError):
    """Parameters became non-finite during optimisation."""

    exit_code = 7


class ConfigError(FairPoisonError, ValueError):
    exit_code = 8
