"""Exception hierarchy.

Every error raised by the package derives from :class:`ProbKWError`.  The two
intermediate classes decide the CLI exit code: :class:`DataError` (bad input,
exit 2) and :class:`NumericalError` (well-formed input the statistics cannot
handle, exit 3).
"""


class ProbKWError(Exception):
    """Base class for all package errors."""


class DataError(ProbKWError, ValueError):
    """Input data violates a documented precondition."""


class NumericalError(ProbKWError, ArithmeticError):
    """A statistic is undefined for the given (valid) input."""


# ranking / generic input
class EmptyInput(DataError):
    pass


class NonFiniteValue(DataError):
    def __init__(self, index, value=None):
        self.index = index
        super().__init__(f"non-finite value {value!r} at index {index}")


class DimensionMismatch(DataError):
    pass


class InvalidProbMatrix(DataError):
    pass


class OutOfRange(DataError):
    pass


# gkw
class DegenerateGroup(NumericalError):
    def __init__(self, group, centered_ss):
        self.group = group
        self.centered_ss = centered_ss
        super().__init__(
            f"group {group} has constant membership probabilities "
            f"(centered sum of squares {centered_ss:.3g})"
        )


class SingularCorrelation(NumericalError):
    pass


# classic
class EmptyGroup(DataError):
    def __init__(self, group):
        self.group = group
        super().__init__(f"group {group} is empty")


class ConstantPredictor(NumericalError):
    pass


class InsufficientSample(DataError):
    pass


class ZeroWithinVariance(NumericalError):
    pass


# dist
class NegativeStatistic(DataError):
    pass


class NonPositiveAlpha(DataError):
    pass


class NonPositiveSigma(DataError):
    pass


class InvalidProbVector(DataError):
    pass


# simkit
class InvalidMaf(DataError):
    pass


class InvalidA(DataError):
    pass


# oracle
class TooLargeForEnumeration(DataError):
    pass


# file formats
class MalformedHeader(DataError):
    pass


class LineError(DataError):
    """Data error tied to a 1-based line of an input file."""

    def __init__(self, line, message, path=None):
        self.line = line
        self.message = message
        self.path = path
        where = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"{where}: {message}")

    def with_path(self, path):
        return type(self)(self.line, self.message, str(path))


class RowSumViolation(LineError):
    pass


class SubjectCountMismatch(LineError):
    pass


class NonNumericValue(LineError):
    pass


class DuplicateSubject(LineError):
    pass


class MalformedRecord(LineError):
    pass


class SubjectMismatch(DataError):
    pass


class ConfigError(DataError):
    pass
