"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to:
2 for configuration problems, 3 for data problems, 4 for numerical failures.
"""


class UOMSError(Exception):
    exit_code = 1


class ConfigError(UOMSError, ValueError):
    exit_code = 2


class BadHyperparameter(ConfigError):
    pass


class DataError(UOMSError, ValueError):
    exit_code = 3


class EmptyInput(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class BadK(DataError):
    pass


class DegenerateLabels(DataError):
    pass


class NotEnoughData(DataError):
    pass


class IoError(DataError, OSError):
    pass


class FormatError(DataError):
    pass


class NumericalError(UOMSError, ArithmeticError):
    exit_code = 4


class DegenerateRanking(NumericalError):
    pass


class DegenerateModel(NumericalError):
    pass


class SeparabilityFailure(NumericalError):
    pass
