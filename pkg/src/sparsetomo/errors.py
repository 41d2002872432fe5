"""Exception types shared across the package."""


class TomoError(Exception):
    """Base class for all package errors."""


class ContractError(TomoError, ValueError):
    """An input violates a documented precondition (e.g. a non-normalized state)."""


class InvalidCircuitError(TomoError, ValueError):
    pass


class DimensionError(TomoError, ValueError):
    pass


class CapacityError(TomoError, ValueError):
    """Requested qubit count exceeds what the simulator is willing to hold."""


class EmptySupportError(TomoError):
    """No basis entry exceeds the threshold."""


class IllConditionedError(TomoError, ArithmeticError):
    pass


class SingularMatrixError(TomoError, ArithmeticError):
    pass


class NumericError(TomoError, ValueError):
    pass


class DomainError(TomoError, ValueError):
    pass


class ConfigError(TomoError, ValueError):
    pass


class BatchError(TomoError):
    """Too many trials of an experiment failed."""
