"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid or inconsistent construction parameters."""


class ContractViolation(RuntimeError):
    """An operation was called outside its precondition."""


class ConsistencyError(RuntimeError):
    """Internal state disagrees with itself (grid vs. dictionary, etc.)."""


class DuplicateElement(ContractViolation):
    """The element is already stored; S is a set."""


class CapacityExceeded(ContractViolation):
    """More than ``n`` elements were inserted."""


class ConstructionError(RuntimeError):
    """Rebuilding failed after the maximum number of reseeding attempts."""


class BudgetError(RuntimeError):
    """An adversary strategy issued more queries than it declared."""
