"""Exception hierarchy shared by all modules."""


class CoexistError(Exception):
    """Base class for package errors."""


class CapacityError(CoexistError):
    """Problem size exceeds an enumeration or memory cap."""


class DomainError(CoexistError, ValueError):
    """Argument outside the admissible domain of an operation."""


class ModelError(CoexistError, ValueError):
    """Rate model cannot be used for the requested operation."""


class UnsupportedError(CoexistError, NotImplementedError):
    """Operation not supported for this dimension or representation pair."""


class ContractError(CoexistError, ValueError):
    """An input object violates its declared invariants."""


class StatisticalError(CoexistError):
    """Not enough samples to form the requested estimate."""


class NumericalError(CoexistError):
    """Two independent numerical routes disagree beyond tolerance."""


class WindowError(DomainError):
    """A fit window holds too few points or nonpositive values."""
