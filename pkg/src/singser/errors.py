"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested function."""


class CapacityError(RuntimeError):
    """A request exceeds a configured size or memory budget."""


class ToleranceError(ArithmeticError):
    """A numerical tolerance could not be met."""
