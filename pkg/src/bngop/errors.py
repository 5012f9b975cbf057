"""Exception hierarchy shared across the package."""


class BngopError(Exception):
    """Base class for all package-specific errors."""


class DomainError(BngopError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(BngopError, ValueError):
    """A configuration value is missing, malformed or unstable."""


class ContractError(BngopError, RuntimeError):
    """Inputs violate an interface contract (wrong measure, grid mismatch, ...)."""


class DataError(BngopError, ValueError):
    """Simulated or supplied data contains unusable values (NaN, inf, negative payoff)."""


class NumericalError(BngopError, ArithmeticError):
    """A numerical procedure failed (ill-conditioned system, no convergence)."""
