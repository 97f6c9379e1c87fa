"""Exception types shared across the toolkit."""


class TcraError(Exception):
    """Base class for all toolkit errors."""


class DomainError(TcraError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class PerspectiveError(TcraError, ValueError):
    """A node-perspective polynomial was required and an edge one given, or vice versa."""


class DegenerateError(TcraError, ValueError):
    pass


class ParameterError(TcraError, ValueError):
    pass


class DivisibilityError(ParameterError):
    """Generator polynomial does not divide x^n + 1."""


class BudgetExceededError(TcraError, RuntimeError):
    """Exhaustive enumeration would exceed the configured budget; use sampling."""


class ConstructionError(TcraError, RuntimeError):
    pass


class InconsistentWordError(TcraError, ValueError):
    """Non-erased symbols are not consistent with any codeword."""


class InfeasiblePatternError(TcraError, RuntimeError):
    """Transmission pattern could not be drawn within the retry budget."""


class ConfigError(TcraError, ValueError):
    """Malformed or constraint-violating configuration."""
