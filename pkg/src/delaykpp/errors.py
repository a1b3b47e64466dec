"""Exception types raised by the library."""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class TransformDomainError(ValueError):
    """Bilateral Laplace transform evaluated outside its strip of convergence."""


class TangencyError(RuntimeError):
    """No tangency point of the characteristic pair inside the transform domain."""


class GateError(RuntimeError):
    """A solver's applicability gate failed (positivity or decay of the symbol)."""
