class ConfigError(ValueError):
    """A problem parameter violates one of the standing assumptions."""


class AlgebraError(RuntimeError):
    """An exact identity that must hold symbolically did not."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, last_residual=None):
        super().__init__(message)
        self.last_residual = last_residual


class IdentityFailure(AssertionError):
    """A numerically verified identity exceeded its tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
