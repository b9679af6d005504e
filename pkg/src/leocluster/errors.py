"""Package exception types."""


class SeriesConvergenceError(RuntimeError):
    """Fading-power series hit its term cap with a non-negligible tail."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance.

    The best available estimate is attached as ``estimate``.
    """

    def __init__(self, message, estimate=None, abserr=None):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr


class InfeasiblePowerBudget(RuntimeError):
    """Requested follower count cannot be powered from the leader budget."""

    def __init__(self, message, required_w=None, available_w=None):
        super().__init__(message)
        self.required_w = required_w
        self.available_w = available_w


class ConfigError(ValueError):
    """Invalid configuration file, key or value."""
