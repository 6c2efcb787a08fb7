"""Exception types shared across the package."""


class SimsizeError(Exception):
    """Base class for all package-specific errors."""


class InvalidConfigError(SimsizeError):
    """A parameter combination violates its documented domain."""


class TuningError(SimsizeError):
    """Generator tuning failed to reach its convergence target.

    Carries the best point found so callers can inspect how close the
    optimiser got.
    """

    def __init__(self, message, best_params=None, objective=None):
        super().__init__(message)
        self.best_params = best_params
        self.objective = objective


class FitError(SimsizeError):
    """A model fit failed on a degenerate or pathological sample."""


class MetricError(SimsizeError):
    """A performance metric is undefined for the given inputs."""


class EvaluationError(SimsizeError):
    """A candidate sample size could not be evaluated (redraws exhausted)."""


class SurrogateError(SimsizeError):
    """The surrogate model could not be fitted."""
