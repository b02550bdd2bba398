"""Exception hierarchy shared across the package."""


class RobustLMomentsError(Exception):
    """Base class for all computational errors raised by this package."""


class DomainError(RobustLMomentsError, ValueError):
    """An argument lies outside the mathematically valid domain."""


class UnboundedQuantileError(DomainError):
    """Quantile requested at 0 or 1 where the support is unbounded."""


class SingularityError(RobustLMomentsError, ArithmeticError):
    """A density (or quantile density) vanishes/blows up where a finite
    value is required."""


class DivergenceError(RobustLMomentsError, ArithmeticError):
    """An integral fails to converge, typically from an endpoint
    singularity with zero trimming on an unbounded tail."""


class EmptyWindowError(RobustLMomentsError, ValueError):
    """Trimming proportions leave no observations in the sample window."""


class OrderingError(RobustLMomentsError, ValueError):
    """Closed-form covariance requested for a pair of trimming
    proportions whose ordering it does not cover."""


class ConvergenceError(RobustLMomentsError, RuntimeError):
    """The moment-matching solver failed to converge."""


class SingularJacobianError(RobustLMomentsError, ArithmeticError):
    """Jacobian of the population moment map is (numerically) singular."""

    def __init__(self, message: str, condition: float | None = None):
        super().__init__(message)
        self.condition = condition


class SampleFormatError(RobustLMomentsError, ValueError):
    """A data file contains rows that cannot be parsed as numbers."""
