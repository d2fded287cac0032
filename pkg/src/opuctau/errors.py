"""Exception hierarchy shared by all modules."""


class OpuctauError(Exception):
    """Base class for all library errors."""


class DomainError(OpuctauError):
    """Argument outside the mathematical domain of an operation."""


class PoleAtC(OpuctauError):
    """Lower hypergeometric parameter is a nonpositive integer and the series
    does not terminate first."""


class NoConvergence(OpuctauError):
    """Precision escalation exhausted without two evaluations agreeing."""


class SingularPoint(DomainError):
    """Evaluation requested at a branch point of the weight."""


class ParameterPole(OpuctauError):
    """A Gamma factor in a closed-form moment hits a nonpositive integer with
    no compensating cancellation."""


class ZeroDeterminant(OpuctauError):
    """A Toeplitz determinant required in a denominator vanished."""


class SlowConvergence(OpuctauError):
    """Series evaluation too close to its convergence boundary."""


class ZeroW0(OpuctauError):
    """w_0 = 0, so the reflection-coefficient seed is undefined."""


class DivisionBreakdown(OpuctauError):
    """A recurrence step divides by a coefficient that is numerically zero.

    Carries the index at which propagation broke down.
    """

    def __init__(self, index, message=""):
        self.index = index
        super().__init__(message or f"recurrence breakdown at index {index}")


class DegenerateOmega(OpuctauError):
    """omega == omegabar, so a route that divides by their difference is
    unavailable."""


class PoleStep(DivisionBreakdown):
    """A discrete-Painleve iterate landed on a pole of the map."""


class RootAmbiguity(OpuctauError):
    """Both roots of a quadratic advance step are within tolerance of the
    predictor."""

    def __init__(self, index, roots, message=""):
        self.index = index
        self.roots = roots
        super().__init__(message or f"ambiguous quadratic roots at index {index}")


class ZeroTau(OpuctauError):
    """A tau-sequence entry used as a denominator vanished."""


class TruncationNotConverged(OpuctauError):
    """Partition-series shells stopped decreasing before the tail tolerance
    was met."""


class NearSingularWarning(UserWarning):
    """LU pivot fell below the reporting threshold (result still returned)."""
