"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class ModelError(Exception):
    """Base class for every error raised by :mod:`parabolic_model`."""


class DomainError(ModelError, ValueError):
    """An argument lies outside the domain where an object is defined."""


class ConstantViolationError(ModelError, ValueError):
    """A constant fails one of the inequalities the construction relies on."""


class ConditionFiveError(ConstantViolationError):
    """``ess * k0 >= 1``: the essential-norm/growth condition is violated."""


class InfeasibleError(ConstantViolationError):
    """No admissible choice of constants exists for the given inputs."""


class NearSingularError(ModelError, ArithmeticError):
    """A resolvent was requested too close to the spectrum.

    Attributes
    ----------
    residual : float
        Achieved residual ``||(M - z) X - I||`` of the attempted solve.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class GeometryError(ModelError):
    """Contour or domain construction failed a posteriori verification."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class SearchFailure(ModelError):
    """A deterministic constant search exhausted its budget."""

    def __init__(self, message: str, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class InequalityViolation(ModelError):
    """A sampled inequality failed; ``witness`` holds the offending point."""

    def __init__(self, message: str, witness=None, slack: float = float("nan")):
        super().__init__(message)
        self.witness = witness
        self.slack = slack


class QuadratureResolutionError(ModelError):
    """A quadrature value is not stable under contour refinement."""


class ContourSymmetryError(ModelError):
    """The contour node set is not closed under complex conjugation."""


class AccuracyError(ModelError):
    """A Cauchy integral was requested at a point too close to the contour."""


class NotInDomainError(ModelError):
    """An element is not in the domain of the truncated multiplication."""


class SpectralError(ModelError):
    """A point lies (numerically) in the spectrum of the characteristic function."""


class ExactnessFailure(ModelError):
    """The observation map is not bounded below at the working resolution."""
