"""Numerical functional models for ``A = A0 + i psi(A0) F psi(A0)``."""

from .errors import *  # noqa: F401,F403
from .weights import DomainCase, WeightFamily, weight_info
from .operator import (PerturbationSplit, SpectralDiagonal, SystemTriple, build_system,
                       essential_split, resolvent, weighted_norm)
from .geometry import (ConstantsBundle, ParabolicDomain, Side, kappa0_of, membership,
                       mu0_of, mu1_search, pick_constants, r0_search, separation_check)
from .contour import Contour, build_contour, circle_contour, integral_bound, tail_bound, winding
from .constants import Pipeline, R_search, build_constants
from .boundary import (GridFunction, cauchy_pairing, cauchy_project, delta_pairing, e2_norm,
                       membership_test)
from .transforms import (CharFunEvaluator, ModelElement, RationalFunction, ctrl_transform,
                         delta_eval, delta_inverse, model_resolvent, obs_adjoint_transform,
                         obs_transform, rational_calculus, truncated_mult)

__version__ = "0.1.0"
