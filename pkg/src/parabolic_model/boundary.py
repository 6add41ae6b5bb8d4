"""Boundary-value numerics on Gamma: E2 norms, pairings, Cauchy projections.

Functions are represented by their samples at the contour nodes only.
Values at conjugate points come from the node-conjugation permutation of
the (exactly symmetric) contour, never from interpolation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .contour import Contour
from .errors import AccuracyError, ContourSymmetryError, DomainError
from .geometry import ParabolicDomain
from .weights import DomainCase

TOL_MEM = 1e-4
_ROUNDOFF = 4 * np.finfo(float).eps


class Side(str, enum.Enum):
    EXT_ANALYTIC = "ext"
    INT_ANALYTIC = "int"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class GridFunction:
    """Samples ``f(z_j)`` of a ``C^m``-valued function at the contour nodes.

    ``values`` has shape ``(N, m)``.  ``decay`` is the known power of
    ``1/z`` decay at infinity (0 when unknown); with ``decay >= 1`` the
    E2 norm adds an estimate of the truncated tails.
    """

    values: np.ndarray
    side_hint: Side = Side.UNKNOWN
    decay: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise DomainError("grid function values must be (N, m)")
        if not np.all(np.isfinite(v)):
            raise DomainError("grid function has non-finite samples")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, fn: Callable, contour: Contour, side_hint=Side.UNKNOWN,
                      decay: int = 0) -> "GridFunction":
        """Sample ``fn`` (vectorised over an array of points) on the nodes."""
        return cls(np.asarray(fn(contour.nodes)), side_hint, decay)

    @classmethod
    def zeros(cls, contour: Contour, m: int = 1) -> "GridFunction":
        return cls(np.zeros((contour.N, m), dtype=complex), Side.UNKNOWN, 1)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def _combine(self, other, values):
        d = min(self.decay, other.decay) if isinstance(other, GridFunction) else self.decay
        hint = self.side_hint if (not isinstance(other, GridFunction)
                                  or other.side_hint == self.side_hint) else Side.UNKNOWN
        return GridFunction(values, hint, d)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return self._combine(other, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return self._combine(other, self.values - other.values)

    def __mul__(self, a: complex) -> "GridFunction":
        return GridFunction(self.values * a, self.side_hint, self.decay)

    __rmul__ = __mul__

    def apply(self, mats: np.ndarray, side_hint=Side.UNKNOWN, decay: Optional[int] = None):
        """Node-wise matrix action ``M(z_j) f(z_j)`` for ``mats`` of shape ``(N, p, m)``."""
        v = np.einsum("jpm,jm->jp", mats, self.values)
        return GridFunction(v, side_hint, self.decay if decay is None else decay)


@dataclass(frozen=True)
class PairingResult:
    """A contour quadrature value and the gap to the nested half rule."""

    value: complex
    quadrature_error_estimate: float

    def __complex__(self):
        return complex(self.value)


def _check_aligned(contour: Contour, *fs):
    for f in fs:
        if f.N != contour.N:
            raise DomainError(f"grid function has {f.N} samples, contour has {contour.N}")


def _perm(contour: Contour) -> np.ndarray:
    if contour.conj_perm is None:
        raise ContourSymmetryError("pairings need a contour closed under conjugation")
    return contour.conj_perm


def _quad(terms: np.ndarray, contour: Contour) -> PairingResult:
    full = np.sum(terms * contour.dz)
    half = np.sum(terms * contour.dz_half)
    floor = _ROUNDOFF * float(np.sum(np.abs(terms * contour.dz)))
    v = full / (2j * np.pi)
    err = abs(full - half) / (2 * np.pi) + floor / (2 * np.pi)
    return PairingResult(complex(v), float(err))


def e2_norm(f: GridFunction, contour: Contour, half: bool = False) -> float:
    """``sqrt((1/2 pi) int_Gamma ||f||^2 |dz|)`` with a tail estimate for decaying ``f``."""
    _check_aligned(contour, f)
    dens = np.sum(np.abs(f.values) ** 2, axis=1)
    sq = float(dens @ contour.arclen_gamma(half)) / (2 * np.pi)
    if f.decay >= 1 and np.isfinite(contour.T_max) and contour.tail_bound > 0:
        # ||f(z)|| ~ c/|z| on the discarded tails
        g = contour.on_gamma
        far = np.abs(contour.nodes) >= 0.5 * contour.T_max
        far &= g
        if np.any(far):
            c2 = float(np.max(dens[far] * np.abs(contour.nodes[far]) ** 2))
            sq += c2 * contour.tail_bound / (2 * np.pi)
    return float(np.sqrt(sq))


def cauchy_pairing(f: GridFunction, g: GridFunction, contour: Contour) -> PairingResult:
    """``(1/2 pi i) int <f(z), g(conj z)> dz`` (linear in ``f``, antilinear in ``g``)."""
    _check_aligned(contour, f, g)
    gz = g.values[_perm(contour)]
    terms = np.sum(f.values * np.conj(gz), axis=1)
    return _quad(terms, contour)


def delta_pairing(f: GridFunction, g: GridFunction, delta_samples: np.ndarray,
                  contour: Contour) -> PairingResult:
    """``(1/2 pi i) int <delta(z) f(z), g(conj z)> dz`` with ``delta_samples`` of shape (N, m, m)."""
    _check_aligned(contour, f, g)
    D = np.asarray(delta_samples)
    if D.shape[0] != contour.N:
        raise DomainError("delta samples are not aligned with the contour")
    df = np.einsum("jpm,jm->jp", D, f.values)
    gz = g.values[_perm(contour)]
    terms = np.sum(df * np.conj(gz), axis=1)
    return _quad(terms, contour)


def cauchy_project(f: GridFunction, contour: Contour, w, check: bool = True,
                   half: bool = False) -> np.ndarray:
    """``(1/2 pi i) oint f(zeta) / (zeta - w) d zeta`` at one or many points ``w``.

    Returns shape ``(m,)`` for scalar ``w`` and ``(len(w), m)`` otherwise.

    Raises
    ------
    AccuracyError
        If some ``w`` is closer to the nodes than the local node spacing.
    """
    _check_aligned(contour, f)
    scalar = np.ndim(w) == 0
    W = np.atleast_1d(np.asarray(w, dtype=complex))
    if check:
        for wi in W:
            d, h = contour.local_spacing(wi)
            if d < h:
                raise AccuracyError(f"point {wi} lies within the local node spacing of Gamma")
    dz = contour.dz_half if half else contour.dz
    K = dz[None, :] / (contour.nodes[None, :] - W[:, None])
    out = K @ f.values / (2j * np.pi)
    return out[0] if scalar else out


# ----------------------------------------------------------------------------
# analyticity tests
# ----------------------------------------------------------------------------


def interior_probes(domain: ParabolicDomain, count: int = 12) -> np.ndarray:
    """Interior points at moderate distance from the boundary (symmetric set)."""
    mu, w = domain.mu, domain.weight
    xc = max(domain.R, 1.0)
    half_line = domain.domain_case is DomainCase.HALF_LINE
    xs = xc * np.array([0.5, 1.0, 2.0, 4.0, 8.0, 16.0])[: max(2, (count + 1) // 2)]
    pts = []
    for x in xs:
        h = mu * float(w.phi_even(x))
        pts += [x + 0.4j * h, x - 0.4j * h]
    if not half_line:
        pts += [-xs[1] + 0.4j * mu * float(w.phi_even(xs[1])),
                -xs[1] - 0.4j * mu * float(w.phi_even(xs[1]))]
    pts = np.array(pts)
    # the disc part may be all that reaches a point; keep only interior ones
    pts = pts[domain.margin(pts) > 0]
    return pts


def exterior_probes(domain: ParabolicDomain, count: int = 12) -> np.ndarray:
    """Exterior points mirroring :func:`interior_probes` across the boundary."""
    mu, w, R = domain.mu, domain.weight, domain.R
    xc = max(R, 1.0)
    xs = xc * np.array([0.5, 1.0, 2.0, 4.0, 8.0, 16.0])[: max(2, (count + 1) // 2)]
    pts = []
    for x in xs:
        h = mu * float(w.phi_even(x))
        y = max(2.0 * h, 1.6 * R)
        pts += [x + 1j * y, x - 1j * y]
    if domain.domain_case is DomainCase.HALF_LINE:
        pts += [-2.0 * R - 1.0, -2 * R - 1 + 2j * R, -2 * R - 1 - 2j * R]
    pts = np.array(pts)
    return pts[domain.margin(pts) < 0]


@dataclass(frozen=True)
class MembershipResult:
    passed: bool
    residual: float
    side: Side
    tol: float

    def __iter__(self):
        return iter((self.passed, self.residual))


def membership_test(f: GridFunction, contour: Contour, side, tol: float = TOL_MEM,
                    probes: Optional[np.ndarray] = None) -> MembershipResult:
    """Numerical analyticity test on one side of Gamma.

    ``EXT_ANALYTIC``: Cauchy projections at interior probes must be small
    relative to ``||f||_E2``; ``INT_ANALYTIC`` uses exterior probes.
    """
    side = Side(side)
    if side is Side.UNKNOWN:
        raise ValueError("membership needs a definite side")
    dom = contour.domain
    if probes is None:
        if dom is None:
            raise ValueError("contour carries no domain; pass probes explicitly")
        probes = interior_probes(dom) if side is Side.EXT_ANALYTIC else exterior_probes(dom)
    nf = e2_norm(f, contour)
    if nf == 0.0:
        return MembershipResult(True, 0.0, side, tol)
    proj = cauchy_project(f, contour, probes)
    res = float(np.max(np.linalg.norm(proj, axis=1))) / nf
    return MembershipResult(bool(res <= tol), res, side, tol)
