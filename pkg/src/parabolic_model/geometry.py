"""Parabolic domains and the constants that make the construction work.

``Omega_int = {x in int D(phi), |y| < mu phi(x)} U B_R(0)`` and
``Omega_ext`` is the complement of its closure.  Existence statements for
``R0``, ``mu1``, ``R`` and ``eps`` are replaced by deterministic grid or
doubling searches followed by a posteriori verification.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (ConditionFiveError, GeometryError, InequalityViolation, InfeasibleError,
                     SearchFailure)
from .weights import DomainCase, WeightFamily


class Side(str, enum.Enum):
    INTERIOR = "interior"
    EXTERIOR = "exterior"


@dataclass(frozen=True)
class ParabolicDomain:
    """``Omega_{mu,R}^int`` for a weight ``phi = psi**2``."""

    mu: float
    R: float
    weight: WeightFamily

    def __post_init__(self):
        if not (self.mu > 0 and self.R > 0):
            raise GeometryError(f"mu and R must be positive (mu={self.mu}, R={self.R})")

    @property
    def domain_case(self) -> DomainCase:
        return self.weight.domain_case

    @property
    def symmetric(self) -> bool:
        return True

    def shrunk(self, sigma: float) -> "ParabolicDomain":
        """``Omega_{mu - sigma, R - sigma}``."""
        return replace(self, mu=self.mu - sigma, R=self.R - sigma)

    def height(self, x):
        """Half-height ``mu phi(x)`` of the parabolic part (0 outside D(phi))."""
        x = np.asarray(x, dtype=float)
        if self.domain_case is DomainCase.HALF_LINE:
            return np.where(x >= 0, self.mu * self.weight.phi_even(x), 0.0)
        return self.mu * self.weight.phi_even(x)

    def margin(self, z):
        """Signed margin, positive inside, zero exactly on the boundary."""
        z = np.asarray(z, dtype=complex)
        x, y = z.real, np.abs(z.imag)
        gap = self.mu * self.weight.phi_even(x) - y
        if self.domain_case is DomainCase.HALF_LINE:
            gap = np.minimum(gap, x)
        return np.maximum(gap, self.R - np.abs(z))

    def contains(self, z):
        return self.margin(z) > 0


def membership(domain: ParabolicDomain, z: complex):
    """Return ``(side, margin)`` for a point ``z``."""
    m = float(domain.margin(z))
    return (Side.INTERIOR if m > 0 else Side.EXTERIOR), m


def star_domain_contains(mu1: float, weight: WeightFamily, z) -> np.ndarray:
    """Membership in ``{|y| < mu1 phi_*(x)}`` with the even continuation."""
    z = np.asarray(z, dtype=complex)
    return np.abs(z.imag) < mu1 * weight.phi_even(z.real)


# ----------------------------------------------------------------------------
# constants
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantsBundle:
    """Every constant of the construction, in one immutable record."""

    mu: float
    ess: float
    k0: float
    mu0: float
    r_prime: float
    k: float
    ell: float
    R0: float = float("nan")
    R: float = float("nan")
    eps: float = float("nan")
    sigma_shrink: float = float("nan")
    mu1: float = float("nan")
    kappa0: float = float("nan")
    kappa: float = float("nan")
    t0: float = float("nan")
    verified: bool = False

    @property
    def rho(self) -> float:
        return 1.0 / (2.0 * self.k)

    def as_dict(self) -> dict:
        return asdict(self)

    def violations(self) -> list:
        """Names of the bundle invariants that fail (empty when consistent)."""
        bad = []
        rk = self.r_prime * self.k
        if not rk < 1:
            bad.append("r' k < 1")
        elif not self.r_prime / math.sqrt(1 - rk * rk) < self.mu:
            bad.append("r'/sqrt(1 - r'^2 k^2) < mu")
        if not self.r_prime > self.ess:
            bad.append("r' > ess")
        if not self.k > self.k0:
            bad.append("k > k0")
        if not self.mu > self.mu0:
            bad.append("mu > mu0")
        if not math.isnan(self.R) and not self.R > self.R0:
            bad.append("R > R0")
        if not math.isnan(self.mu1) and not self.mu1 > self.mu:
            bad.append("mu1 > mu")
        if not math.isnan(self.eps) and not 0 < self.eps < 1:
            bad.append("0 < eps < 1")
        if not math.isnan(self.kappa) and not abs(self.kappa) > self.kappa0:
            bad.append("|kappa| > kappa0")
        return bad


def mu0_of(ess: float, k0: float) -> float:
    """``mu0 = ess / sqrt(1 - ess^2 k0^2)``; requires ``ess * k0 < 1``."""
    if ess < 0:
        raise ValueError("essential norm surrogate must be >= 0")
    if not ess * k0 < 1:
        raise ConditionFiveError(f"ess * k0 = {ess * k0} must be < 1")
    return ess / math.sqrt(1.0 - (ess * k0) ** 2)


def _rk_ok(r: float, k: float, mu: float, slack: float) -> bool:
    rk = r * k
    if not rk < 1 - slack:
        return False
    return r / math.sqrt(1 - rk * rk) < mu * (1 - slack)


def pick_constants(mu: float, ess: float, k0: float, ell: float,
                   slack: float = 1e-3, max_halvings: int = 60) -> ConstantsBundle:
    """Choose ``r' > ess`` and ``k > k0`` with ``r'k < 1`` and ``r'/sqrt(1-r'^2k^2) < mu``.

    Rule: ``k`` is the midpoint of ``(k0, k_max)`` where ``k_max`` is the
    largest ``k`` compatible with ``r' = ess`` (the gap is capped at 1 when
    ``k_max`` is infinite); ``r'`` is then the midpoint of
    ``(ess, mu / sqrt(1 + mu^2 k^2))``.  Both offsets are halved toward
    ``(ess, k0)`` until the inequalities hold with relative slack.
    """
    mu0 = mu0_of(ess, k0)
    if not mu > mu0:
        raise InfeasibleError(f"mu = {mu} must exceed mu0 = {mu0}")
    if ess * ess > 0:
        k_max = math.sqrt(max(1.0 / ess ** 2 - 1.0 / mu ** 2, 0.0))
        k_gap = min(k_max - k0, 1.0)
    else:
        k_gap = 1.0
    k = k0 + 0.5 * k_gap
    r_gap = mu / math.sqrt(1.0 + (mu * k) ** 2) - ess
    r = ess + 0.5 * r_gap
    dk, dr = k - k0, r - ess
    for _ in range(max_halvings):
        if dr > 0 and dk > 0 and _rk_ok(r, k, mu, slack):
            break
        dk *= 0.5
        k = k0 + dk
        r_gap = mu / math.sqrt(1.0 + (mu * k) ** 2) - ess
        dr = 0.5 * r_gap if r_gap > 0 else 0.5 * dr
        r = ess + dr
    else:
        raise InfeasibleError("no (r', k) satisfies the constant inequalities")
    return ConstantsBundle(mu=mu, ess=ess, k0=k0, mu0=mu0, r_prime=r, k=k, ell=ell,
                           verified=_rk_ok(r, k, mu, 0.0))


def disc_threshold(mu: float, r_prime: float, weight: WeightFamily,
                   t_hi: float = 1e12) -> float:
    """Smallest ``t*`` with ``t mu phi(t) / sqrt(t^2 + mu^2 phi(t)^2) > r' phi(t)`` for ``t > t*``.

    Equivalent to ``t / phi(t) > r' mu / sqrt(mu^2 - r'^2)``; the left side
    is nondecreasing for concave phi, so the threshold is unique.
    """
    if not mu > r_prime:
        raise InfeasibleError(f"need mu > r' (mu={mu}, r'={r_prime})")
    c = r_prime * mu / math.sqrt(mu * mu - r_prime * r_prime)

    def g(t):
        return t / float(weight.phi_even(t)) - c

    if g(0.0) >= 0:
        return 0.0
    if g(t_hi) <= 0:
        raise InfeasibleError("cone-distance inequality never holds; r' too large for mu")
    return brentq(g, 0.0, t_hi, xtol=1e-15, rtol=1e-15, maxiter=500)


def sample_disc_inclusion(domain: ParabolicDomain, r_prime: float, t_samples: int = 1000,
                          angles: int = 100, t_max: float = 1e6) -> tuple:
    """Count sampled points of discs ``B(t, r' phi(t))`` outside ``clos Omega_int``.

    Returns ``(violations, worst_margin, witness)`` where ``witness`` is the
    ``(t, angle)`` with the most negative margin.
    """
    w = domain.weight
    t = np.concatenate([np.linspace(0.0, 10.0, t_samples // 2),
                        np.geomspace(10.0, t_max, t_samples - t_samples // 2)])
    if domain.domain_case is DomainCase.EVEN_ON_R:
        t = np.concatenate([-t[::-1], t])
    th = np.linspace(0.0, 2.0 * np.pi, angles, endpoint=False)
    rad = r_prime * w.phi_even(t)
    pts = t[:, None] + rad[:, None] * np.exp(1j * th)[None, :]
    m = domain.margin(pts)
    # boundary points of the (open) disc may touch the (open) domain boundary
    tol = 1e-12 * (1.0 + np.abs(pts))
    bad = m < -tol
    idx = np.unravel_index(np.argmin(m / (1.0 + np.abs(pts))), m.shape)
    return int(bad.sum()), float(m[idx]), (float(t[idx[0]]), float(th[idx[1]]))


def r0_search(mu: float, r_prime: float, weight: WeightFamily, safety: float = 0.05,
              verify: bool = True, t_samples: int = 1000, angles: int = 100) -> float:
    """Radius ``R0`` such that every disc ``B(t, r' phi(t))`` lies in ``Omega_{mu,R0}``.

    Discs with ``|t| > t*`` sit inside the cone spanned by 0 and
    ``t +- i mu phi(t)``; the remaining ones are covered by a disc of radius
    ``sup_{|t|<=t*} (|t| + r' phi(t))``, enlarged by ``safety``.
    """
    ts = disc_threshold(mu, r_prime, weight)
    grid = np.linspace(0.0, ts, 2001)
    R0 = float(np.max(grid + r_prime * weight.phi_even(grid)))
    R0 = max(R0, ts + r_prime * float(weight.phi_even(ts))) * (1.0 + safety)
    if verify:
        dom = ParabolicDomain(mu=mu, R=R0, weight=weight)
        bad, worst, witness = sample_disc_inclusion(dom, r_prime, t_samples, angles)
        if bad:
            raise GeometryError(f"{bad} disc samples leave Omega_int (worst margin {worst})",
                                witness=witness)
    return R0


def kappa0_of(ell: float, mu1: float, weight: WeightFamily) -> float:
    """``kappa0 = ell + mu1 (2 + a + phi(a))`` with ``a = 1 + ell phi(1)``."""
    a = 1.0 + ell * float(weight.phi_even(1.0))
    return ell + mu1 * (2.0 + a + float(weight.phi_even(a)))


def _closure_samples(domain: ParabolicDomain, count: int = 10_000) -> np.ndarray:
    """Points of ``clos Omega_{mu,R}`` concentrated where the disc bulges."""
    R = domain.R
    n_b = count // 2
    th = np.linspace(0.0, 2 * np.pi, n_b, endpoint=False)
    ring = R * np.exp(1j * th)
    n_i = count - n_b
    side = int(math.sqrt(n_i / 2))
    xs = np.linspace(-R, R, side)
    ys = np.linspace(0.0, 1.0, side)
    X, Y = np.meshgrid(xs, ys)
    half = np.sqrt(np.maximum(R * R - X * X, 0.0))
    disc = (X + 1j * Y * half).ravel()
    # parabola boundary near the disc
    xp = np.linspace(0.0 if domain.domain_case is DomainCase.HALF_LINE else -4 * R, 4 * R,
                     n_i - disc.size)
    par = xp + 1j * domain.mu * domain.weight.phi_even(xp)
    pts = np.concatenate([ring, disc, np.conj(disc), par, np.conj(par)])
    return pts


def mu1_search(mu: float, R: float, weight: WeightFamily, max_j: int = 100,
               samples: int = 10_000) -> float:
    """Smallest ``mu1 = mu (1 + j/10)`` with ``{|y| < mu1 phi_*(x)} ⊃ clos Omega_{mu,R}``."""
    dom = ParabolicDomain(mu=mu, R=R, weight=weight)
    pts = _closure_samples(dom, samples)
    need = np.abs(pts.imag) / weight.phi_even(pts.real)
    worst = float(np.max(need))
    for j in range(1, max_j + 1):
        mu1 = mu * (1.0 + j / 10.0)
        if mu1 > worst:
            return mu1
    raise SearchFailure(f"mu1 search exhausted at j={max_j}; need mu1 > {worst}", achieved=worst)


def threshold_t0(k: float, weight: WeightFamily, t_hi: float = 1e15) -> float:
    """Smallest ``t0 > 0`` with ``phi(t)/t < k`` for ``t >= t0``."""
    def g(t):
        return float(weight.phi_even(t)) / t - k
    lo = 1e-12
    if g(lo) < 0:
        return lo
    if g(t_hi) >= 0:
        raise InfeasibleError(f"phi(t)/t never drops below k = {k}")
    return brentq(g, lo, t_hi, xtol=1e-14, rtol=1e-14, maxiter=500)


@dataclass(frozen=True)
class SeparationReport:
    min_slack_ka: float
    min_slack_xt: float
    witness: Optional[tuple]
    kappa: float
    kappa0: float

    @property
    def ok(self) -> bool:
        return self.min_slack_ka >= 0 and self.min_slack_xt >= 0 and self.kappa > self.kappa0

    @property
    def min_slack(self) -> float:
        return min(self.min_slack_ka, self.min_slack_xt)


SEPARATION_NAME = "|t + i kappa phi(t) - z| >= ell phi(t) on Omega_*,mu1"


def separation_grid(weight: WeightFamily, t_max: float = 1e6, count: int = 400) -> np.ndarray:
    t = np.concatenate([[0.0], np.geomspace(1e-3, t_max, count)])
    if weight.domain_case is DomainCase.EVEN_ON_R:
        t = np.concatenate([-t[:0:-1], t])
    return t


def separation_check(kappa: float, mu1: float, ell: float, weight: WeightFamily,
                     grid: Optional[np.ndarray] = None, raise_on_fail: bool = True,
                     z_per_t: int = 41) -> SeparationReport:
    """Verify the two separation inequalities on a grid.

    * ``|t + i kappa phi_*(t) - (x + i mu1 phi_*(x))| >= ell phi_*(t)``
      for ``x, t`` on the grid;
    * ``|t + i kappa phi(t) - z| >= ell phi(t)`` for ``t`` in ``D(phi)``
      and ``z`` sampled from ``{|y| < mu1 phi_*(x)}``.

    Slacks are reported relative to ``ell phi(t)``.  With ``|kappa|`` not
    above ``kappa0`` the report is marked failed even without a witness.
    """
    kappa = abs(kappa)
    k0 = kappa0_of(ell, mu1, weight)
    t = separation_grid(weight) if grid is None else np.asarray(grid, dtype=float)
    ts = t if weight.domain_case is DomainCase.EVEN_ON_R else t[t >= 0]
    pt = ts + 1j * kappa * weight.phi_even(ts)
    bound = ell * weight.phi_even(ts)
    # (x, t) inequality: x over the full real line
    x = np.concatenate([-t[::-1], t]) if weight.domain_case is DomainCase.HALF_LINE else t
    bx = x + 1j * mu1 * weight.phi_even(x)
    d = np.abs(pt[:, None] - bx[None, :]) / bound[:, None] - 1.0
    i, j = np.unravel_index(np.argmin(d), d.shape)
    slack_xt = float(d[i, j])
    witness = None
    if slack_xt < 0:
        witness = ("x-t", float(ts[i]), complex(bx[j]))
    # (t, z) inequality with z filling the star domain over x near t
    frac = np.linspace(-1.0, 1.0, z_per_t) * (1 - 1e-12)
    slack_ka = np.inf
    for xi in (ts, ts * 0.5, ts * 2.0):
        zs = xi[:, None] + 1j * frac[None, :] * mu1 * weight.phi_even(xi)[:, None]
        dd = np.abs(pt[:, None] - zs) / bound[:, None] - 1.0
        a, b = np.unravel_index(np.argmin(dd), dd.shape)
        if dd[a, b] < slack_ka:
            slack_ka = float(dd[a, b])
            if slack_ka < 0 and witness is None:
                witness = ("t-z", float(ts[a]), complex(zs[a, b]))
    rep = SeparationReport(min_slack_ka=slack_ka, min_slack_xt=slack_xt, witness=witness,
                           kappa=kappa, kappa0=k0)
    if raise_on_fail and not rep.ok:
        if witness is not None:
            raise InequalityViolation(f"violated: {SEPARATION_NAME}", witness=witness,
                                      slack=rep.min_slack)
        raise InequalityViolation(
            f"precondition |kappa| > kappa0 fails ({kappa} <= {k0}) for {SEPARATION_NAME}",
            slack=rep.min_slack)
    return rep
