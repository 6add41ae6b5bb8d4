"""The constants pipeline: ``mu0 -> (r', k) -> R0 -> (R, eps) -> mu1 -> kappa0 -> kappa``."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .contour import t_max_for
from .errors import SearchFailure
from .geometry import (ConstantsBundle, ParabolicDomain, kappa0_of, mu1_search, pick_constants,
                       r0_search, threshold_t0)
from .operator import PerturbationSplit, SpectralDiagonal, SystemTriple, build_system, essential_split
from .weights import DomainCase, WeightFamily

EPS_TARGET = 0.2
KAPPA_FACTOR = 1.05


def default_sigma(mu: float, R: float) -> float:
    return min(0.05 * R, 0.05 * mu)


def boundary_probes(domain: ParabolicDomain, x_max: float, count: int = 600) -> np.ndarray:
    """Points on the boundary of ``domain`` (both halves), graded toward the origin."""
    mu, R, w = domain.mu, domain.R, domain.weight
    half = domain.domain_case is DomainCase.HALF_LINE
    x = np.concatenate([np.linspace(0.0, 4.0 * R, count // 3),
                        np.geomspace(4.0 * R, max(x_max, 8.0 * R), count // 3)])
    if not half:
        x = np.concatenate([-x[::-1], x])
    par = x + 1j * mu * w.phi_even(x)
    par = par[np.abs(par) >= R]
    th = np.linspace(0.0, np.pi, count // 3)
    arc = R * np.exp(1j * th)
    gap = mu * w.phi_even(arc.real) - arc.imag
    if half:
        gap = np.minimum(gap, arc.real)
    arc = arc[gap <= 0]
    pts = [par, arc]
    if half:
        h0 = mu * float(w.phi_even(0.0))
        if h0 > R:
            pts.append(1j * np.linspace(R, h0, 32))
    up = np.concatenate(pts)
    return np.concatenate([up, np.conj(up)])


def ray_probes(domain: ParabolicDomain, r_max: float, rays: int = 12, count: int = 60) -> np.ndarray:
    """Exterior points on rays from the origin out to ``r_max``."""
    th = np.linspace(0.0, 2 * np.pi, rays, endpoint=False)
    r = np.geomspace(max(domain.R, 1e-3), r_max, count)
    pts = (r[None, :] * np.exp(1j * th)[:, None]).ravel()
    return pts[~domain.contains(pts)]


def weighted_resolvent_norms(t, phi_t, F, z) -> tuple:
    """``(||F C (A0 - z)^{-1} B||, ||C (A0 - z)^{-1} B F||)`` for each probe ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    d = 1j * phi_t[None, :] / (t[None, :] - z[:, None])
    left = np.linalg.norm(F[None, :, :] * d[:, None, :], 2, axis=(1, 2))
    right = np.linalg.norm(d[:, :, None] * F[None, :, :], 2, axis=(1, 2))
    return left, right


@dataclass(frozen=True)
class RSearchResult:
    R: float
    eps: float
    sup: float
    doublings: int
    sigma: float
    probes: int


def R_search(system: SystemTriple, constants: ConstantsBundle, eps_target: float = EPS_TARGET,
             R_start: Optional[float] = None, T_max: Optional[float] = None,
             max_doublings: int = 10) -> RSearchResult:
    """Double ``R`` until both weighted resolvent norms are ``<= 1 - eps_target``.

    The norms are subharmonic in ``z`` and vanish at infinity, so their
    supremum over the exterior is attained on the boundary; the probes are
    the boundary of the shrunk domain ``Omega_{mu - sigma, R - sigma}``
    (whose exterior contains the original one) plus exterior rays out to
    ``10 T_max``.  The returned ``eps`` is the certified ``eps_target``.

    Raises
    ------
    SearchFailure
        When ``R`` would exceed ``2**max_doublings * R0``.
    """
    if not 0 < eps_target < 1:
        raise ValueError("eps_target must lie in (0, 1)")
    R0, mu = constants.R0, constants.mu
    R = 1.01 * R0 if R_start is None else float(R_start)
    if not R > R0:
        raise ValueError(f"start value {R} must exceed R0 = {R0}")
    t = system.t
    phi_t = system.phi_diag
    F = np.asarray(system.F)
    sup = float("nan")
    for j in range(max_doublings + 1):
        if R > 2 ** max_doublings * R0 * (1 + 1e-12):
            break
        dom = ParabolicDomain(mu=mu, R=R, weight=system.weight)
        T = t_max_for(dom) if T_max is None else T_max
        sigma = default_sigma(mu, R)
        shrunk = dom.shrunk(sigma)
        probes = np.concatenate([boundary_probes(shrunk, 10 * T),
                                 ray_probes(shrunk, 10 * T)])
        left, right = weighted_resolvent_norms(t, phi_t, F, probes)
        sup = float(max(left.max(initial=0.0), right.max(initial=0.0)))
        if sup <= 1.0 - eps_target:
            return RSearchResult(R=R, eps=eps_target, sup=sup, doublings=j, sigma=sigma,
                                 probes=probes.size)
        R *= 2.0
    raise SearchFailure(f"R search exceeded 2^{max_doublings} R0; achieved sup {sup:.4f}",
                        achieved=sup)


@dataclass(frozen=True)
class Pipeline:
    """Everything derived from ``(A0, psi, F)`` before any contour work."""

    constants: ConstantsBundle
    system: SystemTriple
    domain: ParabolicDomain
    split: PerturbationSplit
    r_search: RSearchResult

    @property
    def shrunk_domain(self) -> ParabolicDomain:
        return self.domain.shrunk(self.constants.sigma_shrink)


def build_constants(a0: SpectralDiagonal, weight: WeightFamily, F, ess: float = 0.0,
                    mu: Optional[float] = None, ell: Optional[float] = None,
                    kappa: Optional[float] = None, kappa_sign: int = 1,
                    eps_target: float = EPS_TARGET, R_start: Optional[float] = None) -> Pipeline:
    """Run the full constants chain and assemble the system with ``kappa``.

    Defaults: ``mu = max(1, 2 mu0)``, ``ell = max(1, 2 ||F||)`` and
    ``kappa = kappa_sign * 1.05 * kappa0``.
    """
    F = np.atleast_2d(np.asarray(F, dtype=complex))
    normF = float(np.linalg.norm(F, 2))
    k0 = weight.k0
    from .geometry import mu0_of
    mu0 = mu0_of(ess, k0)
    mu = max(1.0, 2.0 * mu0) if mu is None else float(mu)
    ell = max(1.0, 2.0 * normF) if ell is None else float(ell)
    cb = pick_constants(mu, ess, k0, ell)
    R0 = r0_search(mu, cb.r_prime, weight)
    split = essential_split(F, cb.r_prime, ess)
    sys0 = build_system(a0, weight, F, 0.0, ell)
    cb = replace(cb, R0=R0)
    rs = R_search(sys0, cb, eps_target, R_start=R_start)
    mu1 = mu1_search(mu, rs.R, weight)
    k0_val = kappa0_of(ell, mu1, weight)
    if kappa is None:
        kappa = math.copysign(KAPPA_FACTOR * k0_val, kappa_sign)
    cb = replace(cb, R=rs.R, eps=rs.eps, sigma_shrink=rs.sigma, mu1=mu1, kappa0=k0_val,
                 kappa=float(kappa), t0=threshold_t0(cb.k, weight))
    cb = replace(cb, verified=cb.verified and not cb.violations())
    system = sys0.with_kappa(kappa)
    return Pipeline(constants=cb, system=system, domain=ParabolicDomain(mu, rs.R, weight),
                    split=split, r_search=rs)
