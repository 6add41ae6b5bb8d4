"""Numerical checks of the model identities and bounds.

Every check returns a :class:`CheckResult` whose ``passed`` flag is
recomputable from ``residual``, ``tol`` and ``comparator``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..boundary import (GridFunction, Side, cauchy_pairing, delta_pairing, e2_norm,
                        exterior_probes, interior_probes, membership_test)
from ..constants import boundary_probes, ray_probes, weighted_resolvent_norms
from ..contour import Contour
from ..errors import ExactnessFailure, InequalityViolation
from ..geometry import SEPARATION_NAME, ParabolicDomain, separation_check
from ..operator import SystemTriple
from ..transforms import (CharFunEvaluator, ModelElement, RationalFunction, H_eval,
                          ctrl_transform, model_resolvent, obs_adjoint_transform,
                          obs_transform, observation, rational_calculus, truncated_mult)


@dataclass
class CheckResult:
    name: str
    residual: float
    tol: float
    comparator: str = "le"
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.residual):
            return False
        if self.comparator == "le":
            return self.residual <= self.tol
        return self.residual > self.tol

    def as_dict(self) -> dict:
        return {"passed": self.passed, "residual": float(self.residual), "tol": float(self.tol),
                "comparator": self.comparator, "details": self.details}


def _rand_vec(rng, n, k=None):
    shape = (n,) if k is None else (n, k)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def exterior_points(domain: ParabolicDomain, rng, count: int, min_rel_margin: float = 0.25,
                    r_max: Optional[float] = None) -> np.ndarray:
    """Seeded exterior points at relative distance from the boundary."""
    R = domain.R
    r_max = 8.0 * max(R, 1.0) if r_max is None else r_max
    out = []
    while len(out) < count:
        r = rng.uniform(0.5 * R, r_max)
        th = rng.uniform(0.0, 2 * np.pi)
        z = r * np.exp(1j * th)
        if domain.margin(z) < -min_rel_margin * (1.0 + abs(z)):
            out.append(z)
    return np.array(out)


def interior_points(domain: ParabolicDomain, rng, count: int, min_rel_margin: float = 0.1,
                    r_max: Optional[float] = None) -> np.ndarray:
    R = domain.R
    r_max = 8.0 * max(R, 1.0) if r_max is None else r_max
    out = []
    while len(out) < count:
        x = rng.uniform(-R, r_max)
        y = rng.uniform(-1.0, 1.0) * max(R, domain.mu * float(domain.weight.phi_even(x)))
        z = complex(x, y)
        if domain.margin(z) > min_rel_margin * (1.0 + abs(z)):
            out.append(z)
    return np.array(out)


# ----------------------------------------------------------------------------
# constants and geometry
# ----------------------------------------------------------------------------


def check_constants(constants) -> CheckResult:
    bad = constants.violations()
    return CheckResult("constants_chain", float(len(bad)), 0.0, details={"violated": bad})


def check_separation(constants, weight) -> CheckResult:
    rep = separation_check(constants.kappa, constants.mu1, constants.ell, weight,
                           raise_on_fail=False)
    ok = abs(constants.kappa) > constants.kappa0
    # a failed precondition |kappa| > kappa0 shows as a nonpositive residual
    slack = rep.min_slack if ok else min(rep.min_slack, abs(constants.kappa) - constants.kappa0)
    det = {"inequality": SEPARATION_NAME, "min_slack": rep.min_slack,
           "kappa": rep.kappa, "kappa0": rep.kappa0,
           "precondition_kappa_gt_kappa0": bool(ok),
           "witness": None if rep.witness is None else [rep.witness[0], rep.witness[1],
                                                        [rep.witness[2].real,
                                                         rep.witness[2].imag]]}
    return CheckResult("separation", float(slack), 0.0, comparator="gt", details=det)


def check_spectral_inclusion(system: SystemTriple, domain: ParabolicDomain) -> CheckResult:
    ev = np.linalg.eigvals(system.A)
    m = domain.margin(ev)
    j = int(np.argmin(m))
    return CheckResult("spectral_inclusion", float(m[j]), 0.0, comparator="gt",
                       details={"min_margin": float(m[j]),
                                "worst_eigenvalue": [float(ev[j].real), float(ev[j].imag)]})


def check_norm_bounds(system: SystemTriple, domain: ParabolicDomain, eps: float,
                      T_max: float) -> CheckResult:
    """Both weighted resolvent norms ``<= 1 - eps`` and ``||H^{-1}|| <= 1/eps`` on probes."""
    probes = np.concatenate([boundary_probes(domain, 10 * T_max),
                             ray_probes(domain, 10 * T_max)])
    left, right = weighted_resolvent_norms(system.t, system.phi_diag, np.asarray(system.F),
                                           probes)
    sup = float(max(left.max(), right.max()))
    H = H_eval(system, probes)
    s = np.linalg.svd(H, compute_uv=False)
    hinv = float(np.max(1.0 / s[:, -1]))
    # residual: worst ratio to the allowed bound (<= 1 passes)
    ratio = max(sup / (1.0 - eps), hinv * eps)
    return CheckResult("norm_bounds", ratio, 1.0,
                       details={"sup_weighted_resolvent": sup, "one_minus_eps": 1.0 - eps,
                                "sup_H_inverse": hinv, "one_over_eps": 1.0 / eps,
                                "probes": int(probes.size)})


# ----------------------------------------------------------------------------
# algebraic identities
# ----------------------------------------------------------------------------


def check_inverse_identity(ev: CharFunEvaluator, contour: Contour, tol: float) -> CheckResult:
    z = contour.nodes[contour.on_gamma]
    D = ev.delta(z)
    Di = ev.delta_inverse(z)
    err = np.linalg.norm(D @ Di - np.eye(ev.system.n)[None], 2, axis=(1, 2))
    return CheckResult("inverse_identity", float(err.max()), tol,
                       details={"nodes": int(z.size),
                                "sup_delta_gamma": float(np.linalg.norm(D, 2, axis=(1, 2)).max()),
                                "sup_delta_inverse_gamma":
                                    float(np.linalg.norm(Di, 2, axis=(1, 2)).max())})


def check_delta_forms(ev: CharFunEvaluator, contour: Contour, tol: float = 1e-10) -> CheckResult:
    z = contour.nodes[contour.on_gamma]
    D1 = ev.delta(z)
    D2 = ev.delta_alt(z)
    rel = np.linalg.norm(D1 - D2, 2, axis=(1, 2)) / np.linalg.norm(D1, 2, axis=(1, 2))
    return CheckResult("delta_two_formulas", float(rel.max()), tol)


def check_delta_admissibility(ev: CharFunEvaluator, contour: Contour,
                              domain: ParabolicDomain, rng) -> CheckResult:
    pts = np.concatenate([interior_points(domain, rng, 200), interior_probes(domain)])
    sup_int = float(np.linalg.norm(ev.delta(pts, check=False), 2, axis=(1, 2)).max())
    z = contour.nodes[contour.on_gamma]
    sup_inv = float(np.linalg.norm(ev.delta_inverse(z, check=False), 2, axis=(1, 2)).max())
    worst = max(sup_int, sup_inv)
    return CheckResult("delta_two_sided_admissible", worst, 1e12,
                       details={"sup_delta_interior": sup_int, "sup_delta_inverse_gamma": sup_inv})


def check_intertwining(system: SystemTriple, contour: Contour, trials: int, tol: float,
                       rng) -> CheckResult:
    X = _rand_vec(rng, system.n, trials)
    z = contour.nodes
    O = obs_transform(system, X, contour)  # (N, n, k)
    OA = obs_transform(system, system.A @ X, contour)
    res = z[:, None, None] * O - (system.C @ X)[None] - OA
    r = np.abs(res).max(axis=(0, 1)) / np.linalg.norm(X, axis=0)
    return CheckResult("intertwining", float(r.max()), tol, details={"trials": trials})


def check_h_factorization(system: SystemTriple, domain: ParabolicDomain, trials: int,
                          tol: float, rng) -> CheckResult:
    z = exterior_points(domain, rng, 64)
    X = _rand_vec(rng, system.n, trials)
    O = obs_transform(system, X, z)
    C = np.asarray(system.C)
    O0 = observation(np.diag(system.t).astype(complex), C, X, z)
    H = H_eval(system, z)
    res = np.abs(O0 - np.einsum("jpq,jqk->jpk", H, O)).max(axis=(0, 1))
    r = res / np.linalg.norm(X, axis=0)
    return CheckResult("h_factorization", float(r.max()), tol)


def check_transfer_difference(ev: CharFunEvaluator, domain: ParabolicDomain, trials: int,
                              tol: float, rng) -> CheckResult:
    """``Phi(z) - Phi(w) = -kappa C [(z - A)^{-1} - (w - A)^{-1}] B``."""
    s = ev.system
    z = exterior_points(domain, rng, trials)
    w = exterior_points(domain, rng, trials)
    lhs = ev.Phi(z) - ev.Phi(w)
    I = np.eye(s.n)
    Rz = np.linalg.inv(z[:, None, None] * I - s.A[None])
    Rw = np.linalg.inv(w[:, None, None] * I - s.A[None])
    rhs = -ev.kappa * np.einsum("pn,jnm,mq->jpq", s.C, Rz - Rw, s.B)
    scale = np.maximum(1.0, np.linalg.norm(lhs, 2, axis=(1, 2)))
    r = np.linalg.norm(lhs - rhs, 2, axis=(1, 2)) / scale
    return CheckResult("transfer_difference", float(r.max()), tol)


# ----------------------------------------------------------------------------
# contour-level theorems
# ----------------------------------------------------------------------------


def gram_matrix(system: SystemTriple, contour: Contour, half: bool = False) -> np.ndarray:
    """``G_ij = (1/2 pi) int <O e_j, O e_i> |dz|`` over Gamma."""
    O = obs_transform(system, np.eye(system.n), contour)  # (N, n, n): O e_j in column j
    w = contour.arclen_gamma(half)
    return np.einsum("j,jpa,jpb->ab", w, O.conj(), O) / (2 * np.pi)


@dataclass(frozen=True)
class Exactness:
    frame_lower: float
    frame_upper: float
    K: float
    frame_lower_half: float
    frame_upper_half: float


def check_exactness(system: SystemTriple, contour: Contour, tol: float = 1e-10):
    """Frame bounds of the discretised observation map and ``K = sqrt(upper/lower)``.

    Raises
    ------
    ExactnessFailure
        When the lower frame bound falls below ``tol``.
    """
    G = gram_matrix(system, contour)
    ev = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    Gh = gram_matrix(system, contour, half=True)
    evh = np.linalg.eigvalsh(0.5 * (Gh + Gh.conj().T))
    lo, hi = float(ev[0]), float(ev[-1])
    if not lo > tol:
        raise ExactnessFailure(f"lower frame bound {lo:.3e} is below {tol:.1e}")
    return Exactness(lo, hi, float(np.sqrt(hi / lo)), float(evh[0]), float(evh[-1]))


def exactness_result(ex: Exactness, tol: float) -> CheckResult:
    return CheckResult("exactness", ex.frame_lower, tol, comparator="gt",
                       details={"frame_lower": ex.frame_lower, "frame_upper": ex.frame_upper,
                                "frame_ratio": ex.frame_upper / ex.frame_lower, "K": ex.K,
                                "frame_lower_half_rule": ex.frame_lower_half,
                                "frame_upper_half_rule": ex.frame_upper_half})


def duality_residual(system: SystemTriple, ev: CharFunEvaluator, contour: Contour,
                     trials: int, rng, delta_samples=None) -> tuple:
    """Max of ``|<x1,x2> - <O_{A,-kappa C} x1, O_{A*,B*} x2>_delta| / (|x1||x2|)``.

    Returns ``(max residual, max quadrature error estimate)``.
    """
    D = ev.delta(contour.nodes, check=False) if delta_samples is None else delta_samples
    X1 = _rand_vec(rng, system.n, trials)
    X2 = _rand_vec(rng, system.n, trials)
    F1 = observation(system.A, -ev.kappa * np.asarray(system.C), X1, contour)
    G2 = obs_adjoint_transform(system, X2, contour)
    worst, est = 0.0, 0.0
    for k in range(trials):
        r = delta_pairing(GridFunction(F1[:, :, k]), GridFunction(G2[:, :, k]), D, contour)
        exact = np.vdot(X2[:, k], X1[:, k])
        nrm = np.linalg.norm(X1[:, k]) * np.linalg.norm(X2[:, k])
        worst = max(worst, abs(exact - r.value) / nrm)
        est = max(est, r.quadrature_error_estimate / nrm)
    return worst, est


def check_duality(system, ev, contour, trials, tol, rng) -> CheckResult:
    worst, est = duality_residual(system, ev, contour, trials, rng)
    return CheckResult("duality", worst, tol, details={"trials": trials, "N": contour.N,
                                                       "quadrature_error_estimate": est})


def random_rational(domain: ParabolicDomain, n: int, rng, terms: int = 1) -> RationalFunction:
    poles = exterior_points(domain, rng, terms)
    res = _rand_vec(rng, terms, n) if n > 1 else _rand_vec(rng, terms)[:, None]
    return RationalFunction(poles, res)


def check_kernel(system: SystemTriple, ev: CharFunEvaluator, contour: Contour, trials: int,
                 tol_kernel: float, tol_adj: float, tol_quad: float, rng) -> list:
    """``W(delta g) = 0``, adjointness of ``W`` and ``O_{A*,B*}``, surjectivity."""
    dom = contour.domain
    D = ev.delta(contour.nodes, check=False)
    ker, adj, quad = 0.0, 0.0, 0.0
    for _ in range(trials):
        g = random_rational(dom, system.n, rng, terms=int(rng.integers(1, 3)))
        gs = g.sample(contour)
        dg = gs.apply(D)
        w = ctrl_transform(system, dg, contour)
        ker = max(ker, float(np.linalg.norm(w)) / e2_norm(gs, contour))
        # adjointness on f = g, against a random state x
        x = _rand_vec(rng, system.n)
        Wf = ctrl_transform(system, g, domain=dom)
        Wq = ctrl_transform(system, gs, contour)
        pair = cauchy_pairing(gs, obs_adjoint_transform(system, x, contour), contour)
        scale = max(1.0, float(np.linalg.norm(Wf))) * np.linalg.norm(x)
        adj = max(adj, abs(np.vdot(x, Wf) - pair.value) / scale)
        quad = max(quad, float(np.linalg.norm(Wf - Wq)) / max(1.0, float(np.linalg.norm(Wf))))
    # surjectivity: columns W(e_j / (z - lam)) for two exterior lam
    lams = exterior_points(dom, rng, 2)
    cols = []
    for lam in lams:
        for j in range(system.n):
            e = np.zeros(system.n)
            e[j] = 1.0
            cols.append(ctrl_transform(system, RationalFunction([lam], [e]), domain=dom))
    rank = int(np.linalg.matrix_rank(np.array(cols).T))
    return [CheckResult("kernel", ker, tol_kernel, details={"trials": trials, "N": contour.N}),
            CheckResult("adjointness", adj, tol_adj),
            CheckResult("ctrl_quadrature_vs_rational", quad, tol_quad),
            CheckResult("control_surjectivity", float(system.n - rank), 0.0,
                        details={"rank": rank, "n": system.n})]


def random_scalar_rational(domain: ParabolicDomain, rng) -> RationalFunction:
    k = int(rng.integers(1, 4))
    poles = exterior_points(domain, rng, k)
    res = _rand_vec(rng, k)
    const = complex(rng.standard_normal(), rng.standard_normal()) if rng.random() < 0.5 else 0.0
    return RationalFunction.scalar(poles, res, const)


def check_k_bound(system: SystemTriple, contour: Contour, K: float, trials: int, tol: float,
                  rng) -> list:
    """``||q(A)|| <= K max_Gamma |q|`` and direct/contour agreement for rational ``q``."""
    dom = contour.domain
    worst_ratio, agree, violations = 0.0, 0.0, 0
    for _ in range(trials):
        q = random_scalar_rational(dom, rng)
        qA = rational_calculus(system, q, "direct", domain=dom)
        qC = rational_calculus(system, q, "contour", contour=contour)
        agree = max(agree, float(np.linalg.norm(qA - qC, 2) / max(np.linalg.norm(qA, 2), 1e-300)))
        sup = float(np.max(np.abs(q(contour.gamma_nodes))))
        ratio = float(np.linalg.norm(qA, 2)) / (K * sup)
        worst_ratio = max(worst_ratio, ratio)
        violations += ratio > 1.0
    return [CheckResult("k_bound", float(violations), 0.0,
                        details={"trials": trials, "K": K, "worst_ratio": worst_ratio}),
            CheckResult("calculus_agreement", agree, tol)]


def check_membership_coherence(system: SystemTriple, ev: CharFunEvaluator, contour: Contour,
                               tol: float) -> CheckResult:
    D = ev.delta(contour.nodes, check=False)
    worst = 0.0
    for j in range(system.n):
        e = np.zeros(system.n)
        e[j] = 1.0
        el = ModelElement.from_state(system, e, contour, D)
        res = el.check(contour, tol)
        worst = max(worst, max(r.residual for r in res.values()))
    return CheckResult("membership_coherence", worst, tol)


def check_model_operator(system: SystemTriple, ev: CharFunEvaluator, contour: Contour,
                         tol: float, rng, trials: int = 5) -> CheckResult:
    """Truncated multiplication and the model resolvent against their state-space images."""
    D = ev.delta(contour.nodes, check=False)
    dom = contour.domain
    worst = 0.0
    for _ in range(trials):
        x = _rand_vec(rng, system.n)
        el = ModelElement.from_state(system, x, contour, D)
        c, sh = truncated_mult(el, contour, system, D)
        OAx = obs_transform(system, system.A @ x, contour).values
        worst = max(worst, float(np.abs(sh.f.values - OAx).max()) / np.linalg.norm(x))
        lam = exterior_points(dom, rng, 1)[0]
        # without the state, f(lam) must come from the Cauchy projection
        bare = ModelElement(f=el.f, f_tilde=el.f_tilde)
        r = model_resolvent(bare, lam, ev, contour)
        Ox = obs_transform(system, np.linalg.solve(system.A - lam * np.eye(system.n), x),
                           contour).values
        scale = max(1.0, float(np.abs(Ox).max()))
        worst = max(worst, float(np.abs(r.f.values - Ox).max()) / scale)
    return CheckResult("model_operator", worst, tol)


def delta_along_gamma(ev: CharFunEvaluator, contour: Contour) -> np.ndarray:
    """Rows ``(arc length, re z, im z, sigma_min, sigma_max)`` of delta on Gamma."""
    g = contour.on_gamma
    z = contour.nodes[g]
    s = np.linalg.svd(ev.delta(z, check=False), compute_uv=False)
    arc = np.cumsum(contour.arclen[g])
    return np.column_stack([arc, z.real, z.imag, s[:, -1], s[:, 0]])


def check_plemelj(contour: Contour, trials: int, tol: float, rng) -> CheckResult:
    """Classify rational functions by pole side with :func:`membership_test`.

    Exterior poles give an interior-analytic function, interior poles a
    decaying exterior-analytic one.  A trial is correct when the matching
    test passes and the opposite one fails.
    """
    dom = contour.domain
    wrong = 0
    worst_pass, best_fail = 0.0, np.inf
    for i in range(trials):
        interior_pole = bool(i % 2)
        k = int(rng.integers(1, 4))
        poles = (interior_points(dom, rng, k, min_rel_margin=0.25) if interior_pole
                 else exterior_points(dom, rng, k))
        f = RationalFunction.scalar(poles, _rand_vec(rng, k)).sample(contour)
        t_int = membership_test(f, contour, Side.INT_ANALYTIC, tol)
        t_ext = membership_test(f, contour, Side.EXT_ANALYTIC, tol)
        want, other = (t_ext, t_int) if interior_pole else (t_int, t_ext)
        wrong += (not want.passed) or other.passed
        worst_pass = max(worst_pass, want.residual)
        best_fail = min(best_fail, other.residual)
    return CheckResult("plemelj", float(wrong), 0.0,
                       details={"trials": trials, "tol": tol, "worst_matching_residual": worst_pass,
                                "smallest_opposite_residual": best_fail})
