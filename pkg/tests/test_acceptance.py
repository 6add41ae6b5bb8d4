"""One check per acceptance criterion; each prints a single PASS/FAIL line."""

import math

import numpy as np
import pytest

from parabolic_model.contour import integral_bound
from parabolic_model.geometry import (ParabolicDomain, disc_threshold, r0_search,
                                      sample_disc_inclusion)
from parabolic_model.harness import checks as C
from parabolic_model.harness.scenario import Scenario, n3_fixture, scalar_fixture
from parabolic_model.transforms import CharFunEvaluator, H_eval
from parabolic_model.constants import boundary_probes, ray_probes, weighted_resolvent_norms
from parabolic_model.weights import WeightFamily


def report(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def n3():
    b = n3_fixture().build()
    ev = CharFunEvaluator(b.system, b.constants.kappa, b.constants, b.domain)
    return b, ev


def test_01_inverse_identity(n3, capsys):
    b, ev = n3
    c = b.contour_at(1024)
    g = np.flatnonzero(c.on_gamma)
    idx = g[np.linspace(0, g.size - 1, 512).round().astype(int)]
    z = c.nodes[np.unique(idx)]
    assert z.size == 512
    err = np.linalg.norm(ev.delta(z) @ ev.delta_inverse(z) - np.eye(3)[None], 2, axis=(1, 2))
    r = float(err.max())
    report(capsys, 1, "inverse identity", r <= 1e-10, f"max residual {r:.3e} <= 1e-10")


def test_02_scalar_golden_values(capsys):
    b = scalar_fixture().build()
    ev = CharFunEvaluator(b.system, kappa=1.0)
    d = complex(ev.delta(0.0)[0, 0])
    di = complex(ev.delta_inverse(0.0)[0, 0])
    e1 = abs(d - (0.363207 - 0.353774j))
    e2 = abs(di - (1.412844 + 1.376147j))
    report(capsys, 2, "scalar golden values", max(e1, e2) <= 1e-6,
           f"delta(0) = {d:.6f} (err {e1:.1e}), delta(0)^-1 = {di:.6f} (err {e2:.1e})")


def test_03_intertwining(n3, capsys):
    b, _ = n3
    r = C.check_intertwining(b.system, b.contour, 20, 1e-10, np.random.default_rng(3))
    report(capsys, 3, "intertwining", r.passed, f"max residual {r.residual:.3e} <= 1e-10")


def test_04_duality(n3, capsys):
    b, ev = n3
    assert b.contour.N == 2048 and b.contour.tail_bound <= 1e-7
    r2048 = C.duality_residual(b.system, ev, b.contour, 50, np.random.default_rng(4))[0]
    r4096 = C.duality_residual(b.system, ev, b.contour_at(4096), 50,
                               np.random.default_rng(4))[0]
    ok = r2048 <= 1e-4 and r4096 <= r2048 / 2
    report(capsys, 4, "duality", ok,
           f"N=2048 {r2048:.3e} <= 1e-4, N=4096 {r4096:.3e} <= N=2048/2 = {r2048 / 2:.3e}")


def test_05_kernel_and_adjointness(n3, capsys):
    b, ev = n3
    res = {r.name: r for r in C.check_kernel(b.system, ev, b.contour, 20, 1e-5, 1e-6, 1e-6,
                                              np.random.default_rng(5))}
    k, a = res["kernel"], res["adjointness"]
    report(capsys, 5, "kernel", k.passed and a.passed,
           f"||W(delta g)||/||g|| {k.residual:.3e} <= 1e-5, adjointness {a.residual:.3e} <= 1e-6")


def test_06_exactness_and_k_bound(n3, capsys):
    b, _ = n3
    ex = C.check_exactness(b.system, b.contour)
    res = {r.name: r for r in C.check_k_bound(b.system, b.contour, ex.K, 50, 1e-8,
                                               np.random.default_rng(6))}
    v = int(res["k_bound"].residual)
    ok = ex.frame_lower > 0 and v == 0
    report(capsys, 6, "exactness / K bound", ok,
           f"frame_lower {ex.frame_lower:.4f}, frame_upper/frame_lower "
           f"{ex.frame_upper / ex.frame_lower:.4f}, K {ex.K:.4f}, violations {v}/50")


def test_07_geometry(n3, capsys):
    b, _ = n3
    cb, w = b.constants, b.system.weight
    R0 = r0_search(cb.mu, cb.r_prime, w)
    bad, _, _ = sample_disc_inclusion(ParabolicDomain(cb.mu, R0, w), cb.r_prime,
                                      t_samples=1000, angles=100)
    unit = WeightFamily(0.5, "half_line")  # phi(t) = 1 + t
    ts = disc_threshold(1.0, 0.5, unit)
    terr = abs(ts - (1 + math.sqrt(3)) / 2)
    x = np.geomspace(0.1, 1e4, 40)
    a = integral_bound(w, b.contour_at(1024), x, k=cb.k)
    c = integral_bound(w, b.contour_at(2048), x, k=cb.k)
    drift = float(np.max(np.abs(a.values - c.values) / c.values))
    ok = bad == 0 and terr <= 1e-8 and drift <= 0.01
    report(capsys, 7, "geometry", ok,
           f"disc violations {bad}/100000, |t* - (1+sqrt3)/2| {terr:.1e}, "
           f"integral bound change N->2N {drift:.1e}")


def test_08_norm_bounds(n3, capsys):
    b, _ = n3
    cb, s, dom = b.constants, b.system, b.domain
    T = b.contour.T_max
    probes = np.concatenate([boundary_probes(dom, 10 * T), ray_probes(dom, 10 * T)])
    left, right = weighted_resolvent_norms(s.t, s.phi_diag, np.asarray(s.F), probes)
    hs = np.linalg.svd(H_eval(s, probes), compute_uv=False)
    hinv = float(np.max(1.0 / hs[:, -1]))
    ok = max(left.max(), right.max()) <= 1 - cb.eps and hinv <= 1 / cb.eps
    report(capsys, 8, "norm bounds", ok,
           f"sup ||FC(A0-z)^-1B|| {left.max():.4f}, sup ||C(A0-z)^-1BF|| {right.max():.4f} "
           f"<= 1-eps = {1 - cb.eps:.2f}; sup ||H^-1|| {hinv:.4f} <= 1/eps = {1 / cb.eps:.1f}")


def test_09_spectral_inclusion_sweep(capsys):
    t_maxes = [10.0, 100.0, 1000.0] * 3 + [30.0]
    margins = []
    for i, tm in enumerate(t_maxes):
        b = Scenario(name=f"sweep{i}", n=8, t_max=tm, seed=100 + i).build()
        margins.append(C.check_spectral_inclusion(b.system, b.domain).residual)
    ok = min(margins) > 0
    report(capsys, 9, "spectral inclusion", ok,
           f"10 scenarios, t_max in {{10, 100, 1000, 30}}, min margin {min(margins):.4f} > 0")


def test_10_plemelj_suite(n3, capsys):
    b, _ = n3
    r = C.check_plemelj(b.contour, 50, 1e-4, np.random.default_rng(10))
    d = r.details
    report(capsys, 10, "Plemelj suite", r.passed,
           f"misclassified {int(r.residual)}/50 at tol 1e-4 (matching side <= "
           f"{d['worst_matching_residual']:.1e}, opposite side >= "
           f"{d['smallest_opposite_residual']:.2f})")
