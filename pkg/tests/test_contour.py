import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parabolic_model import errors
from parabolic_model.contour import (build_contour, circle_contour, integral_bound, t_max_for,
                                     tail_bound, winding)
from parabolic_model.geometry import ParabolicDomain
from parabolic_model.weights import WeightFamily

HALF = ParabolicDomain(1.0, 0.8439, WeightFamily(0.5, "half_line"))
EVEN = ParabolicDomain(1.0, 2.0, WeightFamily(0.5, "even"))
SMALL_R = ParabolicDomain(2.0, 0.3, WeightFamily(0.5, "half_line"))


@pytest.fixture(scope="module", params=["half", "even", "small_r"])
def contour(request):
    dom = {"half": HALF, "even": EVEN, "small_r": SMALL_R}[request.param]
    return build_contour(dom, N=2048)


def test_gamma_nodes_on_boundary(contour):
    z = contour.gamma_nodes
    m = contour.domain.margin(z)
    assert np.max(np.abs(m) / (1 + np.abs(z))) < 1e-9


def test_conjugation_symmetry(contour):
    p = contour.conj_perm
    np.testing.assert_allclose(contour.nodes[p], np.conj(contour.nodes), atol=1e-9)
    np.testing.assert_allclose(contour.dz[p], -np.conj(contour.dz), atol=1e-12)


def test_winding_numbers(contour):
    dom = contour.domain
    inside = [0.5 * dom.R + 0j, 5.0 + 1j, 30.0 - 2j]
    outside = [-5.0 + 0j, 5.0 + 20j, 2.0 - 50j]
    for w in inside:
        if dom.contains(w):
            assert abs(winding(contour, w) - 1) < 1e-8
    for w in outside:
        if not dom.contains(w):
            assert abs(winding(contour, w)) < 1e-8


def test_tail_bound_meets_target():
    T = t_max_for(HALF, 1e-7)
    assert tail_bound(HALF, T) <= 1e-7 * (1 + 1e-9)
    assert tail_bound(EVEN, t_max_for(EVEN, 1e-7)) <= 1e-7 * (1 + 1e-9)
    # four ends on the real line versus two on the half line
    assert tail_bound(EVEN, 1e4) == pytest.approx(2 * tail_bound(
        ParabolicDomain(1.0, 2.0, WeightFamily(0.5, "half_line")), 1e4))


def test_circle_contour_integrates_polynomials_exactly():
    c = circle_contour(2.0, 64, center=1.0)
    assert abs(np.sum(c.dz) ) < 1e-13
    assert abs(np.sum(c.dz / (c.nodes - 1.0)) - 2j * np.pi) < 1e-12


def test_odd_node_count_rejected():
    with pytest.raises((errors.ModelError, ValueError)):
        build_contour(HALF, N=1023)


def test_integral_bound_stable_under_refinement():
    x = np.geomspace(0.1, 1e3, 20)
    a = integral_bound(HALF.weight, build_contour(HALF, N=1024), x, k=1.5)
    b = integral_bound(HALF.weight, build_contour(HALF, N=2048), x, k=1.5)
    assert np.max(np.abs(a.values - b.values) / b.values) < 0.01
    assert a.K_hat == pytest.approx(b.K_hat, rel=0.01)
    assert len(a.shells) == x.size


@settings(max_examples=20, deadline=None)
@given(mu=st.floats(0.5, 3.0), R=st.floats(0.2, 3.0), alpha=st.floats(0.1, 0.5),
       case=st.sampled_from(["half_line", "even"]))
def test_contour_invariants_random_domains(mu, R, alpha, case):
    dom = ParabolicDomain(mu, R, WeightFamily(alpha, case))
    c = build_contour(dom, T_max=1e4, N=512)
    assert c.N == 512
    np.testing.assert_allclose(c.nodes[c.conj_perm], np.conj(c.nodes), atol=1e-9)
    # closed loop: the integral of dz vanishes
    assert abs(np.sum(c.dz)) < 1e-8 * np.sum(c.arclen)
    w = complex(max(R, 1.0) * 0.5, 0.0) if case == "even" else complex(0.5 * R, 0.0)
    if dom.contains(w) and c.distance(w) > 4 * c.local_spacing(w)[1]:
        assert abs(winding(c, w) - 1) < 1e-6
