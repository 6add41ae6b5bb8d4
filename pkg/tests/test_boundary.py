import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parabolic_model import errors
from parabolic_model.boundary import (GridFunction, Side, cauchy_pairing, cauchy_project,
                                      delta_pairing, e2_norm, membership_test)
from parabolic_model.contour import build_contour
from parabolic_model.geometry import ParabolicDomain
from parabolic_model.weights import WeightFamily

DOM = ParabolicDomain(1.0, 0.8439, WeightFamily(0.5, "half_line"))
_C = build_contour(DOM, N=2048)


@pytest.fixture(scope="module")
def c2048():
    return _C


def pole(p):
    return lambda z: (1.0 / (z - p))[:, None]


def test_cauchy_project_reproduces_interior_analytic(c2048):
    p = -3.0 + 1j  # exterior pole
    f = GridFunction.from_callable(pole(p), c2048)
    w = np.array([0.3, 4.0 + 1.0j, 20.0 - 3.0j])
    np.testing.assert_allclose(cauchy_project(f, c2048, w)[:, 0], 1.0 / (w - p), atol=1e-10)
    # exterior evaluation points see nothing
    v = np.array([-2.0, 3.0 + 10j])
    assert np.abs(cauchy_project(f, c2048, v)).max() < 1e-10


def test_cauchy_project_refuses_points_on_contour(c2048):
    f = GridFunction.from_callable(pole(-3.0), c2048)
    with pytest.raises(errors.AccuracyError):
        cauchy_project(f, c2048, c2048.nodes[10])


def test_cauchy_pairing_residue_oracle(c2048):
    # f has an exterior pole, conj(g(conj z)) has the interior pole conj(q):
    # the pairing is the residue f(conj q)
    p, q = -2.0 + 0.5j, 3.0 + 1.0j
    f = GridFunction.from_callable(pole(p), c2048)
    g = GridFunction.from_callable(pole(q), c2048)
    r = cauchy_pairing(f, g, c2048)
    assert abs(r.value - 1.0 / (np.conj(q) - p)) < 1e-10
    assert r.quadrature_error_estimate < 1e-8
    g_ext = GridFunction.from_callable(pole(-5.0 - 1j), c2048)
    assert abs(cauchy_pairing(f, g_ext, c2048).value) < 1e-10


def test_pairing_conjugate_symmetry(c2048):
    f = GridFunction.from_callable(pole(2.0 + 0.5j), c2048)
    g = GridFunction.from_callable(pole(-1.0 + 2j), c2048)
    a = cauchy_pairing(f, g, c2048).value
    b = cauchy_pairing(g, f, c2048).value
    assert abs(a - np.conj(b)) < 1e-14


def test_delta_pairing_with_identity_is_cauchy_pairing(c2048):
    f = GridFunction.from_callable(pole(-2.0), c2048)
    g = GridFunction.from_callable(pole(3.0 + 1j), c2048)
    D = np.broadcast_to(np.eye(1), (c2048.N, 1, 1))
    assert delta_pairing(f, g, D, c2048).value == cauchy_pairing(f, g, c2048).value


def test_e2_norm_half_rule_agrees(c2048):
    f = GridFunction.from_callable(pole(-2.0), c2048, decay=1)
    assert e2_norm(f, c2048) == pytest.approx(e2_norm(f, c2048, half=True), rel=1e-6)


def test_grid_function_algebra(c2048):
    f = GridFunction.from_callable(pole(-2.0), c2048)
    g = GridFunction.from_callable(pole(-3.0), c2048)
    np.testing.assert_allclose((f + g * 2.0 - f).values, 2.0 * g.values)
    with pytest.raises(errors.DomainError):
        cauchy_pairing(f, GridFunction.zeros(build_contour(DOM, N=512)), c2048)


def test_membership_sides(c2048):
    f = GridFunction.from_callable(pole(-2.0), c2048)
    assert membership_test(f, c2048, Side.INT_ANALYTIC).passed
    assert not membership_test(f, c2048, Side.EXT_ANALYTIC).passed
    g = GridFunction.from_callable(pole(3.0 + 0.5j), c2048)
    ok, res = membership_test(g, c2048, Side.EXT_ANALYTIC)
    assert ok and res < 1e-8


@settings(max_examples=25, deadline=None)
@given(r=st.floats(1.0, 30.0), th=st.floats(0.0, 2 * np.pi),
       coef=st.complex_numbers(min_magnitude=0.1, max_magnitude=10))
def test_projection_splits_sum_of_poles(r, th, coef):
    c2048 = _C
    pe = r * np.exp(1j * th)
    if DOM.margin(pe) > -0.25 * (1 + abs(pe)):
        return
    pi = 4.0 + 0.5j
    f = GridFunction.from_callable(lambda z: (coef / (z - pe) + 1.0 / (z - pi))[:, None], c2048)
    w = 6.0 - 1.0j
    got = cauchy_project(f, c2048, w)[0]
    assert abs(got - coef / (w - pe)) < 1e-8 * max(1.0, abs(coef))
