import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parabolic_model import errors
from parabolic_model.operator import SpectralDiagonal, build_system, random_perturbation
from parabolic_model.transforms import (CharFunEvaluator, H_eval, ModelElement, RationalFunction,
                                        ctrl_transform, delta_eval, delta_inverse,
                                        model_resolvent, obs_transform, rational_calculus,
                                        truncated_mult)
from parabolic_model.weights import WeightFamily

W = WeightFamily(0.5, "half_line")


def scalar_system(kappa=1.0):
    return build_system(SpectralDiagonal([2.0]), W, [[0.2]], kappa=kappa, ell=1.0)


# plain complex arithmetic for A0 = 2, psi = sqrt 3, phi = 3, F = 0.2
def oracle_delta(z, kappa):
    return (2 - z + 0.6j) / (2 + 3j * kappa - z + 0.6j)


def oracle_delta_inv(z, kappa):
    return 1 + kappa * 1j * 3 / (2 + 0.6j - z)


def test_golden_delta_values():
    ev = CharFunEvaluator(scalar_system(1.0))
    d = ev.delta(0.0)[0, 0]
    assert d == pytest.approx(oracle_delta(0.0, 1.0), abs=1e-14)
    assert d == pytest.approx(0.363207 - 0.353774j, abs=1e-6)
    di = ev.delta_inverse(0.0)[0, 0]
    assert di == pytest.approx(oracle_delta_inv(0.0, 1.0), abs=1e-14)
    assert di == pytest.approx(1.412844 + 1.376147j, abs=1e-6)


def test_golden_transform_values():
    s = scalar_system(1.0)
    # C (z - A)^{-1} x at z = 0, x = 1
    assert obs_transform(s, np.ones(1), [0.0])[0, 0] == pytest.approx(
        1j * np.sqrt(3) / (0 - (2 + 0.6j)), abs=1e-14)
    assert H_eval(s, -3.0)[0, 0] == pytest.approx(1 + 0.12j, abs=1e-14)
    q = RationalFunction.scalar([-3.0], [1.0])
    assert rational_calculus(s, q)[0, 0] == pytest.approx(1 / (5 + 0.6j), abs=1e-14)
    assert ctrl_transform(s, q)[0] == pytest.approx(np.sqrt(3) / (5 + 0.6j), abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(zr=st.floats(-50, 50), zi=st.floats(-50, 50), kappa=st.floats(0.1, 20))
def test_scalar_delta_matches_oracle(zr, zi, kappa):
    z = complex(zr, zi)
    den = 2 + 3j * kappa - z + 0.6j
    if abs(den) < 1e-3 or abs(2 + 0.6j - z) < 1e-3:
        return
    ev = CharFunEvaluator(scalar_system(kappa))
    assert ev.delta(z)[0, 0] == pytest.approx(oracle_delta(z, kappa), rel=1e-12, abs=1e-12)
    assert ev.delta_alt(z)[0, 0] == pytest.approx(oracle_delta(z, kappa), rel=1e-10, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 8), seed=st.integers(0, 10_000), kappa=st.floats(1.0, 30.0),
       zr=st.floats(-30, -1), zi=st.floats(-30, 30))
def test_inverse_identity_property(n, seed, kappa, zr, zi):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(1.0, 100.0, n))
    s = build_system(SpectralDiagonal(t), W, random_perturbation(n, 0.3, seed), kappa, 1.0)
    ev = CharFunEvaluator(s)
    z = complex(zr, zi)
    D = ev.delta(z)
    np.testing.assert_allclose(D @ ev.delta_inverse(z), np.eye(n), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 10_000), z=st.complex_numbers(
    min_magnitude=1.0, max_magnitude=100), w=st.complex_numbers(min_magnitude=1.0,
                                                                max_magnitude=100))
def test_transfer_difference_property(n, seed, z, w):
    rng = np.random.default_rng(seed)
    s = build_system(SpectralDiagonal(np.sort(rng.uniform(1, 20, n))), W,
                     random_perturbation(n, 0.3, seed), 11.0, 1.0)
    ev = CharFunEvaluator(s)
    I = np.eye(n)
    eig = np.linalg.eigvals(s.A)
    if min(np.abs(eig - z).min(), np.abs(eig - w).min()) < 1e-2:
        return
    lhs = ev.Phi(z) - ev.Phi(w)
    rhs = -11.0 * s.C @ (np.linalg.inv(z * I - s.A) - np.linalg.inv(w * I - s.A)) @ s.B
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * max(1.0, np.abs(lhs).max()))


def test_certified_mode_refuses_shrunk_interior(n3_eval):
    assert n3_eval.certified
    with pytest.raises(errors.DomainError):
        n3_eval.delta_inverse(5.0)
    with pytest.raises(errors.DomainError):
        delta_inverse(n3_eval, 5.0)
    assert np.all(np.isfinite(delta_eval(n3_eval, 5.0)))


def test_uncertified_without_constants(n3_built):
    ev = CharFunEvaluator(n3_built.system)
    assert not ev.certified
    assert np.all(np.isfinite(ev.delta_inverse(5.0)))


def test_off_spectrum_guard(n3_built):
    lam = np.linalg.eigvals(n3_built.system.A)[0]
    with pytest.raises(errors.NearSingularError):
        obs_transform(n3_built.system, np.ones(3), [lam])


def test_rational_poles_inside_rejected(n3_built):
    q = RationalFunction.scalar([3.0], [1.0])
    with pytest.raises(errors.DomainError):
        rational_calculus(n3_built.system, q, domain=n3_built.domain)


def test_ctrl_quadrature_matches_rational(n3_built):
    b = n3_built
    f = RationalFunction([-3.0 + 1j, -1.0 - 4j], np.array([[1, 2j, 0], [0.5, 0, -1]]))
    v1 = ctrl_transform(b.system, f, domain=b.domain)
    v2 = ctrl_transform(b.system, f.sample(b.contour), b.contour)
    np.testing.assert_allclose(v1, v2, atol=1e-9 * np.linalg.norm(v1))


def test_calculus_modes_agree(n3_built):
    b = n3_built
    q = RationalFunction.scalar([-2.0, 1.0 + 8j], [1.0, -0.5j], const=0.3)
    np.testing.assert_allclose(rational_calculus(b.system, q, "contour", contour=b.contour),
                               rational_calculus(b.system, q, domain=b.domain), atol=1e-10)


def test_model_element_and_truncated_mult(n3_built, n3_eval):
    b = n3_built
    D = n3_eval.delta(b.contour.nodes, check=False)
    x = np.array([1.0, -1j, 0.5])
    el = ModelElement.from_state(b.system, x, b.contour, D)
    el.check(b.contour)
    assert el.in_model_space
    c, sh = truncated_mult(el, b.contour, b.system, D)
    np.testing.assert_allclose(c, b.system.C @ x)
    np.testing.assert_allclose(sh.f.values, obs_transform(b.system, b.system.A @ x, b.contour).values,
                               atol=1e-12)
    # without the state the constant comes from the far tail
    c2, _ = truncated_mult(ModelElement(f=el.f, f_tilde=el.f_tilde), b.contour, check=False)
    np.testing.assert_allclose(c2, c, rtol=1e-3, atol=1e-3)


def test_model_resolvent_matches_state_space(n3_built, n3_eval):
    b = n3_built
    D = n3_eval.delta(b.contour.nodes, check=False)
    x = np.array([0.2, 1.0, -1.0 + 1j])
    el = ModelElement.from_state(b.system, x, b.contour, D)
    lam = -4.0 + 2j
    r = model_resolvent(ModelElement(f=el.f, f_tilde=el.f_tilde), lam, n3_eval, b.contour)
    y = np.linalg.solve(b.system.A - lam * np.eye(3), x)
    np.testing.assert_allclose(r.f.values, obs_transform(b.system, y, b.contour).values,
                               atol=1e-8)


def test_model_resolvent_at_eigenvalue_is_spectral(n3_built, n3_eval):
    b = n3_built
    D = n3_eval.delta(b.contour.nodes, check=False)
    el = ModelElement.from_state(b.system, np.ones(3), b.contour, D)
    lam = np.linalg.eigvals(b.system.A)[0]
    with pytest.raises(errors.SpectralError):
        model_resolvent(el, lam, n3_eval, b.contour)
