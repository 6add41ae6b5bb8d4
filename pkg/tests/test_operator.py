import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parabolic_model import errors
from parabolic_model.operator import (SpectralDiagonal, build_system, essential_split,
                                      random_perturbation, resolvent, weighted_norm)
from parabolic_model.weights import DomainCase, WeightFamily, weight_info


def test_weight_values():
    w = WeightFamily(0.5, "half_line")
    assert w.k0 == 1.0
    assert WeightFamily(0.3, "half_line").k0 == 0.0
    np.testing.assert_allclose(w.psi(3.0), 2.0)
    np.testing.assert_allclose(w.phi(3.0), 4.0)
    np.testing.assert_allclose(w.dphi(3.0), 1.0)


def test_weight_rejects_bad_alpha_and_domain():
    with pytest.raises(errors.DomainError):
        WeightFamily(0.7, "half_line")
    with pytest.raises(errors.DomainError):
        WeightFamily(0.5, "half_line").psi(-1.0)
    assert DomainCase.parse("even") is DomainCase.EVEN_ON_R


def test_even_weight_is_symmetric():
    w = WeightFamily(0.4, "even")
    x = np.linspace(0, 50, 11)
    np.testing.assert_allclose(w.phi(x), w.phi(-x))


def test_weight_info_triple():
    psi, phi, k0 = weight_info(WeightFamily(0.5, "half_line"), 1.0)
    assert (psi, phi, k0) == pytest.approx((np.sqrt(2.0), 2.0, 1.0))


def test_scalar_system_matrices():
    w = WeightFamily(0.5, "half_line")
    s = build_system(SpectralDiagonal([2.0]), w, [[0.2]], kappa=1.0, ell=1.0)
    np.testing.assert_allclose(s.A, [[2.0 + 0.6j]])
    np.testing.assert_allclose(s.B, [[np.sqrt(3)]])
    np.testing.assert_allclose(s.C, [[1j * np.sqrt(3)]])
    np.testing.assert_allclose(s.L, s.A - np.diag(s.t))


def test_ell_must_exceed_norm_F():
    w = WeightFamily(0.5, "half_line")
    with pytest.raises(errors.ConstantViolationError):
        build_system(SpectralDiagonal([1.0, 2.0]), w, np.eye(2), kappa=1.0, ell=0.5)


def test_half_line_spectrum_must_be_positive():
    with pytest.raises(errors.DomainError):
        SpectralDiagonal([-1.0, 2.0], "half_line")


def test_resolvent_near_spectrum_raises():
    with pytest.raises(errors.NearSingularError) as exc:
        resolvent(np.diag([1.0, 2.0]), 1.0)
    assert np.isfinite(exc.value.residual)


def test_random_perturbation_norm_and_seed():
    F = random_perturbation(4, 0.3, 7)
    assert np.linalg.norm(F, 2) == pytest.approx(0.3)
    np.testing.assert_array_equal(F, random_perturbation(4, 0.3, 7))


def test_weighted_norm():
    a0 = SpectralDiagonal([1.0, 3.0])
    w = WeightFamily(0.5, "half_line")
    assert weighted_norm([2.0, 4.0], "phi", a0, w) == pytest.approx(np.hypot(1.0, 1.0))
    with pytest.raises(errors.DomainError):
        weighted_norm([1.0, 1.0], "nope", a0, w)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 10_000), norm=st.floats(0.01, 0.45),
       zr=st.floats(-20, -0.5), zi=st.floats(-10, 10))
def test_resolvent_modes_agree(n, seed, norm, zr, zi):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(1.0, 50.0, n))
    s = build_system(SpectralDiagonal(t), WeightFamily(0.5, "half_line"),
                     random_perturbation(n, norm, seed), kappa=0.0, ell=1.0)
    z = complex(zr, zi)
    R1 = resolvent(s, z)
    R2 = resolvent(s, z, mode="factored")
    np.testing.assert_allclose(R1, R2, atol=1e-10 * max(1.0, np.abs(R1).max()))
    np.testing.assert_allclose((s.A - z * np.eye(n)) @ R1, np.eye(n), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 10_000), r=st.floats(0.05, 1.0))
def test_essential_split_properties(n, seed, r):
    F = random_perturbation(n, 1.0, seed)
    sp = essential_split(F, r)
    np.testing.assert_allclose(sp.F_prime + sp.F_dprime, F, atol=1e-12)
    assert sp.norm_prime < r
    assert np.linalg.matrix_rank(sp.F_dprime) <= sp.rank_dprime
