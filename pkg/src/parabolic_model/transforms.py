"""Observation/control transforms, the characteristic function and the model operator.

With ``A_kappa = A0 + i kappa phi(A0)`` the characteristic function is

    delta(z) = [A_kappa - z + i phi(A0) F]^{-1} [A0 - z + i phi(A0) F],

its inverse is ``I + Phi(z)`` with ``Phi(z) = kappa C (A - z)^{-1} B``, and
``delta * O_{A,C} x = C (z - A - i kappa phi(A0))^{-1} x`` is analytic on
the interior side when ``|kappa|`` is large.  Everything here is exact
algebra except the contour-mode functions, which are trapezoid sums over
the closed quadrature loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .boundary import GridFunction, Side, cauchy_project, membership_test
from .contour import Contour
from .errors import (ConstantViolationError, DomainError, NearSingularError, NotInDomainError,
                     SpectralError)
from .geometry import ConstantsBundle, ParabolicDomain
from .operator import TOL_SPEC, SystemTriple

SPEC_TOL = 1e-8


def _points(points) -> np.ndarray:
    if isinstance(points, Contour):
        return points.nodes
    return np.atleast_1d(np.asarray(points, dtype=complex))


def _check_off_spectrum(M: np.ndarray, z: np.ndarray, tol: float = TOL_SPEC):
    ev = np.linalg.eigvals(M)
    scale = max(1.0, float(np.linalg.norm(M, 2)))
    d = np.min(np.abs(z[:, None] - ev[None, :]), axis=1)
    if np.any(d < tol * scale):
        j = int(np.argmin(d))
        raise NearSingularError(f"point {z[j]} is within {d[j]:.3e} of the spectrum")


def shifted_inverses(M: np.ndarray, z, check: bool = True) -> np.ndarray:
    """Stack of ``(z_j I - M)^{-1}``, shape ``(len(z), n, n)``."""
    z = _points(z)
    M = np.asarray(M, dtype=complex)
    if check:
        _check_off_spectrum(M, z)
    n = M.shape[0]
    S = z[:, None, None] * np.eye(n)[None] - M[None]
    return np.linalg.inv(S)


def observation(A: np.ndarray, C: np.ndarray, x, points, side_hint=Side.EXT_ANALYTIC):
    """``z -> C (z I - A)^{-1} x`` on ``points``.

    One batched factorisation per point serves all columns of ``x``.  For a
    vector ``x`` and a :class:`Contour` the result is a :class:`GridFunction`;
    otherwise an array of shape ``(len(points), p[, k])``.
    """
    z = _points(points)
    x = np.asarray(x, dtype=complex)
    A = np.asarray(A, dtype=complex)
    _check_off_spectrum(A, z)
    n = A.shape[0]
    S = z[:, None, None] * np.eye(n)[None] - A[None]
    X = x if x.ndim == 2 else x[:, None]
    Y = np.linalg.solve(S, np.broadcast_to(X, (z.size,) + X.shape))
    out = np.einsum("pn,jnk->jpk", np.asarray(C, dtype=complex), Y)
    if x.ndim == 1:
        out = out[:, :, 0]
        if isinstance(points, Contour):
            return GridFunction(out, side_hint, decay=1)
    return out


def obs_transform(system: SystemTriple, x, points):
    """``O_{A,C} x (z) = C (z I - A)^{-1} x``."""
    return observation(system.A, system.C, x, points)


def obs_adjoint_transform(system: SystemTriple, x, points):
    """``O_{A*,B*} x (z) = B* (z I - A*)^{-1} x``."""
    return observation(system.A.conj().T, system.B.conj().T, x, points)


def H_eval(system: SystemTriple, z) -> np.ndarray:
    """``H(z) = I + C (A0 - z)^{-1} B F`` (stacked for array ``z``)."""
    zz = _points(z)
    t = system.t
    d = 1j * system.phi_diag[None, :] / (t[None, :] - zz[:, None])
    if np.any(~np.isfinite(d)):
        raise NearSingularError("point on the spectrum of A0")
    Hs = np.eye(system.n)[None] + d[:, :, None] * np.asarray(system.F)[None]
    return Hs[0] if np.ndim(z) == 0 else Hs


# ----------------------------------------------------------------------------
# characteristic function
# ----------------------------------------------------------------------------


class CharFunEvaluator:
    """Evaluates ``delta_kappa``, its inverse and ``Phi`` for one system.

    When ``constants`` and ``domain`` are attached and ``|kappa| > kappa0``
    the evaluator is in certified mode: the bracket bound
    ``||[I + i phi (A_kappa - z)^{-1} F]^{-1}|| <= 1/(1 - ||F||/ell)`` is
    enforced and ``delta_inverse`` refuses points of the shrunk interior.
    """

    def __init__(self, system: SystemTriple, kappa: Optional[float] = None,
                 constants: Optional[ConstantsBundle] = None,
                 domain: Optional[ParabolicDomain] = None):
        self.system = system
        self.kappa = float(system.kappa if kappa is None else kappa)
        self.constants = constants
        self.domain = domain
        t, phi = system.t, system.phi_diag
        self._t = t
        self._phi = phi
        self._iphiF = 1j * phi[:, None] * np.asarray(system.F)
        self._akappa = t + 1j * self.kappa * phi
        self._eye = np.eye(system.n)

    @property
    def certified(self) -> bool:
        c = self.constants
        return (c is not None and self.domain is not None and np.isfinite(c.kappa0)
                and abs(self.kappa) > c.kappa0)

    @property
    def A_kappa(self) -> np.ndarray:
        return np.diag(self._akappa)

    def bracket_bound(self) -> float:
        c = self.constants
        return 1.0 / (1.0 - self.system.norm_F / c.ell)

    def delta(self, z, check: bool = True) -> np.ndarray:
        """``delta(z)`` via ``[A_kappa - z + i phi F]^{-1} [A0 - z + i phi F]``."""
        zz = _points(z)
        E = self._eye[None]
        left = np.diag(self._akappa)[None] - zz[:, None, None] * E + self._iphiF[None]
        right = np.diag(self._t.astype(complex))[None] - zz[:, None, None] * E + self._iphiF[None]
        if check and self.certified:
            self._check_bracket(zz)
        D = np.linalg.solve(left, right)
        return D[0] if np.ndim(z) == 0 else D

    def delta_alt(self, z) -> np.ndarray:
        """``I - i kappa [I + i phi (A_kappa - z)^{-1} F]^{-1} (A_kappa - z)^{-1} phi``."""
        zz = _points(z)
        d = 1.0 / (self._akappa[None, :] - zz[:, None])
        br = self._eye[None] + 1j * (self._phi[None, :] * d)[:, :, None] * np.asarray(
            self.system.F)[None]
        rhs = np.zeros_like(br)
        idx = np.arange(self.system.n)
        rhs[:, idx, idx] = d * self._phi[None, :]
        D = self._eye[None] - 1j * self.kappa * np.linalg.solve(br, rhs)
        return D[0] if np.ndim(z) == 0 else D

    def _check_bracket(self, zz: np.ndarray):
        d = 1.0 / (self._akappa[None, :] - zz[:, None])
        br = self._eye[None] + 1j * (self._phi[None, :] * d)[:, :, None] * np.asarray(
            self.system.F)[None]
        smin = np.linalg.svd(br, compute_uv=False)[:, -1]
        bound = self.bracket_bound()
        bad = 1.0 / smin > bound * (1 + 1e-9)
        if np.any(bad):
            j = int(np.argmax(bad))
            raise ConstantViolationError(
                f"bracket inverse norm {1 / smin[j]:.4g} exceeds 1/(1 - ||F||/ell) = {bound:.4g} "
                f"at z = {zz[j]}")

    def Phi(self, z) -> np.ndarray:
        """Transfer function ``kappa C (A - z)^{-1} B``."""
        zz = _points(z)
        R = -shifted_inverses(self.system.A, zz)  # (A - z)^{-1}
        P = self.kappa * np.einsum("pn,jnm,mq->jpq", self.system.C, R, self.system.B)
        return P[0] if np.ndim(z) == 0 else P

    def delta_inverse(self, z, check: bool = True) -> np.ndarray:
        """``I + Phi(z)``; outside the shrunk interior in certified mode."""
        zz = _points(z)
        if check and self.certified:
            inner = self.domain.shrunk(self.constants.sigma_shrink).contains(zz)
            if np.any(inner):
                raise DomainError(f"z = {zz[np.argmax(inner)]} lies in the shrunk interior, "
                                  "where delta may fail to be invertible")
        P = self._eye[None] + self.Phi(zz)
        return P[0] if np.ndim(z) == 0 else P

    def samples(self, contour: Contour) -> np.ndarray:
        return self.delta(contour.nodes)

    def smin(self, z) -> tuple:
        """``(sigma_min(delta(z)), ||delta(z)||)``."""
        s = np.linalg.svd(self.delta(z, check=False), compute_uv=False)
        return float(s[-1]), float(s[0])


def delta_eval(evaluator: CharFunEvaluator, z) -> np.ndarray:
    return evaluator.delta(z)


def delta_inverse(evaluator: CharFunEvaluator, z) -> np.ndarray:
    return evaluator.delta_inverse(z)


# ----------------------------------------------------------------------------
# model elements
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelElement:
    """A boundary function ``f`` together with ``f_tilde = delta f``.

    ``state`` is set when ``f = O_{A,C} x`` is known to come from a state
    vector; ``j_value`` caches the constant of the truncated multiplication.
    """

    f: GridFunction
    f_tilde: GridFunction
    state: Optional[np.ndarray] = None
    j_value: Optional[np.ndarray] = None
    membership: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_samples(cls, f: GridFunction, delta_samples: np.ndarray, **kw) -> "ModelElement":
        ft = f.apply(delta_samples, side_hint=Side.INT_ANALYTIC)
        return cls(f=f, f_tilde=ft, **kw)

    @classmethod
    def from_state(cls, system: SystemTriple, x, contour: Contour,
                   delta_samples: np.ndarray) -> "ModelElement":
        x = np.asarray(x, dtype=complex)
        f = obs_transform(system, x, contour)
        return cls.from_samples(f, delta_samples, state=x)

    def check(self, contour: Contour, tol: float = 1e-4) -> dict:
        """Run both membership tests (``f`` exterior, ``f_tilde`` interior)."""
        res = {"f": membership_test(self.f, contour, Side.EXT_ANALYTIC, tol),
               "f_tilde": membership_test(self.f_tilde, contour, Side.INT_ANALYTIC, tol)}
        self.membership.update(res)
        return res

    @property
    def in_model_space(self) -> bool:
        return bool(self.membership) and all(r.passed for r in self.membership.values())


def truncated_mult(elem: ModelElement, contour: Contour, system: Optional[SystemTriple] = None,
                   delta_samples: Optional[np.ndarray] = None, check: bool = True,
                   tol: float = 1e-4):
    """``(c, z f - c)`` with ``c`` the constant keeping ``z f - c`` in the model space.

    ``c`` is ``C x`` when the element comes from a state ``x`` (and the
    system is given), the cached ``j_value`` if any, and otherwise the mean
    of ``z f(z)`` over the outermost decile of Gamma nodes.

    Raises
    ------
    NotInDomainError
        If ``z f - c`` fails the exterior membership test.
    """
    z = contour.nodes
    if elem.j_value is not None:
        c = np.asarray(elem.j_value, dtype=complex)
    elif elem.state is not None and system is not None:
        c = system.C @ elem.state
    else:
        zf = z[:, None] * elem.f.values
        g = np.flatnonzero(contour.on_gamma)
        r = np.abs(z[g])
        far = g[r >= np.quantile(r, 0.9)]
        c = zf[far].mean(axis=0)
    shifted_f = GridFunction(z[:, None] * elem.f.values - c[None, :], Side.EXT_ANALYTIC, decay=1)
    if delta_samples is not None:
        ft = shifted_f.apply(delta_samples, side_hint=Side.INT_ANALYTIC)
    else:
        ft = GridFunction(z[:, None] * elem.f_tilde.values, Side.UNKNOWN)
    state = None
    if elem.state is not None and system is not None:
        state = system.A @ elem.state
    out = ModelElement(f=shifted_f, f_tilde=ft, state=state)
    if check:
        res = membership_test(shifted_f, contour, Side.EXT_ANALYTIC, tol)
        out.membership["f"] = res
        if not res.passed:
            raise NotInDomainError(
                f"z f - c is not exterior-analytic (residual {res.residual:.3e})")
    return c, out


def model_resolvent(elem: ModelElement, lam: complex, evaluator: CharFunEvaluator,
                    contour: Contour, spec_tol: float = SPEC_TOL) -> ModelElement:
    """``(M_z^T - lam)^{-1} f = (f(z) - f(lam)) / (z - lam)``.

    ``f(lam)`` is taken from the state when known, from the Cauchy
    projection at exterior ``lam``, and from ``delta(lam)^{-1} f_tilde(lam)``
    at interior ``lam``.

    Raises
    ------
    SpectralError
        If ``sigma_min(delta(lam)) < spec_tol * ||delta(lam)||``.
    """
    system = evaluator.system
    dom = contour.domain
    lam = complex(lam)
    smin, smax = evaluator.smin(lam)
    if smin < spec_tol * smax:
        raise SpectralError(f"delta({lam}) is singular to tolerance (sigma_min {smin:.3e})")
    interior = dom is not None and bool(dom.contains(lam))
    if elem.state is not None:
        f_lam = observation(system.A, system.C, elem.state, [lam])[0]
    elif not interior:
        f_lam = -cauchy_project(elem.f, contour, lam)
    else:
        ft_lam = cauchy_project(elem.f_tilde, contour, lam)
        f_lam = np.linalg.solve(evaluator.delta(lam, check=False), ft_lam)
    z = contour.nodes
    vals = (elem.f.values - f_lam[None, :]) / (z - lam)[:, None]
    f = GridFunction(vals, Side.EXT_ANALYTIC, decay=1)
    state = None
    if elem.state is not None:
        state = np.linalg.solve(system.A - lam * np.eye(system.n), elem.state)
    return ModelElement.from_samples(f, evaluator.delta(contour.nodes, check=False), state=state)


# ----------------------------------------------------------------------------
# rational functions, control transform and calculus
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class RationalFunction:
    """``f(z) = const + sum_j residues[j] / (z - poles[j])`` with vector residues."""

    poles: np.ndarray
    residues: np.ndarray
    const: np.ndarray = None

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.poles, dtype=complex))
        r = np.asarray(self.residues, dtype=complex)
        if r.ndim == 1:
            r = r[:, None]
        if r.shape[0] != p.size:
            raise DomainError("one residue per pole is required")
        c = np.zeros(r.shape[1], dtype=complex) if self.const is None else np.atleast_1d(
            np.asarray(self.const, dtype=complex))
        object.__setattr__(self, "poles", p)
        object.__setattr__(self, "residues", r)
        object.__setattr__(self, "const", c)

    @classmethod
    def scalar(cls, poles, residues, const: complex = 0.0) -> "RationalFunction":
        return cls(poles, np.asarray(residues, dtype=complex)[:, None], [const])

    @property
    def m(self) -> int:
        return self.residues.shape[1]

    def __call__(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return self.const[None, :] + (1.0 / (z[:, None] - self.poles[None, :])) @ self.residues

    def sample(self, contour: Contour, side_hint=Side.INT_ANALYTIC) -> GridFunction:
        return GridFunction(self(contour.nodes), side_hint,
                            decay=1 if not np.any(self.const) else 0)

    def check_poles(self, domain: ParabolicDomain, closed: bool = True):
        m = domain.margin(self.poles)
        bad = m >= 0 if closed else m > 0
        if np.any(bad):
            raise DomainError(f"pole {self.poles[np.argmax(bad)]} lies in the closed interior")


def ctrl_transform(system: SystemTriple, f: Union[RationalFunction, GridFunction],
                   contour: Optional[Contour] = None,
                   domain: Optional[ParabolicDomain] = None) -> np.ndarray:
    """Control transform ``W_{A,B} f``.

    Rational mode: ``sum_j (A - lam_j)^{-1} B u_j``.  Quadrature mode
    (grid function): ``-(1/2 pi i) oint (A - zeta)^{-1} B f(zeta) d zeta``.
    """
    A, B = system.A, system.B
    n = system.n
    if isinstance(f, RationalFunction):
        dom = domain if domain is not None else (contour.domain if contour is not None else None)
        if dom is not None:
            f.check_poles(dom)
        out = np.zeros(n, dtype=complex)
        for lam, u in zip(f.poles, f.residues):
            out += np.linalg.solve(A - lam * np.eye(n), B @ u)
        return out
    if contour is None:
        raise ValueError("quadrature mode needs a contour")
    Rz = shifted_inverses(A, contour.nodes)  # (zeta - A)^{-1} = -(A - zeta)^{-1}
    v = np.einsum("jnm,mk,jk->jn", Rz, B, f.values)
    return (v * contour.dz[:, None]).sum(axis=0) / (2j * np.pi)


def rational_calculus(system: SystemTriple, q: RationalFunction, mode: str = "direct",
                      contour: Optional[Contour] = None,
                      domain: Optional[ParabolicDomain] = None) -> np.ndarray:
    """``q(A)`` for a scalar rational ``q`` with poles outside the closed interior."""
    if q.m != 1:
        raise DomainError("calculus needs a scalar rational function")
    dom = domain if domain is not None else (contour.domain if contour is not None else None)
    if dom is not None:
        q.check_poles(dom)
    A = system.A
    n = system.n
    I = np.eye(n)
    if mode == "direct":
        out = q.const[0] * I.astype(complex)
        for w, r in zip(q.poles, q.residues[:, 0]):
            out = out + r * np.linalg.inv(A - w * I)
        return out
    if mode != "contour":
        raise ValueError(f"unknown calculus mode {mode!r}")
    if contour is None:
        raise ValueError("contour mode needs a contour")
    Rz = shifted_inverses(A, contour.nodes)
    qz = q(contour.nodes)[:, 0]
    return np.einsum("j,jnm->nm", qz * contour.dz, Rz) / (2j * np.pi)
