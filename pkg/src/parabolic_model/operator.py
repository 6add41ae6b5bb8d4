"""Finite-dimensional operator triple ``A = A0 + i psi(A0) F psi(A0)``.

The self-adjoint part ``A0`` is stored by its (real, sorted) eigenvalues,
so every function of ``A0`` acts entrywise.  In finite dimension the
domain bookkeeping for unbounded ``A`` is vacuous: ``D(A) = C^n`` and the
rewritten form ``A00 [A00^{-1} A0 + i (A00^{-1} psi(A0)) F psi(A0)]`` with
``A00 = I + |A0|`` produces the same matrix as the direct formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConstantViolationError, DomainError, InfeasibleError, NearSingularError
from .weights import DomainCase, WeightFamily

#: relative distance to the spectrum below which resolvents are refused
TOL_SPEC = 1e-8
#: supported dimension envelope (dense storage)
MAX_DIM = 64


@dataclass(frozen=True)
class SpectralDiagonal:
    """Eigenvalues ``t_1 <= ... <= t_n`` of the self-adjoint part."""

    eigenvalues: np.ndarray
    domain_case: DomainCase = DomainCase.HALF_LINE
    eps0: Optional[float] = None

    def __post_init__(self):
        t = np.sort(np.asarray(self.eigenvalues, dtype=float).ravel())
        if t.size < 1:
            raise DomainError("at least one eigenvalue is required")
        if t.size > MAX_DIM:
            raise DomainError(f"dimension {t.size} exceeds the supported envelope n <= {MAX_DIM}")
        if not np.all(np.isfinite(t)):
            raise DomainError("eigenvalues must be finite")
        case = DomainCase.parse(self.domain_case)
        eps0 = self.eps0
        if case is DomainCase.HALF_LINE:
            if eps0 is None:
                eps0 = float(t[0])
            if eps0 <= 0 or t[0] < eps0:
                raise DomainError(
                    f"half-line case needs spectrum in [eps0, inf) with eps0 > 0 "
                    f"(min eigenvalue {t[0]}, eps0 {eps0})")
        t.setflags(write=False)
        object.__setattr__(self, "eigenvalues", t)
        object.__setattr__(self, "domain_case", case)
        object.__setattr__(self, "eps0", eps0)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.eigenvalues).astype(complex)

    @property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.eigenvalues))))


@dataclass(frozen=True)
class PerturbationSplit:
    """``F = F' + F''`` with ``||F'|| < r'`` and ``F''`` of finite rank."""

    F: np.ndarray
    ess_surrogate: float
    r_prime: float
    F_prime: np.ndarray
    F_dprime: np.ndarray
    rank_dprime: int

    @property
    def norm_prime(self) -> float:
        return float(np.linalg.norm(self.F_prime, 2)) if self.F_prime.size else 0.0


@dataclass(frozen=True)
class SystemTriple:
    """The triple ``(A, B, C)`` with ``B = psi(A0)`` and ``C = i psi(A0)``."""

    a0: SpectralDiagonal
    weight: WeightFamily
    F: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    kappa: float
    ell: float
    psi_diag: np.ndarray = field(repr=False)
    phi_diag: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.a0.n

    @property
    def t(self) -> np.ndarray:
        return self.a0.eigenvalues

    @property
    def L(self) -> np.ndarray:
        """The perturbation ``L = B F C = A - A0``."""
        return self.B @ self.F @ self.C

    @property
    def norm_F(self) -> float:
        return float(np.linalg.norm(self.F, 2))

    def with_kappa(self, kappa: float) -> "SystemTriple":
        return build_system(self.a0, self.weight, self.F, kappa, self.ell)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)


def _as_matrix(F, n: int) -> np.ndarray:
    F = np.atleast_2d(np.asarray(F, dtype=complex))
    if F.shape != (n, n):
        raise DomainError(f"perturbation must be {n}x{n}, got {F.shape}")
    return F


def build_system(a0: SpectralDiagonal, weight: WeightFamily, F, kappa: float,
                 ell: float) -> SystemTriple:
    """Assemble ``A = A0 + i psi(A0) F psi(A0)``, ``B`` and ``C``.

    ``ell`` must exceed ``||F||``; the separation estimates used for the
    characteristic function break down otherwise.
    """
    if a0.domain_case is not weight.domain_case:
        raise DomainError("spectrum and weight must share the domain case")
    F = _as_matrix(F, a0.n)
    normF = float(np.linalg.norm(F, 2))
    if not ell > normF:
        raise ConstantViolationError(f"ell = {ell} must exceed ||F|| = {normF}")
    t = a0.eigenvalues
    psi = weight.psi(t)
    a00 = 1.0 + np.abs(t)
    # A00 [A00^{-1} A0 + i (A00^{-1} psi) F psi]
    inner = np.diag(t / a00).astype(complex) + 1j * (psi / a00)[:, None] * F * psi[None, :]
    A = a00[:, None] * inner
    B = np.diag(psi).astype(complex)
    C = 1j * B
    for m in (A, B, C, F):
        m.setflags(write=False)
    return SystemTriple(a0=a0, weight=weight, F=F, A=A, B=B, C=C, kappa=float(kappa),
                        ell=float(ell), psi_diag=psi, phi_diag=psi * psi)


def resolvent(M, z: complex, mode: str = "direct", *, t=None, L=None,
              tol: float = TOL_SPEC) -> np.ndarray:
    """Return ``(M - z I)^{-1}``.

    ``mode="factored"`` uses ``(A0 - z)^{-1} (I + L (A0 - z)^{-1})^{-1}``
    and needs the diagonal ``t`` of ``A0`` and ``L = A - A0``.  When ``M``
    is a :class:`SystemTriple` these are taken from it.

    Raises
    ------
    NearSingularError
        If the smallest singular value of ``M - z`` is below
        ``tol * max(1, ||M||)``.
    """
    if isinstance(M, SystemTriple):
        t = M.t if t is None else t
        L = M.L if L is None else L
        M = M.A
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    eye = np.eye(n)
    shifted = M - z * eye
    scale = max(1.0, float(np.linalg.norm(M, 2)))
    smin = float(np.linalg.svd(shifted, compute_uv=False)[-1])
    if smin < tol * scale:
        with np.errstate(all="ignore"):
            X = np.linalg.lstsq(shifted, eye, rcond=None)[0]
        res = float(np.linalg.norm(shifted @ X - eye, 2))
        raise NearSingularError(f"z = {z} is within {smin:.3e} of the spectrum", residual=res)
    if mode == "direct":
        return np.linalg.solve(shifted, eye.astype(complex))
    if mode != "factored":
        raise ValueError(f"unknown resolvent mode {mode!r}")
    if t is None or L is None:
        raise ValueError("factored mode needs the diagonal of A0 and L")
    d = 1.0 / (np.asarray(t, dtype=float) - z)
    inner = eye + np.asarray(L) * d[None, :]
    return d[:, None] * np.linalg.inv(inner)


def essential_split(F, r_prime: float, ess_surrogate: float = 0.0) -> PerturbationSplit:
    """Split ``F`` by singular value truncation.

    ``F''`` is the best rank-``m`` approximation with the smallest ``m``
    such that ``||F - F''|| < r_prime``.
    """
    F = np.atleast_2d(np.asarray(F, dtype=complex))
    if not r_prime > 0:
        raise InfeasibleError(f"r' must be positive, got {r_prime}")
    U, s, Vh = np.linalg.svd(F)
    m = int(np.sum(s >= r_prime))
    Fdd = (U[:, :m] * s[:m]) @ Vh[:m, :]
    Fp = F - Fdd
    return PerturbationSplit(F=F, ess_surrogate=float(ess_surrogate), r_prime=float(r_prime),
                             F_prime=Fp, F_dprime=Fdd, rank_dprime=m)


_ETA_TAGS = {
    "one": lambda t, w: np.ones_like(t),
    "psi": lambda t, w: w.psi(t),
    "phi": lambda t, w: w.phi(t),
    "inv_psi": lambda t, w: 1.0 / w.psi(t),
    "abs_plus_one": lambda t, w: np.abs(t) + 1.0,
    "psi_over_abs_plus_one": lambda t, w: w.psi(t) / (np.abs(t) + 1.0),
}


def weighted_norm(x, eta: Union[str, Callable], a0: SpectralDiagonal,
                  weight: Optional[WeightFamily] = None) -> float:
    """Norm of ``x`` in the space ``X_eta``, i.e. ``||eta(A0)^{-1} x||``."""
    t = a0.eigenvalues
    if callable(eta):
        vals = np.asarray(eta(t), dtype=float)
    else:
        try:
            fn = _ETA_TAGS[eta]
        except KeyError:
            raise DomainError(f"unknown weight tag {eta!r}") from None
        if weight is None and eta not in ("one", "abs_plus_one"):
            raise DomainError(f"weight tag {eta!r} needs a WeightFamily")
        vals = np.asarray(fn(t, weight), dtype=float)
    if np.any(vals == 0):
        raise DomainError("eta vanishes on the spectrum")
    x = np.asarray(x, dtype=complex).ravel()
    return float(np.linalg.norm(x / vals))


def random_perturbation(n: int, norm: float, seed: int) -> np.ndarray:
    """I.i.d. complex Gaussian ``n x n`` matrix rescaled to operator norm ``norm``."""
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    s = np.linalg.norm(G, 2)
    return G * (norm / s) if s > 0 else G
