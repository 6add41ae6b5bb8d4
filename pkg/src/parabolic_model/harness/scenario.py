"""Scenario description, JSON round-trip and the built pipeline."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ..constants import EPS_TARGET, Pipeline, build_constants
from ..contour import TAIL_TARGET, Contour, build_contour, t_max_for
from ..errors import DomainError
from ..operator import SpectralDiagonal, random_perturbation
from ..weights import DomainCase, WeightFamily

DEFAULT_TOLERANCES = {
    "inverse_identity": 1e-10,
    "intertwining": 1e-10,
    "h_factorization": 1e-10,
    "transfer_difference": 1e-10,
    "duality": 1e-4,
    "kernel": 1e-5,
    "adjointness": 1e-6,
    "membership": 1e-4,
    "exactness_lower": 1e-10,
    "model_resolvent": 1e-8,
    "calculus": 1e-8,
    "quadrature_vs_rational": 1e-6,
}

DEFAULT_TRIALS = {"duality": 50, "kernel": 20, "intertwining": 20, "k_bound": 50,
                  "h_factorization": 20, "transfer_difference": 20, "plemelj": 50}


def encode_matrix(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def decode_matrix(d) -> np.ndarray:
    if isinstance(d, dict):
        return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d.get("im", 0.0), dtype=float)
    return np.asarray(d, dtype=complex)


@dataclass
class Scenario:
    """Inputs of one verification run.

    The spectrum is either the explicit list ``spectrum`` or ``n`` seeded
    uniform draws in ``[eps0, t_max]``.  ``F`` is either the explicit
    matrix or a seeded complex Gaussian rescaled to ``F_norm``.
    """

    name: str = "scenario"
    spectrum: Optional[list] = None
    n: int = 3
    eps0: float = 1.0
    t_max: float = 10.0
    domain_case: str = "half_line"
    alpha: float = 0.5
    F: Optional[dict] = None
    F_norm: float = 0.3
    F_seed: Optional[int] = None
    ess: float = 0.0
    mu: Optional[float] = None
    ell: Optional[float] = None
    kappa: Optional[float] = None
    kappa_factor: float = 1.05
    kappa_sign: int = 1
    eps_target: float = EPS_TARGET
    N: int = 2048
    T_max: Optional[float] = None
    tail_target: float = TAIL_TARGET
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    trials: dict = field(default_factory=dict)
    checks: Optional[list] = None

    # -- io -----------------------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise DomainError(f"unknown scenario keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)

    # -- derived --------------------------------------------------------------

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def n_trials(self, name: str) -> int:
        return int(self.trials.get(name, DEFAULT_TRIALS[name]))

    def eigenvalues(self) -> np.ndarray:
        if self.spectrum is not None:
            return np.asarray(self.spectrum, dtype=float)
        rng = np.random.default_rng([self.seed, 1])
        lo = self.eps0 if DomainCase.parse(self.domain_case) is DomainCase.HALF_LINE else -self.t_max
        return np.sort(rng.uniform(lo, self.t_max, self.n))

    def perturbation(self, n: int) -> np.ndarray:
        if self.F is not None:
            return decode_matrix(self.F)
        seed = self.seed if self.F_seed is None else self.F_seed
        return random_perturbation(n, self.F_norm, seed)

    def weight(self) -> WeightFamily:
        return WeightFamily(self.alpha, self.domain_case)

    def build(self) -> "Built":
        w = self.weight()
        t = self.eigenvalues()
        case = DomainCase.parse(self.domain_case)
        a0 = SpectralDiagonal(t, case, self.eps0 if case is DomainCase.HALF_LINE and
                              self.spectrum is None else None)
        F = self.perturbation(a0.n)
        pipe = build_constants(a0, w, F, ess=self.ess, mu=self.mu, ell=self.ell,
                               kappa=None, kappa_sign=self.kappa_sign,
                               eps_target=self.eps_target)
        cb = pipe.constants
        kappa = self.kappa if self.kappa is not None else (
            self.kappa_sign * self.kappa_factor * cb.kappa0)
        if kappa != cb.kappa:
            cb = replace(cb, kappa=float(kappa))
            pipe = replace(pipe, constants=cb, system=pipe.system.with_kappa(kappa))
        T = self.T_max if self.T_max is not None else t_max_for(pipe.domain, self.tail_target)
        contour = build_contour(pipe.domain, T, self.N)
        return Built(self, pipe, contour)


@dataclass(frozen=True)
class Built:
    scenario: Scenario
    pipeline: Pipeline
    contour: Contour

    @property
    def system(self):
        return self.pipeline.system

    @property
    def constants(self):
        return self.pipeline.constants

    @property
    def domain(self):
        return self.pipeline.domain

    def contour_at(self, N: int) -> Contour:
        return build_contour(self.domain, self.contour.T_max, N)


def scalar_fixture(**kw) -> Scenario:
    """``A0 = [2]``, ``alpha = 1/2``, ``F = [0.2]``."""
    base = dict(name="scalar", spectrum=[2.0], F=encode_matrix([[0.2]]))
    base.update(kw)
    return Scenario(**base)


def n3_fixture(zero_F: bool = False, **kw) -> Scenario:
    """``A0 = diag(1, 4, 9)``, ``alpha = 1/2``, seeded ``F`` with ``||F|| = 0.3`` (seed 7)."""
    base = dict(name="n3" + ("_unperturbed" if zero_F else ""), spectrum=[1.0, 4.0, 9.0],
                F_norm=0.3, F_seed=7)
    if zero_F:
        base["F"] = encode_matrix(np.zeros((3, 3)))
    base.update(kw)
    return Scenario(**base)
