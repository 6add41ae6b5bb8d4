"""Admissible weights psi and their squares phi = psi**2."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConstantViolationError, DomainError


class DomainCase(str, enum.Enum):
    """Where the weight (and the spectrum of the diagonal part) lives."""

    EVEN_ON_R = "even"
    HALF_LINE = "half_line"

    @classmethod
    def parse(cls, value) -> "DomainCase":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {
            "even": cls.EVEN_ON_R,
            "evenonr": cls.EVEN_ON_R,
            "even_on_r": cls.EVEN_ON_R,
            "half_line": cls.HALF_LINE,
            "halfline": cls.HALF_LINE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise DomainError(f"unknown domain case {value!r}") from None


@dataclass(frozen=True)
class WeightFamily:
    """The weight ``psi(x) = (1 + |x|)**alpha`` with ``0 < alpha <= 1/2``.

    ``phi = psi**2`` is concave and nondecreasing on ``[0, inf)`` and
    ``k0 = lim phi(t)/t`` equals 1 for ``alpha = 1/2`` and 0 otherwise.
    A user weight can be supplied through :meth:`custom`; its concavity
    and monotonicity are then checked by sampling.
    """

    alpha: float = 0.5
    domain_case: DomainCase = DomainCase.HALF_LINE
    _psi: Optional[Callable] = field(default=None, repr=False, compare=False)
    _k0: Optional[float] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "domain_case", DomainCase.parse(self.domain_case))
        if self._psi is None and not (0.0 < self.alpha <= 0.5):
            raise DomainError(f"alpha must lie in (0, 1/2], got {self.alpha}")

    @classmethod
    def custom(cls, psi: Callable, k0: float, domain_case=DomainCase.HALF_LINE,
               check: bool = True) -> "WeightFamily":
        """Wrap a user weight; ``psi`` must accept arrays of ``|x|``."""
        w = cls(alpha=float("nan"), domain_case=domain_case, _psi=psi, _k0=float(k0))
        if check:
            w.check_admissible()
        return w

    @property
    def is_custom(self) -> bool:
        return self._psi is not None

    @property
    def k0(self) -> float:
        if self._k0 is not None:
            return self._k0
        return 1.0 if self.alpha == 0.5 else 0.0

    def _check_domain(self, x):
        x = np.asarray(x, dtype=float)
        if self.domain_case is DomainCase.HALF_LINE and np.any(x < 0):
            raise DomainError("weight is defined on [0, inf) only")
        return x

    def psi(self, x):
        x = self._check_domain(x)
        return self.psi_even(x)

    def phi(self, x):
        return self.psi(x) ** 2

    def psi_even(self, x):
        """psi continued evenly to the whole real line (no domain check)."""
        a = np.abs(np.asarray(x, dtype=float))
        if self._psi is not None:
            return np.asarray(self._psi(a), dtype=float)
        return (1.0 + a) ** self.alpha

    def phi_even(self, x):
        """The even continuation ``phi_*`` of phi."""
        return self.psi_even(x) ** 2

    def dphi(self, x):
        """Derivative of phi on ``[0, inf)`` (right derivative at 0)."""
        a = np.asarray(x, dtype=float)
        if self._psi is not None:
            h = 1e-6 * np.maximum(1.0, a)
            return (self.phi_even(a + h) - self.phi_even(np.maximum(a - h, 0.0))) / (
                a + h - np.maximum(a - h, 0.0))
        return 2.0 * self.alpha * (1.0 + a) ** (2.0 * self.alpha - 1.0)

    def check_admissible(self, t_max: float = 1e6, samples: int = 1000,
                         tol: float = 1e-12) -> None:
        """Sample psi >= 1, monotonicity and concavity of phi on [0, t_max]."""
        t = np.concatenate([[0.0], np.geomspace(1e-6, t_max, samples - 1)])
        p = self.psi_even(t)
        if np.any(p < 1.0 - tol):
            raise ConstantViolationError("psi must be >= 1")
        if np.any(np.diff(p) < -tol * np.maximum(1.0, p[1:])):
            raise ConstantViolationError("psi must be nondecreasing on [0, inf)")
        f = self.phi_even(t)
        # secant slopes of a concave function are nonincreasing
        slopes = np.diff(f) / np.diff(t)
        if np.any(np.diff(slopes) > tol * np.maximum(1.0, np.abs(slopes[1:]))):
            raise ConstantViolationError("phi = psi**2 must be concave on [0, inf)")


def weight_info(family: WeightFamily, x: float):
    """Return ``(psi(x), phi(x), k0)`` for a single abscissa."""
    psi = float(family.psi(x))
    return psi, psi * psi, family.k0
