"""Quadrature contours on the boundary of a parabolic domain.

Gamma is truncated at ``|Re z| = T_max`` and closed by vertical segments,
which yields a bounded, positively oriented loop.  Nodes of the closing
segments carry ``on_gamma = False``.  Integrals against ``dz`` of functions
decaying like ``1/z**2`` are taken over the whole loop: for rational
integrands this reproduces the improper integral over Gamma exactly (up
to quadrature error) because the closing segment contributes what the
discarded tails would.  Integrals against ``|dz|`` use the Gamma nodes
only and are paired with the certified tail bound.

Every piece is discretised by the trapezoid rule in a variable ``u`` on
``[0, 1]`` after Sidi's ``sin**4`` substitution, whose Jacobian vanishes
to fourth order at both ends; corners between pieces then cost only
algebraic order ``M**-10``.  Taking every
second node with doubled weight gives a nested rule on half the nodes,
used for a posteriori error estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .errors import ContourSymmetryError, GeometryError, QuadratureResolutionError
from .geometry import ParabolicDomain
from .weights import DomainCase, WeightFamily

GRADING_ORDER = 4
MIN_PIECE_NODES = 32
NODE_TOL = 1e-9
TAIL_TARGET = 1e-7


# ----------------------------------------------------------------------------
# tail certificate
# ----------------------------------------------------------------------------


def _ends(domain: ParabolicDomain) -> int:
    return 2 if domain.domain_case is DomainCase.HALF_LINE else 4


def tail_bound(domain: ParabolicDomain, T: float) -> float:
    """Bound on ``int_{|Re z| > T} |dz| / |z|**2`` over the branches of Gamma.

    On a branch ``|dz| <= (1 + mu phi'(t)) dt`` and ``|z| >= t``; ``phi'`` is
    nonincreasing, so each end contributes at most ``(1 + mu phi'(T)) / T``.
    """
    slope = float(domain.weight.dphi(T))
    return _ends(domain) * (1.0 + domain.mu * slope) / T


def t_max_for(domain: ParabolicDomain, target: float = TAIL_TARGET) -> float:
    """Smallest truncation abscissa whose tail bound meets ``target``."""
    f = lambda logT: math.log(tail_bound(domain, math.exp(logT))) - math.log(target)
    lo, hi = math.log(max(domain.R, 1.0)), math.log(1e300)
    if f(lo) <= 0:
        return math.exp(lo)
    return math.exp(brentq(f, lo, hi, xtol=1e-12))


# ----------------------------------------------------------------------------
# pieces
# ----------------------------------------------------------------------------


@dataclass
class _Piece:
    kind: str
    z: Callable
    dzds: Callable
    on_gamma: bool = True
    s0: float = 0.0
    s1: float = 1.0

    def split(self):
        mid = 0.5 * (self.s0 + self.s1)
        return (_Piece(self.kind, self.z, self.dzds, self.on_gamma, self.s0, mid),
                _Piece(self.kind, self.z, self.dzds, self.on_gamma, mid, self.s1))

    def weight(self, samples: int = 4001) -> float:
        s = np.linspace(self.s0, self.s1, samples)
        dens = np.abs(self.dzds(s)) / (1.0 + np.abs(self.z(s)))
        return float(trapezoid(dens, s))


def _arc(R, a0, a1):
    return _Piece("arc", lambda s: R * np.exp(1j * (a0 + s * (a1 - a0))),
                  lambda s: 1j * R * (a1 - a0) * np.exp(1j * (a0 + s * (a1 - a0))))


def _vertical(x, y0, y1, kind, on_gamma):
    return _Piece(kind, lambda s: x + 1j * (y0 + s * (y1 - y0)),
                  lambda s: 1j * (y1 - y0) * np.ones_like(np.asarray(s, dtype=float)),
                  on_gamma=on_gamma)


def _branch(domain: ParabolicDomain, x_near: float, x_far: float, inward: bool, c: float = 1.0):
    """Lower boundary curve ``x - i mu phi_*(x)`` between ``x_near`` and ``x_far``.

    Abscissae are graded logarithmically away from ``x_near``.  ``inward``
    reverses the traversal (from ``x_far`` to ``x_near``).
    """
    w, mu = domain.weight, domain.mu
    sg = 1.0 if x_far >= x_near else -1.0
    L = math.log1p(abs(x_far - x_near) / c)

    def xs(s):
        s = np.asarray(s, dtype=float)
        v = 1.0 - s if inward else s
        return x_near + sg * c * np.expm1(v * L)

    def z(s):
        x = xs(s)
        return x - 1j * mu * w.phi_even(x)

    def dzds(s):
        s = np.asarray(s, dtype=float)
        v = 1.0 - s if inward else s
        x = xs(s)
        dx = sg * c * L * np.exp(v * L) * (-1.0 if inward else 1.0)
        slope = np.sign(x) * w.dphi(np.abs(x))
        return dx * (1.0 - 1j * mu * slope)

    return _Piece("branch", z, dzds)


def junction_abscissa(domain: ParabolicDomain, tol: float = 1e-10) -> Optional[float]:
    """``x >= 0`` where the (upper) parabola meets ``|z| = R``; None if it never does."""
    mu, R, w = domain.mu, domain.R, domain.weight
    g = lambda x: math.hypot(x, mu * float(w.phi_even(x))) - R
    if g(0.0) >= 0:
        return None
    hi = R
    if g(hi) <= 0:
        raise GeometryError("junction bracket failed", witness=hi)
    try:
        return brentq(g, 0.0, hi, xtol=tol, rtol=1e-15, maxiter=500)
    except (ValueError, RuntimeError) as exc:
        raise GeometryError(f"junction bisection failed: {exc}") from exc


def _lower_half_pieces(domain: ParabolicDomain, T: float):
    mu, R, w = domain.mu, domain.R, domain.weight
    xj = junction_abscissa(domain)
    hT = mu * float(w.phi_even(T))
    if domain.domain_case is DomainCase.HALF_LINE:
        pieces = []
        if xj is None:
            pieces.append(_arc(R, math.pi, 1.5 * math.pi))
            h0 = mu * float(w.phi_even(0.0))
            if h0 > R:
                pieces.append(_vertical(0.0, -R, -h0, "segment", True))
            xj = 0.0
        else:
            th = math.atan2(mu * float(w.phi_even(xj)), xj)
            pieces.append(_arc(R, math.pi, 2 * math.pi - th))
        pieces.append(_branch(domain, xj, T, inward=False))
        pieces.append(_vertical(T, -hT, 0.0, "closure", False))
        return pieces, xj
    pieces = [_vertical(-T, 0.0, -hT, "closure", False)]
    if xj is None:
        pieces.append(_branch(domain, 0.0, -T, inward=True))
        pieces.append(_branch(domain, 0.0, T, inward=False))
        xj = 0.0
    else:
        th = math.atan2(mu * float(w.phi_even(xj)), xj)
        pieces.append(_branch(domain, -xj, -T, inward=True))
        pieces.append(_arc(R, math.pi + th, 2 * math.pi - th))
        pieces.append(_branch(domain, xj, T, inward=False))
    pieces.append(_vertical(T, -hT, 0.0, "closure", False))
    return pieces, xj


def _grading(u, m):
    """Sidi's periodizing map of order ``m`` (2 or 4) and its derivative."""
    tp = 2 * np.pi * u
    if m == 2:
        return u - np.sin(tp) / (2 * np.pi), 1.0 - np.cos(tp)
    if m == 4:
        return (u - (8 * np.sin(tp) - np.sin(2 * tp)) / (12 * np.pi),
                1.0 - (4 * np.cos(tp) - np.cos(2 * tp)) / 3.0)
    raise ValueError(f"unsupported grading order {m}")


def _discretise(piece: _Piece, M: int, p: int):
    k = np.arange(1, M)
    u = k / M
    s_u, ds_u = _grading(u, p)
    s = piece.s0 + (piece.s1 - piece.s0) * s_u
    dz = piece.dzds(s) * (piece.s1 - piece.s0) * ds_u / M
    dz_half = np.where(k % 2 == 0, 2.0 * dz, 0.0)
    return piece.z(s), dz, dz_half


def _allocate(weights, total, m_min):
    """Even node counts ``M_i >= m_min`` with ``sum(M_i - 1) == total``."""
    P = len(weights)
    target = total + P
    W = sum(weights)
    m_min = max(2, min(m_min, 2 * (target // (2 * P))))
    M = [max(m_min, 2 * int(round(0.5 * target * wi / W))) for wi in weights]
    order = sorted(range(P), key=lambda i: -weights[i])
    guard = 0
    while sum(M) != target:
        diff = target - sum(M)
        step = 2 if diff > 0 else -2
        for i in order:
            if step < 0 and M[i] - 2 < m_min:
                continue
            M[i] += step
            break
        else:
            raise GeometryError(f"cannot place {total} nodes on {P} pieces")
        guard += 1
        if guard > 10 * target:
            raise GeometryError("node allocation did not converge")
    return M


# ----------------------------------------------------------------------------
# the contour object
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Contour:
    """Ordered nodes of a closed, positively oriented quadrature loop.

    Attributes
    ----------
    nodes, dz : complex arrays
        Quadrature nodes and complex weights (``sum f(z) dz`` approximates
        ``int f dz``).
    arclen : real array
        ``|dz|``.
    dz_half : complex array
        Weights of the nested rule on every second node (zero elsewhere).
    on_gamma : bool array
        False for nodes on the closing segments at ``|Re z| = T_max``.
    conj_perm : int array or None
        ``nodes[conj_perm[j]] == conj(nodes[j])``.
    orientation : int
        +1: the interior lies on the left.
    T_max, tail_bound : float
        Truncation abscissa and the certified tail of ``|dz| / |z|**2``.
    """

    nodes: np.ndarray
    dz: np.ndarray
    arclen: np.ndarray
    dz_half: np.ndarray
    on_gamma: np.ndarray
    conj_perm: Optional[np.ndarray]
    T_max: float
    tail_bound: float
    orientation: int = 1
    domain: Optional[ParabolicDomain] = field(default=None, repr=False)
    piece: Optional[np.ndarray] = field(default=None, repr=False)
    piece_kinds: tuple = ()

    def __post_init__(self):
        for name in ("nodes", "dz", "arclen", "dz_half", "on_gamma", "conj_perm", "piece"):
            a = getattr(self, name)
            if a is not None:
                a.setflags(write=False)

    @property
    def N(self) -> int:
        return self.nodes.size

    def __len__(self):
        return self.nodes.size

    @property
    def gamma_nodes(self) -> np.ndarray:
        return self.nodes[self.on_gamma]

    def arclen_gamma(self, half: bool = False) -> np.ndarray:
        """``|dz|`` restricted to Gamma (zero on closing nodes)."""
        w = np.abs(self.dz_half) if half else self.arclen
        return np.where(self.on_gamma, w, 0.0)

    def spacing(self) -> float:
        """Largest distance between consecutive nodes on Gamma near the origin."""
        d = np.abs(np.diff(np.append(self.nodes, self.nodes[:1])))
        return float(np.max(d))

    def local_spacing(self, w: complex) -> tuple:
        """``(distance to nearest node, local node spacing there)``."""
        d = np.abs(self.nodes - w)
        j = int(np.argmin(d))
        nb = np.abs(self.nodes[(j + 1) % self.N] - self.nodes[j]) + np.abs(
            self.nodes[j] - self.nodes[j - 1])
        return float(d[j]), float(0.5 * nb)

    def distance(self, w: complex) -> float:
        return float(np.min(np.abs(self.nodes - w)))

    def check_symmetry(self, tol: float = NODE_TOL) -> np.ndarray:
        if self.conj_perm is None:
            raise ContourSymmetryError("contour has no conjugation permutation")
        return self.conj_perm


def conjugation_permutation(nodes: np.ndarray, tol: float = NODE_TOL) -> np.ndarray:
    """Index map ``j -> j'`` with ``nodes[j'] = conj(nodes[j])``.

    Raises
    ------
    ContourSymmetryError
        If some conjugate is not a node (relative tolerance ``tol``).
    """
    pts = np.column_stack([nodes.real, nodes.imag])
    tree = cKDTree(pts)
    d, idx = tree.query(np.column_stack([nodes.real, -nodes.imag]))
    bad = d > tol * (1.0 + np.abs(nodes))
    if np.any(bad):
        j = int(np.argmax(bad))
        raise ContourSymmetryError(f"conjugate of node {nodes[j]} missing (gap {d[j]:.3e})")
    perm = idx.astype(np.int64)
    if np.any(perm[perm] != np.arange(nodes.size)):
        raise ContourSymmetryError("conjugation map is not an involution")
    return perm


def circle_contour(radius: float, N: int, center: complex = 0.0) -> Contour:
    """Uniform trapezoid rule on ``|z - center| = radius`` (spectral accuracy)."""
    if N < 4 or N % 2:
        raise ValueError("N must be an even integer >= 4")
    th = 2 * np.pi * (np.arange(N) + 0.5) / N
    e = np.exp(1j * th)
    nodes = center + radius * e
    dz = 1j * radius * e * (2 * np.pi / N)
    dz_half = np.where(np.arange(N) % 2 == 0, 2.0 * dz, 0.0)
    perm = None
    if np.imag(center) == 0:
        perm = (N - 1 - np.arange(N)).astype(np.int64)
    return Contour(nodes=nodes, dz=dz, arclen=np.abs(dz), dz_half=dz_half,
                   on_gamma=np.ones(N, dtype=bool), conj_perm=perm, T_max=float("inf"),
                   tail_bound=0.0, piece=np.zeros(N, dtype=np.int64), piece_kinds=("circle",))


def build_contour(domain: ParabolicDomain, T_max: Optional[float] = None, N: int = 1024,
                  tail_target: float = TAIL_TARGET, grading: int = GRADING_ORDER,
                  min_piece_nodes: int = MIN_PIECE_NODES) -> Contour:
    """Discretise the truncated boundary of ``Omega_int``.

    Parameters
    ----------
    domain : ParabolicDomain
    T_max : float, optional
        Truncation abscissa; chosen from ``tail_target`` when omitted.
    N : int
        Total number of nodes (even, >= 64), closing segments included.
    """
    if N < 64 or N % 2:
        raise ValueError(f"N must be an even integer >= 64, got {N}")
    if T_max is None:
        T_max = t_max_for(domain, tail_target)
    T_max = float(T_max)
    xj = junction_abscissa(domain)
    if xj is not None and xj >= T_max:
        return circle_contour(domain.R, N)
    pieces, _ = _lower_half_pieces(domain, T_max)
    half = N // 2
    # the nested rule needs an even M on every piece, hence parity of the piece count
    if (half - len(pieces)) % 2:
        ws = [p.weight() for p in pieces]
        i = int(np.argmax(ws))
        pieces[i:i + 1] = list(pieces[i].split())
    ws = [p.weight() for p in pieces]
    M = _allocate(ws, half, min_piece_nodes)
    zs, dzs, dhs, gam, pid = [], [], [], [], []
    for i, (pc, m) in enumerate(zip(pieces, M)):
        z, dz, dh = _discretise(pc, m, grading)
        zs.append(z)
        dzs.append(dz)
        dhs.append(dh)
        gam.append(np.full(z.size, pc.on_gamma))
        pid.append(np.full(z.size, i))
    z = np.concatenate(zs)
    dz = np.concatenate(dzs)
    dh = np.concatenate(dhs)
    g = np.concatenate(gam)
    p = np.concatenate(pid)
    # exact mirror image: reversed conjugate traversal
    nodes = np.concatenate([z, np.conj(z[::-1])])
    dz = np.concatenate([dz, -np.conj(dz[::-1])])
    dh = np.concatenate([dh, -np.conj(dh[::-1])])
    on_gamma = np.concatenate([g, g[::-1]])
    P = len(pieces)
    piece = np.concatenate([p, 2 * P - 1 - p[::-1]])
    kinds = tuple(pc.kind for pc in pieces) + tuple(pc.kind for pc in reversed(pieces))
    perm = (nodes.size - 1 - np.arange(nodes.size)).astype(np.int64)
    m = np.abs(domain.margin(nodes[on_gamma]))
    if np.any(m > NODE_TOL * (1.0 + np.abs(nodes[on_gamma]))):
        raise GeometryError("contour node off the boundary", witness=complex(
            nodes[on_gamma][int(np.argmax(m))]))
    return Contour(nodes=nodes, dz=dz, arclen=np.abs(dz), dz_half=dh, on_gamma=on_gamma,
                   conj_perm=perm, T_max=T_max, tail_bound=tail_bound(domain, T_max),
                   domain=domain, piece=piece, piece_kinds=kinds)


# ----------------------------------------------------------------------------
# diagnostics
# ----------------------------------------------------------------------------


def winding(contour: Contour, w: complex, half: bool = False) -> complex:
    """``(1/2 pi i) sum dz / (z - w)`` over the closed loop."""
    dz = contour.dz_half if half else contour.dz
    return complex(np.sum(dz / (contour.nodes - w)) / (2j * np.pi))


@dataclass(frozen=True)
class IntegralBound:
    K_hat: float
    x: np.ndarray
    values: np.ndarray
    half_values: np.ndarray
    shells: Optional[list] = None

    @property
    def rel_change(self) -> float:
        return float(np.max(np.abs(self.values - self.half_values) / np.abs(self.values)))

    def table(self) -> list:
        return [{"x": float(a), "value": float(b)} for a, b in zip(self.x, self.values)]


def integral_bound(weight: WeightFamily, contour: Contour, x_grid, k: Optional[float] = None,
                   rel_tol: float = 0.01, check: bool = True) -> IntegralBound:
    """``psi(x)**2 int_Gamma |d lambda| / |x - lambda|**2`` for each ``x``.

    The discarded tails add at most ``psi(x)**2`` times the contour's tail
    bound (for ``|x|`` well below ``T_max``); that bound is included.  When
    ``k`` is given, the per-``x`` mass of the dyadic shells
    ``2**(n-1) rho phi(x) <= |Re lambda - x| <= 2**n rho phi(x)`` with
    ``rho = 1/(2k)`` is returned as well.

    Raises
    ------
    QuadratureResolutionError
        If the full and the nested half rule differ by more than ``rel_tol``.
    """
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    psi2 = weight.phi(x)
    lam = contour.nodes
    inv = 1.0 / np.abs(x[:, None] - lam[None, :]) ** 2
    # |x - lambda| >= |lambda| - |x| on the discarded tails
    T = contour.T_max
    tail = contour.tail_bound * (T / np.maximum(T - np.abs(x), 1e-300)) ** 2
    full = psi2 * (inv @ contour.arclen_gamma() + tail)
    halfv = psi2 * (inv @ contour.arclen_gamma(half=True) + tail)
    shells = None
    if k is not None:
        rho = 1.0 / (2.0 * k)
        shells = []
        for i, xi in enumerate(x):
            r = np.abs(lam.real - xi) / (rho * weight.phi(xi))
            n = np.where(r > 0, np.ceil(np.log2(np.maximum(r, 1e-300))), 0).astype(int)
            n = np.maximum(n, 0)
            mass = np.bincount(n, weights=psi2[i] * inv[i] * contour.arclen_gamma())
            shells.append(mass)
    res = IntegralBound(K_hat=float(np.max(full)), x=x, values=full, half_values=halfv,
                        shells=shells)
    if check and res.rel_change > rel_tol:
        raise QuadratureResolutionError(
            f"integral bound changes by {res.rel_change:.2%} under node halving")
    return res
