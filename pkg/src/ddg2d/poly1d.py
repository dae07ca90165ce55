"""Legendre / Lobatto polynomials and Gauss quadrature on [-1, 1].

Everything here lives on the reference interval. Cell-local quantities are
obtained by the affine map x = x_c + (h/2) s.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


def legendre_table(kmax: int, s, deriv_order: int = 0) -> np.ndarray:
    """Values of L_0..L_kmax (or their derivatives) at points ``s``.

    Returns an array of shape ``(kmax + 1,) + np.shape(s)``.
    """
    if kmax < 0:
        raise ValueError("degree must be non-negative")
    if deriv_order not in (0, 1, 2):
        raise ValueError("deriv_order must be 0, 1 or 2")
    s = np.asarray(s, dtype=float)
    P = np.zeros((kmax + 1,) + s.shape)
    dP = np.zeros_like(P)
    d2P = np.zeros_like(P)
    P[0] = 1.0
    if kmax >= 1:
        P[1] = s
        dP[1] = 1.0
    for n in range(1, kmax):
        # (n+1) L_{n+1} = (2n+1) s L_n - n L_{n-1}, differentiated termwise
        P[n + 1] = ((2 * n + 1) * s * P[n] - n * P[n - 1]) / (n + 1)
        dP[n + 1] = ((2 * n + 1) * (P[n] + s * dP[n]) - n * dP[n - 1]) / (n + 1)
        d2P[n + 1] = ((2 * n + 1) * (2 * dP[n] + s * d2P[n]) - n * d2P[n - 1]) / (n + 1)
    return (P, dP, d2P)[deriv_order]


def legendre_eval(m: int, s: float, deriv_order: int = 0) -> float:
    """L_m(s), L_m'(s) or L_m''(s) from the three-term recurrence."""
    if m < 0:
        raise ValueError(f"Legendre degree must be >= 0, got {m}")
    if abs(s) > 1.0 + 1e-14:
        raise ValueError(f"s={s} outside [-1, 1]")
    return float(legendre_table(m, s, deriv_order)[m])


def lobatto_to_legendre(kmax: int) -> np.ndarray:
    """Matrix T with phi_mu = sum_m T[mu, m] L_m for mu = 0..kmax."""
    T = np.zeros((kmax + 1, max(kmax + 1, 2)))
    T[0, 0], T[0, 1] = 0.5, -0.5
    if kmax >= 1:
        T[1, 0], T[1, 1] = 0.5, 0.5
    for mu in range(2, kmax + 1):
        # phi_mu = int_{-1}^s L_{mu-1} = (L_mu - L_{mu-2}) / (2 mu - 1)
        T[mu, mu] = 1.0 / (2 * mu - 1)
        T[mu, mu - 2] = -1.0 / (2 * mu - 1)
    return T[:, : kmax + 1]


def lobatto_eval(mu: int, s, kmax: int | None = None):
    """Lobatto polynomial phi_mu at ``s``.

    phi_0 = (1-s)/2, phi_1 = (1+s)/2, phi_{mu+1} = int_{-1}^s L_mu.
    ``kmax`` optionally enforces the range 0 <= mu <= kmax.
    """
    if mu < 0 or (kmax is not None and mu > kmax):
        raise ValueError(f"Lobatto index {mu} out of range")
    s = np.asarray(s, dtype=float)
    if mu == 0:
        out = 0.5 * (1.0 - s)
    elif mu == 1:
        out = 0.5 * (1.0 + s)
    else:
        L = legendre_table(mu, s)
        out = (L[mu] - L[mu - 2]) / (2 * mu - 1)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def _gauss_rule_cached(q: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    nodes = np.empty(q)
    weights = np.empty(q)
    for i in range(q):
        # Chebyshev-type initial guess, descending order
        x = np.cos(np.pi * (i + 0.75) / (q + 0.5))
        for _ in range(100):
            L = legendre_table(q, x, 0)[q]
            dL = legendre_table(q, x, 1)[q]
            dx = L / dL
            x -= dx
            if abs(dx) < 1e-15:
                break
        dL = legendre_table(q, x, 1)[q]
        nodes[i] = x
        weights[i] = 2.0 / ((1.0 - x * x) * dL * dL)
    order = np.argsort(nodes)
    return tuple(nodes[order]), tuple(weights[order])


def gauss_rule(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1] (exact to degree 2q-1)."""
    if q < 1:
        raise ValueError("need at least one quadrature point")
    n, w = _gauss_rule_cached(q)
    return np.array(n), np.array(w)


def antiderivative_modal(c, h: float = 2.0) -> np.ndarray:
    """Modal coefficients of D^{-1} v for v = sum_m c_m L_m on a cell of width h.

    D^{-1} v(x) = int_{x_left}^x v, so the result vanishes at the left end.
    Uses int_{-1}^s L_m = (L_{m+1} - L_{m-1}) / (2m+1) for m >= 1.
    Leading axis of ``c`` is the mode index; trailing axes are batched.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    out = np.zeros((n + 1,) + c.shape[1:])
    out[0] += c[0]
    out[1] += c[0]
    for m in range(1, n):
        out[m + 1] += c[m] / (2 * m + 1)
        out[m - 1] -= c[m] / (2 * m + 1)
    return 0.5 * h * out


def derivative_modal(c, h: float = 2.0) -> np.ndarray:
    """Modal coefficients of dv/dx, same length as ``c`` (top mode zero)."""
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    out = np.zeros_like(c)
    # L_m' = sum_{j < m, m-j odd} (2j+1) L_j
    for m in range(1, n):
        for j in range(m - 1, -1, -2):
            out[j] += (2 * j + 1) * c[m]
    return (2.0 / h) * out


@dataclass(frozen=True)
class Basis1D:
    """Tabulated Legendre basis of degree ``k`` with a Gauss volume rule."""

    k: int
    qv: int | None = None
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    V: np.ndarray = field(init=False, repr=False)     # (q, k+1)
    dV: np.ndarray = field(init=False, repr=False)
    d2V: np.ndarray = field(init=False, repr=False)
    ends: np.ndarray = field(init=False, repr=False)  # (3 derivs, 2 ends, k+1), ends = (-1, +1)
    mass: np.ndarray = field(init=False, repr=False)  # 2/(2m+1)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("degree k must be >= 1")
        q = self.k + 3 if self.qv is None else self.qv
        object.__setattr__(self, "qv", q)
        x, w = gauss_rule(q)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)
        for name, d in (("V", 0), ("dV", 1), ("d2V", 2)):
            object.__setattr__(self, name, legendre_table(self.k, x, d).T.copy())
        e = np.array([-1.0, 1.0])
        ends = np.stack([legendre_table(self.k, e, d).T for d in range(3)])
        object.__setattr__(self, "ends", ends)
        object.__setattr__(self, "mass", 2.0 / (2 * np.arange(self.k + 1) + 1))

    def tables(self, s, deriv_order: int = 0) -> np.ndarray:
        """Basis values at arbitrary points, shape ``s.shape + (k+1,)``."""
        return np.moveaxis(legendre_table(self.k, s, deriv_order), 0, -1)


@dataclass(frozen=True)
class LobattoBasis1D:
    """Lobatto polynomials phi_0..phi_{k+1} and the Gauss / Lobatto point sets."""

    k: int
    to_legendre: np.ndarray = field(init=False, repr=False)
    lobatto_points: np.ndarray = field(init=False)
    gauss_points: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("degree k must be >= 1")
        object.__setattr__(self, "to_legendre", lobatto_to_legendre(self.k + 1))
        object.__setattr__(self, "gauss_points", gauss_rule(self.k)[0])
        # zeros of phi_{k+1} = (L_{k+1} - L_{k-1})/(2k+1): the endpoints plus
        # the zeros of L_k', i.e. the Gauss-Lobatto points
        if self.k == 1:
            interior = np.zeros(0)
        else:
            interior = np.polynomial.legendre.Legendre.basis(self.k).deriv().roots()
        pts = np.concatenate([[-1.0], np.sort(interior.real), [1.0]])
        object.__setattr__(self, "lobatto_points", pts)

    def eval(self, mu: int, s):
        return lobatto_eval(mu, s, kmax=self.k + 1)
