"""Numerical fluxes: Godunov convection flux and the DDG diffusion flux."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


class ScalarFlux:
    """A smooth scalar flux function f(u) with derivatives of any order.

    Subclasses implement ``deriv(n, u)``; ``extremes`` may be overridden
    with a closed form, otherwise the interval is sampled.
    """

    name = "generic"
    n_samples = 1025

    def f(self, u):
        return self.deriv(0, u)

    def df(self, u):
        return self.deriv(1, u)

    def d2f(self, u):
        return self.deriv(2, u)

    def deriv(self, n: int, u):
        raise NotImplementedError

    def __call__(self, u):
        return self.f(u)

    def extremes(self, lo, hi):
        """(min f, max f) over [lo, hi], elementwise."""
        lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
        s = np.linspace(0.0, 1.0, self.n_samples).reshape((-1,) + (1,) * lo.ndim)
        vals = self.f(lo + s * (hi - lo))
        return vals.min(axis=0), vals.max(axis=0)


class Burgers(ScalarFlux):
    """f(u) = u^2 / 2."""

    name = "burgers"

    def deriv(self, n, u):
        u = np.asarray(u, dtype=float)
        if n == 0:
            return 0.5 * u * u
        if n == 1:
            return u.copy() if u.ndim else float(u)
        if n == 2:
            return np.ones_like(u) if u.ndim else 1.0
        return np.zeros_like(u) if u.ndim else 0.0

    def extremes(self, lo, hi):
        flo, fhi = self.f(lo), self.f(hi)
        vmin = np.where((lo <= 0.0) & (hi >= 0.0), 0.0, np.minimum(flo, fhi))
        return vmin, np.maximum(flo, fhi)


class Sine(ScalarFlux):
    """f(u) = sin(u)."""

    name = "sin"

    def deriv(self, n, u):
        return np.sin(np.asarray(u, dtype=float) + 0.5 * n * np.pi)

    def extremes(self, lo, hi):
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        flo, fhi = np.sin(lo), np.sin(hi)
        # interior extrema at pi/2 + n pi
        has_max = np.floor((hi - 0.5 * np.pi) / (2 * np.pi)) >= np.ceil((lo - 0.5 * np.pi) / (2 * np.pi))
        has_min = np.floor((hi + 0.5 * np.pi) / (2 * np.pi)) >= np.ceil((lo + 0.5 * np.pi) / (2 * np.pi))
        vmin = np.where(has_min, -1.0, np.minimum(flo, fhi))
        vmax = np.where(has_max, 1.0, np.maximum(flo, fhi))
        return vmin, vmax


class Linear(ScalarFlux):
    """f(u) = a u."""

    name = "linear"

    def __init__(self, a: float = 1.0):
        self.a = a

    def deriv(self, n, u):
        u = np.asarray(u, dtype=float)
        if n == 0:
            return self.a * u
        return np.full_like(u, self.a if n == 1 else 0.0)

    def extremes(self, lo, hi):
        flo, fhi = self.f(lo), self.f(hi)
        return np.minimum(flo, fhi), np.maximum(flo, fhi)


class Zero(Linear):
    """f(u) = 0 (pure diffusion)."""

    name = "zero"

    def __init__(self):
        super().__init__(0.0)


FLUXES = {"burgers": Burgers, "sin": Sine, "zero": Zero, "linear": Linear}


def godunov(flux: ScalarFlux, a, b):
    """min_{a<=u<=b} f(u) if a <= b, else max_{b<=u<=a} f(u)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    vmin, vmax = flux.extremes(lo, hi)
    out = np.where(a <= b, vmin, vmax)
    return float(out) if out.ndim == 0 else out


def gamma_of_beta1(k: int, beta1: float) -> float:
    """Smallest admissible beta0: sup over v in P^{k-1} of 2(v(1) - 2 beta1 v'(1))^2 / ||v||^2.

    With v = sum a_m L_m this is (sum a_m d_m)^2 / sum a_m^2/(2m+1),
    d_m = 1 - beta1 m(m+1), whose supremum is sum (2m+1) d_m^2.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    m = np.arange(k)
    return float(np.sum((2 * m + 1) * (1.0 - beta1 * m * (m + 1)) ** 2))


@dataclass(frozen=True)
class FluxParams:
    """(beta0, beta1) of the diffusion flux plus the convection flux choice."""

    beta0: float
    beta1: float
    convection: str = "godunov"
    k: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.beta0 < 0:
            raise ValueError("beta0 must be non-negative")
        if self.convection != "godunov":
            raise ValueError(f"unsupported convection flux {self.convection!r}")
        if self.k is not None:
            g = gamma_of_beta1(self.k, self.beta1)
            if self.beta0 < g:
                logger.warning("beta0=%g < Gamma(beta1)=%g: scheme may be unstable", self.beta0, g)

    @classmethod
    def auto(cls, k: int, beta0: float = 12.0) -> "FluxParams":
        """beta1 = 1/(2k(k+1)), the superconvergent choice."""
        return cls(beta0, 1.0 / (2 * k * (k + 1)), k=k)


def ddg_diffusion_flux(jump_u, avg_un, jump_unn, h, params: FluxParams):
    """beta0/h [u] + {u_n} + beta1 h [u_nn]."""
    if np.any(np.asarray(h) <= 0):
        raise ValueError("h must be positive")
    return params.beta0 / h * jump_u + avg_un + params.beta1 * h * jump_unn


def alpha_slope(flux: ScalarFlux, u_minus, u_plus, zeta, tol: float | None = None):
    """([u])^{-1} (f_hat(u-, u+) - f(zeta)), with 0 for a degenerate jump.

    ``tol`` defaults to 1e-12 max(1, |u-|, |u+|).
    """
    um = np.asarray(u_minus, dtype=float)
    up = np.asarray(u_plus, dtype=float)
    jump = up - um
    if tol is None:
        tol = 1e-12 * np.maximum(1.0, np.maximum(np.abs(um), np.abs(up)))
    small = np.abs(jump) < tol
    num = godunov(flux, um, up) - flux.f(zeta)
    out = np.where(small, 0.0, num / np.where(small, 1.0, jump))
    return float(out) if out.ndim == 0 else out
