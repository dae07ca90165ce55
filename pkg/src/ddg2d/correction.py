"""Correction functions omega_l, bar-omega_l and the corrected projection u_I^p.

omega_l is piecewise P_k in x and is sampled in y at the endpoints and
Gauss points of every y-cell, which is exactly the data Q_h^y consumes.
Its t- and y-derivatives (needed by the next level) are carried along as
Taylor jets, seeded at level 0 by E^x applied to analytic derivatives of u.
bar-omega_l is obtained by running the same construction on the transposed
problem (x <-> y, f1 <-> f2).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .flux import FluxParams, ScalarFlux, alpha_slope, godunov
from .mesh import AnalyticField, DGField, Mesh2D
from .poly1d import antiderivative_modal, gauss_rule, legendre_table
from .projections import DirectionalProjector, TensorProjector

logger = logging.getLogger(__name__)

_S_NODES, _S_WEIGHTS = gauss_rule(8)
_S_NODES = 0.5 * (_S_NODES + 1.0)
_S_WEIGHTS = 0.5 * _S_WEIGHTS


def legendre_derivs(k: int, s, d: int) -> np.ndarray:
    """d-th derivative of L_0..L_k at ``s`` (any order d), shape (k+1,) + s.shape."""
    s = np.asarray(s, dtype=float)
    if d <= 2:
        return legendre_table(k, s, d)
    out = np.zeros((k + 1,) + s.shape)
    for m in range(d, k + 1):
        e = np.zeros(m + 1)
        e[m] = 1.0
        out[m] = np.polynomial.legendre.legval(s, np.polynomial.legendre.legder(e, d))
    return out


@dataclass
class CorrectionLevel:
    """One level of the x-direction correction, as jets in (t, y).

    values[a, b, i, q, Y]: omega at x-quadrature point q of cell i
    jumps[a, b, i, Y]:     [omega] at the right edge of cell i
    coeffs[a, b, i, m, Y]: modal coefficients (None for level 0, which is
                           not polynomial in x)
    """

    level: int
    direction: str
    order: tuple[int, int]
    values: np.ndarray = field(repr=False)
    jumps: np.ndarray = field(repr=False)
    coeffs: np.ndarray | None = field(default=None, repr=False)
    residuals: dict = field(default_factory=dict)


class CorrectionBuilder:
    """Builds omega_0 .. omega_p for one direction at time ``t``."""

    def __init__(self, u: AnalyticField, t: float, mesh: Mesh2D, k: int, params: FluxParams,
                 f1: ScalarFlux, f2: ScalarFlux, p: int, qv: int | None = None, direction: str = "x"):
        if p < 0:
            raise ValueError("p must be >= 0")
        self.u, self.t, self.mesh, self.k, self.params = u, t, mesh, k, params
        self.f1, self.f2, self.p, self.direction = f1, f2, p, direction
        self.px = DirectionalProjector(mesh.mx, k, params, qv)
        self.qy = DirectionalProjector(mesh.my, k, None, qv)
        self.eta = np.concatenate([[-1.0], self.qy.nodes, [1.0]])
        self.Y = mesh.my.points(self.eta).ravel()
        self.Xq = self.px.points()
        self.xr = mesh.mx.nodes[1:]
        A, B = p, 2 * p
        D = np.empty((A + 1, B + 1, mesh.nx, self.px.q, self.Y.size))
        for a in range(A + 1):
            for b in range(B + 1):
                D[a, b] = u.deriv(0, b, a)(self.Xq[:, :, None], self.Y[None, None, :], t)
        self.U = jets.from_derivatives(D)
        self._alpha = None
        # reference antiderivative tables for the low modes
        K = k + 1
        nlow = k - 1
        R1 = np.zeros((self.px.q, nlow))
        R2 = np.zeros((self.px.q, nlow))
        for m in range(nlow):
            e = np.zeros(K)
            e[m] = 1.0
            d1 = antiderivative_modal(e[: m + 1])
            d2 = antiderivative_modal(d1)
            R1[:, m] = d1 @ legendre_table(len(d1) - 1, self.px.nodes)
            R2[:, m] = d2 @ legendre_table(len(d2) - 1, self.px.nodes)
        self._R1, self._R2 = R1, R2

    # ---- helpers ----------------------------------------------------------
    def _jump(self, C):
        """[v] at the right edge of each cell for coefficients C (..., Nx, K, Y)."""
        Le = self.px.Le[0]
        right = self.mesh.mx.right
        vr = np.einsum("m,...imy->...iy", Le[1], C)
        vl = np.einsum("m,...imy->...iy", Le[0], C)
        return vl[..., right, :] - vr

    def _to_values(self, C):
        return np.einsum("qm,...imy->...iqy", self.px.Lq, C)

    def alpha_jets(self) -> np.ndarray:
        """alpha_1 along x-edges from the traces of Pi_h u, order (p-1, 2p-2)."""
        if self._alpha is not None:
            return self._alpha
        A, B = self.p - 1, 2 * (self.p - 1)
        mesh, k = self.mesh, self.k
        proj = TensorProjector(mesh, k, self.params, self.px.q)
        Le = self.px.Le[0]
        right = mesh.mx.right
        hy = mesh.hy
        ny, ne = mesh.ny, self.eta.size
        Dm = np.empty((A + 1, B + 1, mesh.nx, self.Y.size))
        Dp = np.empty_like(Dm)
        for a in range(A + 1):
            c = proj.Pi_h(self.u.shifted(0, 0, a), self.t, verify=False).coeffs
            tm = np.einsum("m,ijmn->ijn", Le[1], c)
            tp = np.einsum("m,ijmn->ijn", Le[0], c)[right]
            for b in range(B + 1):
                Lb = legendre_derivs(k, self.eta, b)             # (n, e)
                sc = (2.0 / hy)[None, :, None] ** b
                Dm[a, b] = (np.einsum("ijn,ne->ije", tm, Lb) * sc).reshape(mesh.nx, ny * ne)
                Dp[a, b] = (np.einsum("ijn,ne->ije", tp, Lb) * sc).reshape(mesh.nx, ny * ne)
        um, up = jets.from_derivatives(Dm), jets.from_derivatives(Dp)
        self._alpha = alpha_jet(self.f1, um, up)
        check = alpha_slope(self.f1, um[0, 0], up[0, 0], 0.5 * (um[0, 0] + up[0, 0]))
        # the difference quotient loses about eps |f| / |[u]| to cancellation
        fscale = 1.0 + np.abs(self.f1.f(um[0, 0]))
        allowed = 1e-8 + 1e-13 * fscale / np.maximum(np.abs(up[0, 0] - um[0, 0]), 1e-300)
        err = np.abs(self._alpha[0, 0] - check)
        if np.any(err > allowed):
            raise AssertionError(f"alpha jet disagrees with alpha_slope by {err.max():.3e}")
        return self._alpha

    # ---- levels -------------------------------------------------------------
    def level0(self) -> CorrectionLevel:
        """omega_0 = E^x u = u - P^(x) u with t/y-derivative jets of order (p, 2p)."""
        A, B = self.p, 2 * self.p
        px, u, t = self.px, self.u, self.t
        shape = (self.mesh.nx, px.q, A + 1, B + 1, self.Y.size)
        vals = np.empty(shape)
        nv = np.empty((self.mesh.nx, A + 1, B + 1, self.Y.size))
        nd = np.empty_like(nv)
        Y = self.Y
        for a in range(A + 1):
            for b in range(B + 1):
                vals[:, :, a, b] = u.deriv(0, b, a)(self.Xq[:, :, None], Y, t)
                nv[:, a, b] = u.deriv(0, b, a)(self.xr[:, None], Y, t)
                nd[:, a, b] = u.deriv(1, b, a)(self.xr[:, None], Y, t)
        C = px.P_from_data(px.moments(vals), nv, nd)           # (Nx, K, A+1, B+1, Y)
        C = np.moveaxis(C, (2, 3), (0, 1))
        vals = np.moveaxis(vals, (2, 3), (0, 1))
        W = jets.from_derivatives(vals - self._to_values(C))
        J = jets.from_derivatives(-self._jump(C))
        return CorrectionLevel(0, self.direction, (A, B), W, J)

    def next_level(self, prev: CorrectionLevel) -> CorrectionLevel:
        A, B = prev.order
        A1, B1 = A - 1, B - 2
        if A1 < 0 or B1 < 0:
            raise ValueError(f"level {prev.level} lacks derivative lineage for another level")
        px = self.px
        U = jets.truncate(self.U, A, B)
        F1 = jets.compose(lambda n, x: self.f1.deriv(n + 1, x), U)
        F2 = jets.compose(lambda n, x: self.f2.deriv(n + 1, x), U)
        W = prev.values
        T1 = jets.truncate(jets.d_t(W), A1, B1) - jets.truncate(jets.d_y(W, 2), A1, B1)
        T2 = jets.truncate(jets.d_y(jets.mul(F2, W)), A1, B1)
        T3 = jets.truncate(jets.mul(F1, W), A1, B1)
        h = self.mesh.hx
        hh = (0.5 * h)[:, None, None]
        w = px.weights
        m = np.arange(px.nlow)
        inner = (np.einsum("abiqy,q,qm->abimy", T1 + T2, w, self._R2) * hh**3
                 - np.einsum("abiqy,q,qm->abimy", T3, w, self._R1) * hh**2)
        low = (2 * m + 1)[:, None] / h[:, None, None] * inner
        alpha = jets.truncate(self.alpha_jets(), A1, B1)
        he = self.mesh.mx.edge_h[:, None]
        rhs_flux = he * jets.mul(alpha, jets.truncate(prev.jumps, A1, B1))   # (a, b, i, y)
        C = px.solve_top(np.moveaxis(low, (0, 1), (2, 3)), 0.0, np.moveaxis(rhs_flux, (0, 1), (1, 2)))
        avg2, flx = px.edge_rows(C)
        C = np.moveaxis(C, (2, 3), (0, 1))
        scale = max(1e-300, float(np.abs(rhs_flux).max(initial=0)), float(np.abs(C).max(initial=0)))
        res = {
            "average": float(np.abs(avg2).max(initial=0.0)) / scale,
            "flux": float(np.abs(np.moveaxis(flx, (1, 2), (0, 1)) - rhs_flux).max(initial=0.0)) / scale,
        }
        if max(res.values()) > 1e-9:
            raise AssertionError(f"omega_{prev.level + 1} defining conditions violated: {res}")
        return CorrectionLevel(prev.level + 1, self.direction, (A1, B1),
                               self._to_values(C), self._jump(C), C, res)

    def build(self) -> list[CorrectionLevel]:
        levels = [self.level0()]
        for _ in range(self.p):
            levels.append(self.next_level(levels[-1]))
        return levels

    # ---- post-processing --------------------------------------------------
    def split_y(self, arr):
        """(..., Y) -> (..., Ny, E) with E = q + 2 samples per y-cell."""
        return arr.reshape(arr.shape[:-1] + (self.mesh.ny, self.eta.size))

    def project_y(self, level: CorrectionLevel) -> np.ndarray:
        """Q_h^y omega_l as coefficients (Nx, Ny, K, K)."""
        if level.coeffs is None:
            raise ValueError("level 0 is not a polynomial in x")
        c = self.split_y(level.coeffs[0, 0])                  # (Nx, K, Ny, E)
        c = np.moveaxis(c, (2, 3), (0, 1))                    # (Ny, E, Nx, K)
        qy = self.qy
        d = qy.Q_from_data(qy.moments(c[:, 1:-1]), c[:, 0], c[:, -1])   # (Ny, n, Nx, m)
        return np.transpose(d, (2, 0, 3, 1))

    def l2_norm(self, level: CorrectionLevel) -> float:
        """||omega_l||_0 from the interior samples (x Gauss x y Gauss)."""
        v = self.split_y(level.values[0, 0])[..., 1:-1]      # (Nx, q, Ny, qy)
        wx = self.px.weights[None, :] * 0.5 * self.mesh.hx[:, None]
        wy = self.qy.weights[None, :] * 0.5 * self.mesh.hy[:, None]
        return float(np.sqrt(np.einsum("iqjr,iq,jr->", v**2, wx, wy)))


def alpha_jet(flux: ScalarFlux, um, up, tol: float | None = None) -> np.ndarray:
    """Jet of alpha = (f_hat(u-, u+) - f({u})) / [u] given jets of the traces.

    The branch is fixed by the zeroth-order values. On an endpoint branch
    alpha = -/+ 1/2 int_0^1 f'({u} -/+ s [u]/2) ds, which stays smooth as
    [u] -> 0; when the extremum is interior the quotient is used directly.
    """
    a, b = um[0, 0], up[0, 0]
    delta0 = b - a
    if tol is None:
        tol = 1e-12 * np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    fhat = godunov(flux, a, b)
    on_a = fhat == flux.f(a)
    on_b = ~on_a & (fhat == flux.f(b))
    crit = ~on_a & ~on_b
    degenerate = np.abs(delta0) < tol
    mid = 0.5 * (um + up)
    delta = up - um
    dflux = lambda n, x: flux.deriv(n + 1, x)
    avg_a = np.zeros_like(mid)
    avg_b = np.zeros_like(mid)
    for s, w in zip(_S_NODES, _S_WEIGHTS):
        avg_a += w * jets.compose(dflux, mid - 0.5 * s * delta)
        avg_b += w * jets.compose(dflux, mid + 0.5 * s * delta)
    out = np.where(on_a, -0.5 * avg_a, 0.0) + np.where(on_b, 0.5 * avg_b, 0.0)
    if np.any(crit & ~degenerate):
        safe = np.where(crit & ~degenerate, delta, 0.0)
        safe[0, 0] = np.where(crit & ~degenerate, delta0, 1.0)
        fm = jets.compose(flux.deriv, mid)
        q = jets.div(jets.constant(fhat, *[n - 1 for n in mid.shape[:2]]) - fm, safe)
        out = np.where(crit & ~degenerate, q, out)
    return np.where(degenerate, 0.0, out)


def build_omega(l: int, u: AnalyticField, t: float, mesh: Mesh2D, k: int, params: FluxParams,
                f1: ScalarFlux, f2: ScalarFlux, qv: int | None = None):
    """(builder, [omega_0 .. omega_l]) for the x-direction correction."""
    if l < 1:
        raise ValueError("correction level must be >= 1")
    b = CorrectionBuilder(u, t, mesh, k, params, f1, f2, l, qv, "x")
    return b, b.build()


def build_omega_bar(l: int, u: AnalyticField, t: float, mesh: Mesh2D, k: int, params: FluxParams,
                    f1: ScalarFlux, f2: ScalarFlux, qv: int | None = None):
    """The y-direction correction, built on the transposed problem.

    Levels are expressed in transposed coordinates (their 'x' is the original y).
    """
    if l < 1:
        raise ValueError("correction level must be >= 1")
    b = CorrectionBuilder(u.transposed(), t, mesh.transposed(), k, params, f2, f1, l, qv, "y")
    return b, b.build()


def correction_field(u: AnalyticField, t: float, p: int, mesh: Mesh2D, k: int, params: FluxParams,
                     f1: ScalarFlux, f2: ScalarFlux, qv: int | None = None) -> DGField:
    """omega^p = sum_l (Q_h^y omega_l + Q_h^x bar-omega_l)."""
    coeffs = np.zeros((mesh.nx, mesh.ny, k + 1, k + 1))
    if p > 0:
        bx, lx = build_omega(p, u, t, mesh, k, params, f1, f2, qv)
        by, ly = build_omega_bar(p, u, t, mesh, k, params, f1, f2, qv)
        for lev in lx[1:]:
            coeffs += bx.project_y(lev)
        for lev in ly[1:]:
            coeffs += np.transpose(by.project_y(lev), (1, 0, 3, 2))
    return DGField(mesh, k, coeffs, t)


def corrected_projection(u: AnalyticField, t: float, p: int, mesh: Mesh2D, k: int, params: FluxParams,
                         f1: ScalarFlux, f2: ScalarFlux, qv: int | None = None) -> DGField:
    """u_I^p = Pi_h u - omega^p, 0 <= p <= k-1."""
    if not 0 <= p <= k - 1:
        raise ValueError(f"p must lie in [0, k-1] = [0, {k - 1}], got {p}")
    pi = TensorProjector(mesh, k, params, qv).Pi_h(u, t)
    if p == 0:
        return pi
    omega = correction_field(u, t, p, mesh, k, params, f1, f2, qv)
    return pi.with_coeffs(pi.coeffs - omega.coeffs)
