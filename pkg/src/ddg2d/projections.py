"""Directional DDG projection P, tensor projection Pi_h, Gauss-Lobatto
projection Q_h and Lobatto interpolation I_h on periodic meshes.

The 1-D operators work on *data* (cell moments, node values, node
derivatives) so that the same code serves analytic functions, sampled
cross-sections and derivative jets. Leading axes are (cell, mode); any
trailing axes are batch dimensions.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .flux import FluxParams
from .mesh import DGField, Mesh1D, Mesh2D
from .poly1d import LobattoBasis1D, gauss_rule, legendre_table, lobatto_to_legendre

logger = logging.getLogger(__name__)

VERIFY = True  # post-construction checks of the defining conditions


class CirculantSolveError(RuntimeError):
    pass


@dataclass
class CirculantBlockSystem:
    """Block system whose i-th block row reads A_i c_i + B_i c_{i+1} = b_i (indices mod N).

    ``A`` and ``B`` are (2, 2) for a truly circulant matrix or (N, 2, 2).
    """

    A: np.ndarray
    B: np.ndarray
    n: int
    rhs: np.ndarray | None = None   # (N, 2, *batch)

    def matrix(self) -> np.ndarray:
        n = self.n
        A = np.broadcast_to(self.A, (n, 2, 2))
        B = np.broadcast_to(self.B, (n, 2, 2))
        M = np.zeros((2 * n, 2 * n))
        for i in range(n):
            ip = (i + 1) % n
            M[2 * i:2 * i + 2, 2 * i:2 * i + 2] += A[i]
            M[2 * i:2 * i + 2, 2 * ip:2 * ip + 2] += B[i]
        return M

    @cached_property
    def _factor(self):
        if self.n < 2:
            raise ValueError("circulant system needs N >= 2")
        M = self.matrix()
        cond = np.linalg.cond(M)
        if not np.isfinite(cond) or cond > 1e13:
            raise CirculantSolveError(
                f"block-circulant matrix is singular (cond ~ {cond:.3e}); check beta0 >= Gamma(beta1)"
            )
        return M, scipy.linalg.lu_factor(M), cond

    @property
    def condition(self) -> float:
        return self._factor[2]

    def solve(self, rhs=None) -> np.ndarray:
        rhs = self.rhs if rhs is None else rhs
        rhs = np.asarray(rhs, dtype=float)
        M, lu, _ = self._factor
        batch = rhs.shape[2:]
        b = rhs.reshape(2 * self.n, -1)
        c = scipy.linalg.lu_solve(lu, b)
        r = np.abs(M @ c - b).max(initial=0.0)
        scale = np.abs(b).max(initial=0.0)
        if r > 1e-10 * max(scale, 1e-300) and r > 1e-300:
            raise CirculantSolveError(f"circulant solve residual {r:.3e} vs |b| {scale:.3e}")
        return c.reshape((self.n, 2) + batch)


def solve_circulant(sys: CirculantBlockSystem) -> np.ndarray:
    """c_i = (c_{i,k-1}, c_{i,k}) solving M c = b."""
    return sys.solve()


class DirectionalProjector:
    """P, Q and I along one periodic direction with degree k."""

    def __init__(self, mesh: Mesh1D, k: int, params: FluxParams | None = None, q: int | None = None):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.mesh, self.k, self.params = mesh, k, params
        self.q = k + 3 if q is None else q
        self.nodes, self.weights = gauss_rule(self.q)
        self.Lq = legendre_table(k, self.nodes).T               # (q, k+1)
        self.Le = np.stack([legendre_table(k, np.array([-1.0, 1.0]), d).T for d in range(3)])  # (d, end, m)
        self.h = mesh.widths
        self.he = mesh.edge_h
        self.nlow = k - 1                                       # modes 0..k-2

    # ---- helpers ---------------------------------------------------------
    def points(self) -> np.ndarray:
        """Quadrature points, shape (N, q)."""
        return self.mesh.points(self.nodes)

    def moments(self, vals_q, upto: int | None = None) -> np.ndarray:
        """int_cell v L_m dx for m < upto from samples at quadrature points.

        ``vals_q`` has shape (N, q, *batch); returns (N, upto, *batch).
        """
        upto = self.nlow if upto is None else upto
        vals_q = np.asarray(vals_q, dtype=float)
        L = self.Lq[:, :upto] * self.weights[:, None]
        out = np.einsum("iq...,qm->im...", vals_q, L)
        return out * (0.5 * self.h).reshape((-1, 1) + (1,) * (vals_q.ndim - 2))

    def _hcol(self, arr, ndim):
        return arr.reshape((-1,) + (1,) * (ndim - 1))

    @cached_property
    def flux_rows(self):
        """(g0, g1) for every edge: h_e times the DDG derivative flux.

        Row for edge i (right edge of cell i) reads
        sum_m g0[i, m] c_{i,m} + g1[i, m] c_{i+1,m}.
        """
        p = self.params
        if p is None:
            raise ValueError("P projection needs FluxParams")
        h, he, right = self.h, self.he, self.mesh.right
        hl, hr = h[:, None], h[right][:, None]
        L, dL, d2L = self.Le[0], self.Le[1], self.Le[2]
        e = he[:, None]
        g0 = -p.beta0 * L[1][None] + e / hl * dL[1][None] - p.beta1 * e**2 * 4.0 / hl**2 * d2L[1][None]
        g1 = p.beta0 * L[0][None] + e / hr * dL[0][None] + p.beta1 * e**2 * 4.0 / hr**2 * d2L[0][None]
        return g0, g1

    @cached_property
    def system(self) -> CirculantBlockSystem:
        g0, g1 = self.flux_rows
        k = self.k
        top = [k - 1, k]
        n = self.mesh.n
        A = np.zeros((n, 2, 2))
        B = np.zeros((n, 2, 2))
        A[:, 0, :] = self.Le[0][1][top]
        B[:, 0, :] = self.Le[0][0][top]
        A[:, 1, :] = g0[:, top]
        B[:, 1, :] = g1[:, top]
        if np.allclose(A, A[0]) and np.allclose(B, B[0]):
            A, B = A[0], B[0]
        return CirculantBlockSystem(A, B, n)

    def edge_rows(self, c):
        """(2{v}, h_e * v_hat_x) at every right edge for modal coefficients c (N, k+1, *batch)."""
        g0, g1 = self.flux_rows
        right = self.mesh.right
        c = np.asarray(c, dtype=float)
        L = self.Le[0]
        avg2 = np.einsum("m,im...->i...", L[1], c) + np.einsum("m,im...->i...", L[0], c[right])
        flx = np.einsum("im,im...->i...", g0, c) + np.einsum("im,im...->i...", g1, c[right])
        return avg2, flx

    def solve_top(self, low, rhs_avg, rhs_flux):
        """Fill modes k-1, k given low modes and target (2{v}, h_e v_hat_x) per edge."""
        low = np.asarray(low, dtype=float)
        N = self.mesh.n
        batch = np.broadcast_shapes(low.shape[2:], np.shape(rhs_avg)[1:], np.shape(rhs_flux)[1:])
        c = np.zeros((N, self.k + 1) + batch)
        c[:, : self.nlow] = low
        a0, f0 = self.edge_rows(c)
        rhs = np.stack([np.broadcast_to(rhs_avg, (N,) + batch) - a0,
                        np.broadcast_to(rhs_flux, (N,) + batch) - f0], axis=1)
        c[:, self.k - 1:] = self.system.solve(rhs)
        return c

    # ---- P ---------------------------------------------------------------
    def P_from_data(self, moments, values, derivs, verify: bool | None = None):
        """Coefficients of P v per cell.

        moments: int v L_m over each cell for m <= k-2, (N, k-1, *batch)
        values, derivs: v and v_x at the right node of each cell, (N, *batch)
        """
        moments = np.asarray(moments, dtype=float)
        nd = moments.ndim
        m = np.arange(self.nlow).reshape((1, -1) + (1,) * (nd - 2))
        low = (2 * m + 1) / self._hcol(self.h, nd) * moments
        values = np.asarray(values, dtype=float)
        derivs = np.asarray(derivs, dtype=float)
        he = self._hcol(self.he, derivs.ndim)
        c = self.solve_top(low, 2.0 * values, he * derivs)
        if VERIFY if verify is None else verify:
            r = self.P_residuals(c, moments, values, derivs)
            scale = max(1.0, float(np.abs(values).max(initial=0)), float(np.abs(derivs).max(initial=0)))
            if max(r.values()) > 1e-9 * scale:
                raise AssertionError(f"P projection defining conditions violated: {r}")
        return c

    def P_residuals(self, c, moments, values, derivs) -> dict:
        """Max residuals of the three defining conditions (moments, flux, average)."""
        c = np.asarray(c, dtype=float)
        got = c[:, : self.nlow] * self._hcol(self.h, c.ndim) / (2 * np.arange(self.nlow) + 1).reshape(
            (1, -1) + (1,) * (c.ndim - 2))
        avg2, flx = self.edge_rows(c)
        he = self._hcol(self.he, np.ndim(derivs))
        return {
            "orthogonality": float(np.abs(got - moments).max(initial=0.0)),
            "flux": float(np.abs(flx / he - derivs).max(initial=0.0)),
            "average": float(np.abs(0.5 * avg2 - values).max(initial=0.0)),
        }

    def P_of(self, w, dw, verify: bool | None = None):
        """P applied to a 1-D periodic callable ``w`` with derivative ``dw``."""
        x = self.points()
        xr = self.mesh.nodes[1:]
        return self.P_from_data(self.moments(w(x)), w(xr), dw(xr), verify)

    # ---- Q ---------------------------------------------------------------
    def Q_from_data(self, moments, left, right):
        """Gauss-Lobatto projection: endpoint values plus moments up to k-2."""
        moments = np.asarray(moments, dtype=float)
        left = np.asarray(left, dtype=float)
        right = np.asarray(right, dtype=float)
        k, nd = self.k, moments.ndim
        m = np.arange(self.nlow).reshape((1, -1) + (1,) * (nd - 2))
        batch = np.broadcast_shapes(moments.shape[2:], left.shape[1:], right.shape[1:])
        c = np.zeros((self.mesh.n, k + 1) + batch)
        c[:, : self.nlow] = (2 * m + 1) / self._hcol(self.h, nd) * moments
        L = self.Le[0]
        rl = left - np.einsum("m,im...->i...", L[0][: self.nlow], c[:, : self.nlow])
        rr = right - np.einsum("m,im...->i...", L[1][: self.nlow], c[:, : self.nlow])
        S = np.array([[L[0][k - 1], L[0][k]], [L[1][k - 1], L[1][k]]])
        top = np.linalg.solve(S, np.stack([rl, rr]).reshape(2, -1))
        c[:, k - 1:] = np.moveaxis(top.reshape((2, self.mesh.n) + batch), 0, 1)
        return c

    def Q_of(self, w):
        x = self.points()
        return self.Q_from_data(self.moments(w(x)), w(self.mesh.nodes[:-1]), w(self.mesh.nodes[1:]))

    # ---- I ---------------------------------------------------------------
    @cached_property
    def lobatto(self):
        return LobattoBasis1D(self.k)

    def I_lobatto_from_data(self, left, right, deriv_moments):
        """Lobatto coefficients v_{i,mu}, mu = 0..k.

        deriv_moments[i, mu-2] = int_cell v_x L_{mu-1} dx for mu = 2..k.
        """
        left = np.asarray(left, dtype=float)
        dm = np.asarray(deriv_moments, dtype=float)
        mu = np.arange(2, self.k + 1).reshape((1, -1) + (1,) * (dm.ndim - 2))
        return np.concatenate([left[:, None], np.asarray(right, dtype=float)[:, None],
                               (2 * mu - 1) / 2.0 * dm], axis=1)

    def lobatto_to_modal(self, a):
        T = lobatto_to_legendre(self.k)  # (mu, m)
        return np.einsum("iu...,um->im...", a, T)

    def I_of(self, w, dw, lobatto: bool = False):
        x = self.points()
        dm = self.moments(dw(x), upto=self.k)[:, 1:]
        a = self.I_lobatto_from_data(w(self.mesh.nodes[:-1]), w(self.mesh.nodes[1:]), dm)
        return a if lobatto else self.lobatto_to_modal(a)


# ---- public directional API ----------------------------------------------------

def _axis(mesh, direction):
    if isinstance(mesh, Mesh1D):
        return mesh
    if direction == "x":
        return mesh.mx
    if direction == "y":
        return mesh.my
    raise ValueError("direction must be 'x' or 'y'")


def project_P_directional(w, dw, direction, mesh, k, params, verify=None):
    """Per-cell modal coefficients (N, k+1) of P^{(direction)} w."""
    return DirectionalProjector(_axis(mesh, direction), k, params).P_of(w, dw, verify)


def project_Q_directional(w, direction, mesh, k):
    return DirectionalProjector(_axis(mesh, direction), k).Q_of(w)


def interpolate_I_directional(w, dw, direction, mesh, k, lobatto=False):
    return DirectionalProjector(_axis(mesh, direction), k).I_of(w, dw, lobatto)


# ---- tensor operators ------------------------------------------------------------

@dataclass
class TensorProjector:
    """Pi_h = P^(x) (x) P^(y) and I_h = I^(x) (x) I^(y) on a 2-D mesh."""

    mesh: Mesh2D
    k: int
    params: FluxParams
    q: int | None = None
    px: DirectionalProjector = field(init=False, repr=False)
    py: DirectionalProjector = field(init=False, repr=False)

    def __post_init__(self):
        self.px = DirectionalProjector(self.mesh.mx, self.k, self.params, self.q)
        self.py = DirectionalProjector(self.mesh.my, self.k, self.params, self.q)

    def _Py_lines(self, f, X, t, verify):
        """P^(y) of f(X, .) for an array of x-locations X (any shape).

        Returns (Ny, k+1, *X.shape).
        """
        py = self.py
        Xb = X[None, None]                            # (1, 1, *X.shape)
        yq = py.points().reshape(py.mesh.n, py.q, *([1] * X.ndim))
        yr = py.mesh.nodes[1:].reshape((-1,) + (1,) * X.ndim)
        vals = f.deriv(0, 0, 0)(Xb, yq, t)
        mom = py.moments(vals)
        return py.P_from_data(mom, f.deriv(0, 0, 0)(X[None], yr, t), f.deriv(0, 1, 0)(X[None], yr, t), verify)

    def Pi_h(self, u, t: float, verify: bool | None = None) -> DGField:
        """Pi_h u: apply P^(y) along x-quadrature lines and node lines, then P^(x)."""
        px = self.px
        xq = px.points()                               # (Nx, q)
        xr = px.mesh.nodes[1:]                         # (Nx,)
        dq = self._Py_lines(u, xq, t, verify)          # (Ny, n, Nx, q)
        dr = self._Py_lines(u, xr, t, verify)          # (Ny, n, Nx)
        drx = self._Py_lines(u.shifted(1, 0, 0), xr, t, verify)
        mom = px.moments(np.moveaxis(dq, (2, 3), (0, 1)))   # (Nx, k-1, Ny, n)
        c = px.P_from_data(mom, np.moveaxis(dr, 2, 0), np.moveaxis(drx, 2, 0), verify)  # (Nx, m, Ny, n)
        return DGField(self.mesh, self.k, np.transpose(c, (0, 2, 1, 3)), t)

    def I_h(self, u, t: float) -> DGField:
        """I_h u from point values at nodes and moments of derivatives."""
        k = self.k
        px, py = self.px, self.py
        xq, yq = px.points(), py.points()
        xl, xr = px.mesh.nodes[:-1], px.mesh.nodes[1:]
        yl, yr = py.mesh.nodes[:-1], py.mesh.nodes[1:]

        def Iy(g, gy, X):
            # I^(y) of g(X, .): (Ny, k+1, *X.shape)
            ysh = (1,) * X.ndim
            dm = py.moments(gy(X[None, None], yq.reshape(py.mesh.n, py.q, *ysh), t), upto=k)[:, 1:]
            a = py.I_lobatto_from_data(g(X[None], yl.reshape((-1,) + ysh), t),
                                       g(X[None], yr.reshape((-1,) + ysh), t), dm)
            return py.lobatto_to_modal(a)

        u0, uy = u.deriv(0, 0, 0), u.deriv(0, 1, 0)
        ux, uxy = u.deriv(1, 0, 0), u.deriv(1, 1, 0)
        left = Iy(u0, uy, xl)                          # (Ny, n, Nx)
        right = Iy(u0, uy, xr)
        dxq = Iy(ux, uxy, xq)                          # (Ny, n, Nx, q)
        dm = px.moments(np.moveaxis(dxq, (2, 3), (0, 1)), upto=k)[:, 1:]
        a = px.I_lobatto_from_data(np.moveaxis(left, 2, 0), np.moveaxis(right, 2, 0), dm)
        c = px.lobatto_to_modal(a)                     # (Nx, m, Ny, n)
        return DGField(self.mesh, k, np.transpose(c, (0, 2, 1, 3)), t)


def project_Pi_h(u, t: float, mesh: Mesh2D, k: int, params: FluxParams, verify=None) -> DGField:
    return TensorProjector(mesh, k, params).Pi_h(u, t, verify)


def interpolate_I_h(u, t: float, mesh: Mesh2D, k: int) -> DGField:
    return TensorProjector(mesh, k, FluxParams(0.0, 0.0)).I_h(u, t)
