"""Semi-discrete DDG operator for u_t + div f(u) = Laplace(u) + g on periodic meshes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .flux import FluxParams, ScalarFlux, godunov
from .mesh import DGField, Mesh2D
from .poly1d import Basis1D


@dataclass
class OperatorContext:
    mesh: Mesh2D
    k: int
    params: FluxParams
    f1: ScalarFlux
    f2: ScalarFlux
    source: Optional[Callable] = None
    qv: Optional[int] = None
    basis: Basis1D = field(init=False, repr=False)

    def __post_init__(self):
        self.basis = Basis1D(self.k, self.qv)
        if self.basis.qv < self.k + 1:
            raise ValueError("quadrature must use at least k+1 points per direction")
        b = self.basis
        self._X = self.mesh.mx.points(b.nodes)[:, None, :, None]
        self._Y = self.mesh.my.points(b.nodes)[None, :, None, :]
        m = np.arange(self.k + 1)
        inv = np.outer(2 * m + 1, 2 * m + 1)
        self._inv_mass = inv[None, None] / np.outer(self.mesh.hx, self.mesh.hy)[:, :, None, None]

    def _check(self, u: DGField):
        if u.k != self.k:
            raise ValueError(f"field degree {u.k} does not match operator degree {self.k}")
        if u.mesh.nx != self.mesh.nx or u.mesh.ny != self.mesh.ny:
            raise ValueError("field lives on a different mesh")
        if not np.all(np.isfinite(u.coeffs)):
            raise FloatingPointError("non-finite coefficients in u_h")


def _volume_values(c, b: Basis1D, hx, hy):
    """u, u_x, u_y at the tensor quadrature points, each (nx, ny, q, q)."""
    V, dV = b.V, b.dV
    tmp = c @ V.T
    U = V @ tmp
    Ux = (dV @ tmp) * (2.0 / hx)[:, None, None, None]
    Uy = (V @ (c @ dV.T)) * (2.0 / hy)[None, :, None, None]
    return U, Ux, Uy


def _edge_data(c, b: Basis1D, mesh: Mesh2D, direction: str):
    """Traces on the edges normal to ``direction``.

    Edge (i, j) for direction 'x' sits at x_{i+1/2} between tau_1 = (i, j)
    and tau_2 = (i+1, j); for 'y' at y_{j+1/2} between (i, j) and (i, j+1).
    Returns dict of (nx, ny, q) arrays.
    """
    E = b.ends.reshape(6, -1)  # row 2d + e: derivative d at end e (0: s=-1, 1: s=+1)
    V = b.V
    if direction == "x":
        h = mesh.hx
        tr = E @ (c @ V.T)                                   # (nx, ny, 6, q)
        scale = [((2.0 / h) ** d)[:, None, None] for d in range(3)]
        side = [[tr[:, :, 2 * d + e] * scale[d] for d in range(3)] for e in range(2)]
        minus = side[1]
        plus = [np.roll(p, -1, axis=0) for p in side[0]]
        he = mesh.mx.edge_h[:, None, None]
    else:
        h = mesh.hy
        tr = (V @ c) @ E.T                                   # (nx, ny, q, 6)
        scale = [((2.0 / h) ** d)[None, :, None] for d in range(3)]
        side = [[tr[..., 2 * d + e] * scale[d] for d in range(3)] for e in range(2)]
        minus = side[1]
        plus = [np.roll(p, -1, axis=1) for p in side[0]]
        he = mesh.my.edge_h[None, :, None]
    return {
        "u1": minus[0], "u2": plus[0],
        "jump": plus[0] - minus[0],
        "avg_n": 0.5 * (minus[1] + plus[1]),
        "jump_nn": plus[2] - minus[2],
        "h": he,
    }


def _diffusive_flux(ed, params: FluxParams):
    return params.beta0 / ed["h"] * ed["jump"] + ed["avg_n"] + params.beta1 * ed["h"] * ed["jump_nn"]


def residual(u: DGField, t: float, ctx: OperatorContext, with_source: bool = True) -> DGField:
    """du_h/dt in modal form.

    For each cell and v = L_m L_n the mass-weighted output is
        (f(u) - grad u, grad v) - int v (f_hat - grad u_hat).n
        - 1/2 int [u] grad v.n + (g, v).
    Every edge flux is computed once and scattered to both neighbours.
    """
    ctx._check(u)
    b, mesh, k = ctx.basis, ctx.mesh, ctx.k
    c = u.coeffs
    hx, hy = mesh.hx, mesh.hy
    W = b.weights
    V, dV = b.V, b.dV
    E = b.ends

    U, Ux, Uy = _volume_values(c, b, hx, hy)
    WW = np.outer(W, W)
    F1 = (ctx.f1.f(U) - Ux) * WW
    F2 = (ctx.f2.f(U) - Uy) * WW
    # dx dy = hx hy / 4 dxi deta, d/dx = 2/hx d/dxi
    R = (dV.T @ F1 @ V) * (0.5 * hy)[None, :, None, None]
    R += (V.T @ F2 @ dV) * (0.5 * hx)[:, None, None, None]
    if with_source and ctx.source is not None:
        G = ctx.source(ctx._X, ctx._Y, t) * WW
        R += (V.T @ G @ V) * (0.25 * np.outer(hx, hy))[:, :, None, None]

    # vertical edges, normal (1, 0) from (i, j) to (i+1, j)
    ed = _edge_data(c, b, mesh, "x")
    flux = godunov(ctx.f1, ed["u1"], ed["u2"]) - _diffusive_flux(ed, ctx.params)
    fv = ((flux * W) @ V)[:, :, None, :]                   # (nx, ny, 1, K)
    jv = ((ed["jump"] * W) @ V)[:, :, None, :]
    s2x = (2.0 / hx)[:, None, None, None]
    E0, E1 = E[0][:, :, None], E[1][:, :, None]             # (end, mode, 1)
    left = -E0[1] * fv - 0.5 * s2x * E1[1] * jv
    right = E0[0] * fv - 0.5 * np.roll(s2x, -1, axis=0) * E1[0] * jv
    R += (0.5 * hy)[None, :, None, None] * (left + np.roll(right, 1, axis=0))

    # horizontal edges, normal (0, 1) from (i, j) to (i, j+1)
    ed = _edge_data(c, b, mesh, "y")
    flux = godunov(ctx.f2, ed["u1"], ed["u2"]) - _diffusive_flux(ed, ctx.params)
    fv = ((flux * W) @ V)[:, :, :, None]                   # (nx, ny, K, 1)
    jv = ((ed["jump"] * W) @ V)[:, :, :, None]
    s2y = (2.0 / hy)[None, :, None, None]
    E0, E1 = E[0][:, None, :], E[1][:, None, :]             # (end, 1, mode)
    low = -E0[1] * fv - 0.5 * s2y * E1[1] * jv
    up = E0[0] * fv - 0.5 * np.roll(s2y, -1, axis=1) * E1[0] * jv
    R += (0.5 * hx)[:, None, None, None] * (low + np.roll(up, 1, axis=1))

    return DGField(mesh, k, R * ctx._inv_mass, t)


def residual_cellwise(u: DGField, t: float, ctx: OperatorContext) -> DGField:
    """Reference assembly: loop over cells, each evaluating its own four faces.

    Slow; exists to cross-check ``residual``.
    """
    ctx._check(u)
    b, mesh, k = ctx.basis, ctx.mesh, ctx.k
    p = ctx.params
    W = b.weights
    Lq = [b.tables(b.nodes, d) for d in range(3)]                 # (q, K)
    Le = [b.tables(np.array([-1.0, 1.0]), d) for d in range(3)]   # (2, K)
    c = u.coeffs
    nx, ny = mesh.nx, mesh.ny
    ww = np.outer(W, W)
    m = np.arange(k + 1)
    out = np.zeros_like(c)

    def face_flux(u1, u2, he, flux):
        jump = u2[0] - u1[0]
        uhat = p.beta0 / he * jump + 0.5 * (u1[1] + u2[1]) + p.beta1 * he * (u2[2] - u1[2])
        return godunov(flux, u1[0], u2[0]) - uhat, jump

    for i in range(nx):
        for j in range(ny):
            hx, hy = mesh.hx[i], mesh.hy[j]
            cij = c[i, j]
            U = Lq[0] @ cij @ Lq[0].T
            Ux = (2 / hx) * Lq[1] @ cij @ Lq[0].T
            Uy = (2 / hy) * Lq[0] @ cij @ Lq[1].T
            acc = 0.5 * hy * Lq[1].T @ ((ctx.f1.f(U) - Ux) * ww) @ Lq[0]
            acc += 0.5 * hx * Lq[0].T @ ((ctx.f2.f(U) - Uy) * ww) @ Lq[1]
            if ctx.source is not None:
                X = mesh.mx.points(b.nodes)[i]
                Y = mesh.my.points(b.nodes)[j]
                acc += 0.25 * hx * hy * Lq[0].T @ (ctx.source(X[:, None], Y[None, :], t) * ww) @ Lq[0]
            for sgn in (1, -1):   # east / west faces, outward normal (sgn, 0)
                e_in = 1 if sgn == 1 else 0
                nb = (i + sgn) % nx
                hn = mesh.hx[nb]
                ui = [(2 / hx) ** d * (Le[d][e_in] @ cij @ Lq[0].T) for d in range(3)]
                uo = [(2 / hn) ** d * (Le[d][1 - e_in] @ c[nb, j] @ Lq[0].T) for d in range(3)]
                u1, u2 = (ui, uo) if sgn == 1 else (uo, ui)
                F, jump = face_flux(u1, u2, 0.5 * (hx + hn), ctx.f1)
                acc -= sgn * 0.5 * hy * np.outer(Le[0][e_in], (F * W) @ Lq[0])
                # (u_ext - u_int) n_out = [u] e_x
                acc -= 0.25 * hy * (2 / hx) * np.outer(Le[1][e_in], (jump * W) @ Lq[0])
            for sgn in (1, -1):   # north / south faces, outward normal (0, sgn)
                e_in = 1 if sgn == 1 else 0
                nb = (j + sgn) % ny
                hn = mesh.hy[nb]
                ui = [(2 / hy) ** d * (Lq[0] @ cij @ Le[d][e_in]) for d in range(3)]
                uo = [(2 / hn) ** d * (Lq[0] @ c[i, nb] @ Le[d][1 - e_in]) for d in range(3)]
                u1, u2 = (ui, uo) if sgn == 1 else (uo, ui)
                F, jump = face_flux(u1, u2, 0.5 * (hy + hn), ctx.f2)
                acc -= sgn * 0.5 * hx * np.outer((F * W) @ Lq[0], Le[0][e_in])
                acc -= 0.25 * hx * (2 / hy) * np.outer((jump * W) @ Lq[0], Le[1][e_in])
            out[i, j] = acc * np.outer(2 * m + 1, 2 * m + 1) / (hx * hy)
    return DGField(mesh, k, out, t)


def _quad_pairs(u: DGField, v: DGField, ctx: OperatorContext):
    ctx._check(u)
    ctx._check(v)
    b, mesh = ctx.basis, ctx.mesh
    return b, mesh, b.weights


def bilinear_A(u: DGField, v: DGField, ctx: OperatorContext) -> float:
    """A(u, v) = (grad u, grad v) + sum_e int ([v] grad u_hat + [u] {grad v}) . n."""
    b, mesh, W = _quad_pairs(u, v, ctx)
    ww = np.outer(W, W)
    area = 0.25 * np.outer(mesh.hx, mesh.hy)[:, :, None, None]
    _, Ux, Uy = _volume_values(u.coeffs, b, mesh.hx, mesh.hy)
    _, Vx, Vy = _volume_values(v.coeffs, b, mesh.hx, mesh.hy)
    total = np.sum((Ux * Vx + Uy * Vy) * ww * area)
    for direction, along in (("x", mesh.hy[None, :, None]), ("y", mesh.hx[:, None, None])):
        eu = _edge_data(u.coeffs, b, mesh, direction)
        ev = _edge_data(v.coeffs, b, mesh, direction)
        integrand = ev["jump"] * _diffusive_flux(eu, ctx.params) + eu["jump"] * ev["avg_n"]
        total += np.sum(integrand * W * 0.5 * along)
    return float(total)


def form_F(u: DGField, v: DGField, ctx: OperatorContext) -> float:
    """F(u, v) = (f(u), grad v) + sum_e int [v] f_hat(u) . n."""
    b, mesh, W = _quad_pairs(u, v, ctx)
    ww = np.outer(W, W)
    area = 0.25 * np.outer(mesh.hx, mesh.hy)[:, :, None, None]
    U, _, _ = _volume_values(u.coeffs, b, mesh.hx, mesh.hy)
    _, Vx, Vy = _volume_values(v.coeffs, b, mesh.hx, mesh.hy)
    total = np.sum((ctx.f1.f(U) * Vx + ctx.f2.f(U) * Vy) * ww * area)
    for direction, flux, along in (("x", ctx.f1, mesh.hy[None, :, None]), ("y", ctx.f2, mesh.hx[:, None, None])):
        eu = _edge_data(u.coeffs, b, mesh, direction)
        ev = _edge_data(v.coeffs, b, mesh, direction)
        total += np.sum(ev["jump"] * godunov(flux, eu["u1"], eu["u2"]) * W * 0.5 * along)
    return float(total)


def energy_norm(v: DGField, ctx: OperatorContext) -> float:
    """||v||_E = sqrt((grad v, grad v) + beta0/h sum_e int [v]^2)."""
    b, mesh, W = _quad_pairs(v, v, ctx)
    ww = np.outer(W, W)
    area = 0.25 * np.outer(mesh.hx, mesh.hy)[:, :, None, None]
    _, Vx, Vy = _volume_values(v.coeffs, b, mesh.hx, mesh.hy)
    total = np.sum((Vx**2 + Vy**2) * ww * area)
    for direction, along in (("x", mesh.hy[None, :, None]), ("y", mesh.hx[:, None, None])):
        ev = _edge_data(v.coeffs, b, mesh, direction)
        total += np.sum(ctx.params.beta0 / ev["h"] * ev["jump"] ** 2 * W * 0.5 * along)
    return float(np.sqrt(max(total, 0.0)))
