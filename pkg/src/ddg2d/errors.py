"""Error measures at nodes, Lobatto points, Gauss points and in L2, plus rates."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .mesh import DGField
from .poly1d import LobattoBasis1D, gauss_rule


@dataclass
class ErrorSample:
    N: int
    k: int
    t: float
    e_l: float
    e_n: float
    e_gx: float
    e_gy: float
    l2: float
    beta0: float = float("nan")
    beta1: float = float("nan")
    init: str = ""
    cfl: float = float("nan")

    def __post_init__(self):
        for name in ("e_l", "e_n", "e_gx", "e_gy", "l2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} = {v} is not a finite non-negative error")

    def as_dict(self) -> dict:
        return asdict(self)


ERROR_COLUMNS = ("e_l", "e_n", "e_gx", "e_gy", "l2")


def _points(mesh, sx, sy):
    X = mesh.mx.points(sx)[:, None, :, None]
    Y = mesh.my.points(sy)[None, :, None, :]
    return X, Y


def error_nodes(uh: DGField, u, t: float) -> float:
    """RMS over mesh nodes of u - {u_h}, {u_h} being the mean of the four corner traces."""
    c = uh.values_at([-1.0, 1.0], [-1.0, 1.0])           # (nx, ny, 2, 2)
    # node (i+1/2, j+1/2): cells (i, j), (i+1, j), (i, j+1), (i+1, j+1)
    sw = c[:, :, 1, 1]
    se = np.roll(c[:, :, 0, 1], -1, axis=0)
    nw = np.roll(c[:, :, 1, 0], -1, axis=1)
    ne = np.roll(np.roll(c[:, :, 0, 0], -1, axis=0), -1, axis=1)
    mean = 0.25 * (((sw + se) + nw) + ne)
    xn = uh.mesh.mx.nodes[1:][:, None]
    yn = uh.mesh.my.nodes[1:][None, :]
    err = u(xn, yn, t) - mean
    return float(np.sqrt(np.mean(err**2)))


def error_lobatto(uh: DGField, u, t: float) -> float:
    """RMS of u - u_h over the (k+1)^2 tensor Lobatto points of every cell."""
    s = LobattoBasis1D(uh.k).lobatto_points
    X, Y = _points(uh.mesh, s, s)
    err = u(X, Y, t) - uh.values_at(s, s)
    return float(np.sqrt(np.mean(err**2)))


def error_gauss(uh: DGField, u, t: float) -> tuple[float, float]:
    """RMS of the gradient error over the k^2 tensor Gauss points (zeros of L_k)."""
    s = LobattoBasis1D(uh.k).gauss_points
    X, Y = _points(uh.mesh, s, s)
    ux = u.deriv(1, 0, 0)(X, Y, t) - uh.values_at(s, s, dx=1)
    uy = u.deriv(0, 1, 0)(X, Y, t) - uh.values_at(s, s, dy=1)
    return float(np.sqrt(np.mean(ux**2))), float(np.sqrt(np.mean(uy**2)))


def error_l2(uh: DGField, u, t: float, q: int | None = None) -> float:
    """||u - u_h||_0 with q points per direction (default k + 5)."""
    q = uh.k + 5 if q is None else q
    s, w = gauss_rule(q)
    X, Y = _points(uh.mesh, s, s)
    err = u(X, Y, t) - uh.values_at(s, s)
    area = np.outer(uh.mesh.hx, uh.mesh.hy)[:, :, None, None] / 4.0
    return float(np.sqrt(np.sum(err**2 * np.outer(w, w) * area)))


def l2_distance(a: DGField, b: DGField) -> float:
    return a.with_coeffs(a.coeffs - b.coeffs).l2_norm()


def sample_errors(uh: DGField, u, t: float, **meta) -> ErrorSample:
    gx, gy = error_gauss(uh, u, t)
    return ErrorSample(
        N=uh.mesh.nx, k=uh.k, t=t,
        e_l=error_lobatto(uh, u, t), e_n=error_nodes(uh, u, t),
        e_gx=gx, e_gy=gy, l2=error_l2(uh, u, t), **meta,
    )


def rate(coarse: float, fine: float) -> float | None:
    """log2(coarse / fine), None when undefined."""
    if not (coarse > 0 and fine > 0) or not (math.isfinite(coarse) and math.isfinite(fine)):
        return None
    return math.log2(coarse / fine)


def rates(samples, columns=ERROR_COLUMNS) -> list[dict]:
    """Per-row rates against the previous (coarser) sample; first row is all None."""
    samples = list(samples)
    for a, b in zip(samples, samples[1:]):
        if b.N != 2 * a.N:
            raise ValueError(f"mesh sizes must double: {a.N} -> {b.N}")
    out = [{c: None for c in columns}]
    for a, b in zip(samples, samples[1:]):
        out.append({c: rate(getattr(a, c), getattr(b, c)) for c in columns})
    return out
