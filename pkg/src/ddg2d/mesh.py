"""Periodic rectangular meshes on [0, 2pi]^2 and modal DG fields."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .poly1d import Basis1D, gauss_rule, legendre_table

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Mesh1D:
    """Periodic partition of [0, 2pi] given by its N+1 nodes."""

    nodes: np.ndarray

    @property
    def n(self) -> int:
        return len(self.nodes) - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    @property
    def right(self) -> np.ndarray:
        """Index of the right neighbour of each cell (periodic)."""
        return np.roll(np.arange(self.n), -1)

    @property
    def left(self) -> np.ndarray:
        return np.roll(np.arange(self.n), 1)

    @property
    def edge_h(self) -> np.ndarray:
        """Length scale at the right edge of each cell: mean of the two widths."""
        w = self.widths
        return 0.5 * (w + w[self.right])

    def points(self, s) -> np.ndarray:
        """Physical coordinates of reference points ``s``; shape (n,) + s.shape."""
        s = np.asarray(s, dtype=float)
        return self.centers.reshape((-1,) + (1,) * s.ndim) + 0.5 * self.widths.reshape(
            (-1,) + (1,) * s.ndim
        ) * s

    def locate(self, x: float) -> tuple[int, float]:
        """Cell index and reference coordinate of a physical point."""
        x = float(np.mod(x, TWO_PI))
        i = int(np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, self.n - 1))
        s = 2.0 * (x - self.centers[i]) / self.widths[i]
        return i, s


def uniform_1d(n: int) -> Mesh1D:
    nodes = np.linspace(0.0, TWO_PI, n + 1)
    nodes[0], nodes[-1] = 0.0, TWO_PI
    return Mesh1D(nodes)


@dataclass(frozen=True)
class Mesh2D:
    """Tensor-product periodic mesh tau_ij = tau_i^x x tau_j^y."""

    mx: Mesh1D
    my: Mesh1D

    @property
    def nx(self) -> int:
        return self.mx.n

    @property
    def ny(self) -> int:
        return self.my.n

    @property
    def hx(self) -> np.ndarray:
        return self.mx.widths

    @property
    def hy(self) -> np.ndarray:
        return self.my.widths

    @property
    def h(self) -> float:
        """Largest cell diameter."""
        return float(np.sqrt(self.hx.max() ** 2 + self.hy.max() ** 2))

    @property
    def hmin(self) -> float:
        return float(min(self.hx.min(), self.hy.min()))

    @property
    def ncells(self) -> int:
        return self.nx * self.ny

    def transposed(self) -> "Mesh2D":
        return Mesh2D(self.my, self.mx)


def build_mesh(nx: int, ny: int) -> Mesh2D:
    """Uniform nx x ny partition of [0, 2pi]^2."""
    if nx < 2 or ny < 2:
        raise ValueError(f"need at least 2 cells per direction, got ({nx}, {ny})")
    return Mesh2D(uniform_1d(nx), uniform_1d(ny))


class AnalyticField:
    """Closed-form u(x, y, t) with access to mixed partial derivatives.

    ``deriv(a, b, c)`` must return a vectorised callable for
    d_x^a d_y^b d_t^c u. Subclasses implement ``_deriv``.
    """

    def __call__(self, x, y, t):
        return self.deriv(0, 0, 0)(x, y, t)

    def deriv(self, a: int = 0, b: int = 0, c: int = 0) -> Callable:
        if min(a, b, c) < 0:
            raise ValueError("derivative orders must be non-negative")
        return self._deriv(a, b, c)

    def _deriv(self, a: int, b: int, c: int) -> Callable:
        raise NotImplementedError

    def shifted(self, a: int = 0, b: int = 0, c: int = 0) -> "AnalyticField":
        """The field d_x^a d_y^b d_t^c u, itself differentiable."""
        return _Shifted(self, a, b, c)

    def transposed(self) -> "AnalyticField":
        """v(x, y, t) = u(y, x, t)."""
        return _Transposed(self)


class _Shifted(AnalyticField):
    def __init__(self, base: AnalyticField, a: int, b: int, c: int):
        self.base, self.off = base, (a, b, c)

    def _deriv(self, a, b, c):
        oa, ob, oc = self.off
        return self.base.deriv(a + oa, b + ob, c + oc)


class _Transposed(AnalyticField):
    def __init__(self, base: AnalyticField):
        self.base = base

    def _deriv(self, a, b, c):
        f = self.base.deriv(b, a, c)
        return lambda x, y, t: f(y, x, t)


class DecayingSine(AnalyticField):
    """u = amp * exp(-rate t) * sin(x + y + phase); every derivative is closed form."""

    def __init__(self, rate: float = 2.0, amp: float = 1.0, phase: float = 0.0):
        self.rate, self.amp, self.phase = rate, amp, phase

    def _deriv(self, a, b, c):
        n = a + b
        scale = self.amp * (-self.rate) ** c

        def f(x, y, t):
            x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
            return scale * np.exp(-self.rate * t) * np.sin(x + y + self.phase + 0.5 * n * np.pi)

        return f


class CallableField(AnalyticField):
    """Field given by an explicit table ``{(a, b, c): callable}``."""

    def __init__(self, table: dict):
        self.table = dict(table)

    def _deriv(self, a, b, c):
        try:
            return self.table[(a, b, c)]
        except KeyError:
            raise KeyError(f"derivative {(a, b, c)} not available") from None


@dataclass
class DGField:
    """u_h restricted to tau_ij is sum_{m,n} c[i, j, m, n] L_m(xi) L_n(eta)."""

    mesh: Mesh2D
    k: int
    coeffs: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        shape = (self.mesh.nx, self.mesh.ny, self.k + 1, self.k + 1)
        if self.coeffs.shape != shape:
            raise ValueError(f"coefficient shape {self.coeffs.shape} != {shape}")

    @classmethod
    def zeros(cls, mesh: Mesh2D, k: int, t: float = 0.0) -> "DGField":
        return cls(mesh, k, np.zeros((mesh.nx, mesh.ny, k + 1, k + 1)), t)

    def copy(self) -> "DGField":
        return DGField(self.mesh, self.k, self.coeffs.copy(), self.t)

    def with_coeffs(self, coeffs, t: float | None = None) -> "DGField":
        return DGField(self.mesh, self.k, coeffs, self.t if t is None else t)

    def _check_cell(self, i, j):
        if not (0 <= i < self.mesh.nx and 0 <= j < self.mesh.ny):
            raise IndexError(f"cell ({i}, {j}) outside {self.mesh.nx} x {self.mesh.ny} mesh")

    def eval(self, cell, s) -> float:
        i, j = cell
        self._check_cell(i, j)
        Lx = legendre_table(self.k, s[0])
        Ly = legendre_table(self.k, s[1])
        return float(Lx @ self.coeffs[i, j] @ Ly)

    def eval_grad(self, cell, s) -> tuple[float, float]:
        i, j = cell
        self._check_cell(i, j)
        c = self.coeffs[i, j]
        Lx, dLx = legendre_table(self.k, s[0]), legendre_table(self.k, s[0], 1)
        Ly, dLy = legendre_table(self.k, s[1]), legendre_table(self.k, s[1], 1)
        hx, hy = self.mesh.hx[i], self.mesh.hy[j]
        return float(2.0 / hx * dLx @ c @ Ly), float(2.0 / hy * Lx @ c @ dLy)

    def eval_second_derivs(self, cell, s) -> tuple[float, float, float]:
        """(u_xx, u_xy, u_yy) at one point."""
        i, j = cell
        self._check_cell(i, j)
        c = self.coeffs[i, j]
        T = [legendre_table(self.k, s[0], d) for d in range(3)]
        S = [legendre_table(self.k, s[1], d) for d in range(3)]
        hx, hy = self.mesh.hx[i], self.mesh.hy[j]
        return (
            float((2.0 / hx) ** 2 * T[2] @ c @ S[0]),
            float(4.0 / (hx * hy) * T[1] @ c @ S[1]),
            float((2.0 / hy) ** 2 * T[0] @ c @ S[2]),
        )

    def values_at(self, sx, sy, dx: int = 0, dy: int = 0) -> np.ndarray:
        """Tensor evaluation on every cell: shape (nx, ny, len(sx), len(sy)).

        Includes the (2/h)^d chain-rule factors.
        """
        Tx = legendre_table(self.k, np.atleast_1d(sx), dx).T
        Ty = legendre_table(self.k, np.atleast_1d(sy), dy).T
        out = np.einsum("am,ijmn,bn->ijab", Tx, self.coeffs, Ty, optimize=True)
        if dx:
            out *= ((2.0 / self.mesh.hx) ** dx)[:, None, None, None]
        if dy:
            out *= ((2.0 / self.mesh.hy) ** dy)[None, :, None, None]
        return out

    def l2_norm(self) -> float:
        k = np.arange(self.k + 1)
        w = np.outer(1.0 / (2 * k + 1), 1.0 / (2 * k + 1))
        cell = np.einsum("ijmn,mn->ij", self.coeffs**2, w) * np.outer(self.mesh.hx, self.mesh.hy)
        return float(np.sqrt(cell.sum()))

    def cell_l2_norm(self, i: int, j: int) -> float:
        k = np.arange(self.k + 1)
        w = np.outer(self.mesh.hx[i] / (2 * k + 1), self.mesh.hy[j] / (2 * k + 1))
        return float(np.sqrt(np.sum(self.coeffs[i, j] ** 2 * w)))

    def total_mass(self) -> float:
        """Integral of u_h over the domain (only the c_00 mode contributes)."""
        return float(np.sum(self.coeffs[:, :, 0, 0] * np.outer(self.mesh.hx, self.mesh.hy)))


# --- traces -----------------------------------------------------------------

def trace(field: DGField, cell, face: str, side: str, s_along):
    """One-sided limits at the edge ``face`` of ``cell``.

    ``face`` is one of 'E', 'W', 'N', 'S'; ``side`` is 'interior' or
    'exterior' (the periodic neighbour across that face). Returns
    (value, normal first derivative, normal second derivative) where the
    normal is the x-direction for E/W faces and y for N/S faces.
    """
    i, j = cell
    field._check_cell(i, j)
    nx, ny = field.mesh.nx, field.mesh.ny
    faces = {"E": (1, 0), "W": (-1, 0), "N": (0, 1), "S": (0, -1)}
    if face not in faces:
        raise ValueError(f"unknown face {face!r}")
    if side not in ("interior", "exterior"):
        raise ValueError(f"unknown side {side!r}")
    di, dj = faces[face]
    if side == "exterior":
        i, j = (i + di) % nx, (j + dj) % ny
        di, dj = -di, -dj
    if di:
        s = (float(di), s_along)
        return field.eval((i, j), s), field.eval_grad((i, j), s)[0], field.eval_second_derivs((i, j), s)[0]
    s = (s_along, float(dj))
    return field.eval((i, j), s), field.eval_grad((i, j), s)[1], field.eval_second_derivs((i, j), s)[2]


def edge_traces(field: DGField, s_along, direction: str):
    """Vectorised traces at every edge normal to ``direction``.

    For direction 'x' the edges are x = x_{i+1/2}; tau_1 is cell i (left) and
    tau_2 is cell i+1 (right). Returns dict of arrays shaped (nx, ny, q) with
    keys 'minus', 'plus' each holding (value, d_n, d_nn).
    """
    k, c = field.k, field.coeffs
    s_along = np.atleast_1d(s_along)
    ends = [legendre_table(k, np.array([-1.0, 1.0]), d).T for d in range(3)]  # (2, k+1)
    A = legendre_table(k, s_along).T  # (q, k+1)
    if direction == "x":
        h = field.mesh.hx
        right = field.mesh.mx.right
        minus = [np.einsum("m,ijmn,bn->ijb", ends[d][1], c, A) * ((2.0 / h) ** d)[:, None, None] for d in range(3)]
        plus = [np.einsum("m,ijmn,bn->ijb", ends[d][0], c, A) * ((2.0 / h) ** d)[:, None, None] for d in range(3)]
        plus = [p[right] for p in plus]
    elif direction == "y":
        h = field.mesh.hy
        up = field.mesh.my.right
        minus = [np.einsum("n,ijmn,am->ija", ends[d][1], c, A) * ((2.0 / h) ** d)[None, :, None] for d in range(3)]
        plus = [np.einsum("n,ijmn,am->ija", ends[d][0], c, A) * ((2.0 / h) ** d)[None, :, None] for d in range(3)]
        plus = [p[:, up] for p in plus]
    else:
        raise ValueError("direction must be 'x' or 'y'")
    return {"minus": minus, "plus": plus}


def jumps(field: DGField, s_along, direction: str) -> np.ndarray:
    """[u] = u_2 - u_1 at every edge normal to ``direction``; shape (nx, ny, q)."""
    tr = edge_traces(field, s_along, direction)
    return tr["plus"][0] - tr["minus"][0]


# --- projection ---------------------------------------------------------------

def l2_project(f, t: float, mesh: Mesh2D, k: int, q: int | None = None) -> DGField:
    """Cellwise L2 projection; ``f`` is an AnalyticField or a callable f(x, y, t)."""
    basis = Basis1D(k, q)
    X = mesh.mx.points(basis.nodes)[:, None, :, None]
    Y = mesh.my.points(basis.nodes)[None, :, None, :]
    F = np.broadcast_to(f(X, Y, t), (mesh.nx, mesh.ny, basis.qv, basis.qv))
    W = basis.weights
    m = np.arange(k + 1)
    scale = np.outer(2 * m + 1, 2 * m + 1) / 4.0
    c = np.einsum("ijab,a,b,am,bn->ijmn", F, W, W, basis.V, basis.V, optimize=True) * scale
    return DGField(mesh, k, c, t)


# --- snapshot I/O -------------------------------------------------------------

def save_snapshot(field: DGField, path, fmt: str | None = None) -> None:
    """Write coefficients with an (Nx, Ny, k, t) header.

    ``fmt`` is 'csv' or 'npy'-style binary ('bin'); inferred from the suffix.
    Layout is cell-major (i, then j), then (m, n) row-major.
    """
    path = str(path)
    fmt = fmt or ("csv" if path.endswith(".csv") else "bin")
    m = field.mesh
    if fmt == "csv":
        with open(path, "w") as fh:
            fh.write(f"# Nx={m.nx},Ny={m.ny},k={field.k},t={field.t!r}\n")
            fh.write("i,j,m,n,c\n")
            for (i, j, a, b), v in np.ndenumerate(field.coeffs):
                fh.write(f"{i},{j},{a},{b},{float(v)!r}\n")
    elif fmt == "bin":
        header = np.array([m.nx, m.ny, field.k, field.t], dtype="<f8")
        with open(path, "wb") as fh:
            fh.write(b"DDG2D\x00\x01\x00")
            fh.write(header.tobytes())
            fh.write(np.ascontiguousarray(field.coeffs, dtype="<f8").tobytes())
    else:
        raise ValueError(f"unknown snapshot format {fmt!r}")


def load_snapshot(path, mesh: Mesh2D | None = None) -> DGField:
    path = str(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw.startswith(b"DDG2D"):
        nx, ny, k, t = np.frombuffer(raw[8:40], dtype="<f8")
        nx, ny, k = int(nx), int(ny), int(k)
        c = np.frombuffer(raw[40:], dtype="<f8").reshape(nx, ny, k + 1, k + 1).copy()
    else:
        text = raw.decode()
        head = text.splitlines()[0].lstrip("# ")
        meta = dict(kv.split("=") for kv in head.split(","))
        nx, ny, k, t = int(meta["Nx"]), int(meta["Ny"]), int(meta["k"]), float(meta["t"])
        data = np.loadtxt(io.StringIO(text), delimiter=",", comments="#", skiprows=2)
        c = np.zeros((nx, ny, k + 1, k + 1))
        idx = data[:, :4].astype(int)
        c[idx[:, 0], idx[:, 1], idx[:, 2], idx[:, 3]] = data[:, 4]
    if mesh is None:
        mesh = build_mesh(nx, ny)
    elif (mesh.nx, mesh.ny) != (nx, ny):
        raise ValueError("snapshot does not match mesh")
    return DGField(mesh, k, c, float(t))


__all__ = [
    "Mesh1D", "Mesh2D", "build_mesh", "uniform_1d", "AnalyticField", "DecayingSine",
    "CallableField", "DGField", "trace", "edge_traces", "jumps", "l2_project",
    "save_snapshot", "load_snapshot", "gauss_rule", "TWO_PI",
]
