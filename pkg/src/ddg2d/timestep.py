"""Classical RK4 integration of the semi-discrete DDG system with tau = cfl h^2."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import DGField
from .operator import OperatorContext, residual

logger = logging.getLogger(__name__)

# Largest stable cfl from power iteration on the linear part (beta0 = 12,
# auto beta1, RK4 real-axis limit 2.78): about 0.0105 / 0.0058 / 0.0043 /
# 0.0037 for k = 1..4. Defaults sit near 80% of that.
DEFAULT_CFL = {1: 0.008, 2: 0.0045, 3: 0.0035, 4: 0.003}


def default_cfl(k: int) -> float:
    return DEFAULT_CFL.get(k, 0.003 * (4.0 / k) ** 2)


class BlowUpError(FloatingPointError):
    pass


@dataclass
class TimeConfig:
    t_final: float
    cfl: float = DEFAULT_CFL[2]
    max_steps: int = 10_000_000
    log_every: int = 0

    def __post_init__(self):
        if self.t_final < 0:
            raise ValueError("t_final must be >= 0")
        if self.cfl <= 0:
            raise ValueError("cfl must be positive")

    def dt(self, hmin: float) -> float:
        return min(self.cfl * hmin**2, self.t_final) if self.t_final > 0 else 0.0

    def n_steps(self, hmin: float) -> int:
        if self.t_final == 0:
            return 0
        return math.ceil(self.t_final / self.dt(hmin) - 1e-12)


@dataclass
class Diagnostics:
    steps: int = 0
    dt: float = 0.0
    mass: list = field(default_factory=list)
    max_coeff: list = field(default_factory=list)


def rk4_step(u: DGField, t: float, dt: float, ctx: OperatorContext, step: int | None = None) -> DGField:
    if dt <= 0:
        raise ValueError("dt must be positive")
    c = u.coeffs
    k1 = residual(u, t, ctx).coeffs
    k2 = residual(u.with_coeffs(c + 0.5 * dt * k1), t + 0.5 * dt, ctx).coeffs
    k3 = residual(u.with_coeffs(c + 0.5 * dt * k2), t + 0.5 * dt, ctx).coeffs
    k4 = residual(u.with_coeffs(c + dt * k3), t + dt, ctx).coeffs
    new = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(new)):
        where = "" if step is None else f" at step {step}"
        raise BlowUpError(f"non-finite values{where} (t={t:.6g}, dt={dt:.3g})")
    return u.with_coeffs(new, t + dt)


def integrate(u0: DGField, cfg: TimeConfig, ctx: OperatorContext):
    """Advance u0 from u0.t to u0.t + cfg.t_final. Returns (u, steps, diagnostics)."""
    diag = Diagnostics()
    u = u0.copy()
    t0 = u0.t
    diag.mass.append(u.total_mass())
    diag.max_coeff.append(float(np.abs(u.coeffs).max()))
    if cfg.t_final == 0:
        return u, 0, diag
    n = cfg.n_steps(u0.mesh.hmin)
    if n > cfg.max_steps:
        raise RuntimeError(f"{n} steps exceed max_steps={cfg.max_steps}")
    dt = cfg.dt(u0.mesh.hmin)
    diag.dt = dt
    t_end = t0 + cfg.t_final
    for step in range(n):
        t = t0 + step * dt
        h = t_end - t if step == n - 1 else dt      # clamp the last step
        u = rk4_step(u, t, h, ctx, step)
        diag.mass.append(u.total_mass())
        diag.max_coeff.append(float(np.abs(u.coeffs).max()))
        if cfg.log_every and (step + 1) % cfg.log_every == 0:
            logger.info("step %d t=%.6f mass=%.3e max|c|=%.3e", step + 1, t + h, diag.mass[-1], diag.max_coeff[-1])
    u.t = t_end
    diag.steps = n
    return u, n, diag


def spectral_radius(ctx: OperatorContext, iters: int = 200, seed: int = 0) -> float:
    """Power-iteration estimate of the largest |eigenvalue| of the linear part (f = 0)."""
    from .flux import Zero

    lin = OperatorContext(ctx.mesh, ctx.k, ctx.params, Zero(), Zero(), None, ctx.qv)
    rng = np.random.default_rng(seed)
    v = DGField(ctx.mesh, ctx.k, rng.standard_normal((ctx.mesh.nx, ctx.mesh.ny, ctx.k + 1, ctx.k + 1)))
    lam = 0.0
    for _ in range(iters):
        w = residual(v, 0.0, lin, with_source=False)
        lam = np.linalg.norm(w.coeffs) / np.linalg.norm(v.coeffs)
        v = w.with_coeffs(w.coeffs / np.linalg.norm(w.coeffs))
    return float(lam)
