"""Convergence studies: initial data, time integration, error tables."""
from __future__ import annotations

import csv
import io
import logging
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from . import projections
from .correction import corrected_projection
from .errors import ERROR_COLUMNS, ErrorSample, rates, sample_errors
from .flux import FluxParams, gamma_of_beta1
from .mesh import DGField, build_mesh, l2_project
from .operator import OperatorContext
from .problems import get_problem
from .timestep import TimeConfig, default_cfl, integrate

logger = logging.getLogger(__name__)

CSV_HEADER = "N,e_l,rate_l,e_n,rate_n,e_gx,rate_gx,e_gy,rate_gy,l2,rate_l2"


@dataclass
class RunConfig:
    k: int = 2
    n_list: tuple = (4, 8, 16, 32)
    beta0: float = 12.0
    beta1: float | str = "auto"
    cfl: float | None = None
    t_final: float = 1.0
    init: str = "corrected"       # l2 | pih | corrected[:p]
    problem: str = "burgers2d"
    verify: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        self.n_list = tuple(int(n) for n in self.n_list)
        for a, b in zip(self.n_list, self.n_list[1:]):
            if b != 2 * a:
                raise ValueError(f"N list must double strictly, got {self.n_list}")
        get_problem(self.problem)
        self.init_mode()

    @property
    def beta1_value(self) -> float:
        if self.beta1 == "auto":
            return 1.0 / (2 * self.k * (self.k + 1))
        return float(self.beta1)

    @property
    def cfl_value(self) -> float:
        return default_cfl(self.k) if self.cfl is None else float(self.cfl)

    @property
    def params(self) -> FluxParams:
        return FluxParams(self.beta0, self.beta1_value, k=self.k)

    def init_mode(self) -> tuple[str, int]:
        """('l2' | 'pih' | 'corrected', p); bare 'corrected' uses p = min(1, k-1)."""
        name, _, p = self.init.partition(":")
        if name in ("l2", "pih"):
            if p:
                raise ValueError(f"init {name!r} takes no order")
            return name, 0
        if name == "corrected":
            p = min(1, self.k - 1) if p == "" else int(p)
            if not 0 <= p <= self.k - 1:
                raise ValueError(f"corrected:p needs 0 <= p <= k-1, got p={p}")
            return name, p
        raise ValueError(f"unknown init mode {self.init!r}")

    def label(self) -> str:
        name, p = self.init_mode()
        return f"corrected:{p}" if name == "corrected" else name


def initial_field(cfg: RunConfig, mesh, t: float = 0.0) -> DGField:
    prob = get_problem(cfg.problem)
    name, p = cfg.init_mode()
    if name == "l2":
        return l2_project(prob.exact, t, mesh, cfg.k)
    if name == "pih":
        return projections.project_Pi_h(prob.exact, t, mesh, cfg.k, cfg.params)
    return corrected_projection(prob.exact, t, p, mesh, cfg.k, cfg.params, prob.f1, prob.f2)


def solve(cfg: RunConfig, n: int):
    """Run one mesh level; returns (u_h at t_final, step count)."""
    prob = get_problem(cfg.problem)
    mesh = build_mesh(n, n)
    ctx = OperatorContext(mesh, cfg.k, cfg.params, prob.f1, prob.f2, prob.source)
    u0 = initial_field(cfg, mesh)
    uh, steps, _ = integrate(u0, TimeConfig(cfg.t_final, cfg.cfl_value), ctx)
    return uh, steps


def run_case(cfg: RunConfig, n: int) -> ErrorSample:
    old = projections.VERIFY
    projections.VERIFY = cfg.verify
    try:
        t0 = time.perf_counter()
        uh, steps = solve(cfg, n)
    except Exception as exc:
        raise RuntimeError(f"run failed for N={n}, {cfg}") from exc
    finally:
        projections.VERIFY = old
    logger.info("k=%d N=%d: %d steps in %.1fs", cfg.k, n, steps, time.perf_counter() - t0)
    prob = get_problem(cfg.problem)
    return sample_errors(uh, prob.exact, cfg.t_final, beta0=cfg.beta0, beta1=cfg.beta1_value,
                         init=cfg.label(), cfl=cfg.cfl_value)


@dataclass
class ConvergenceReport:
    cfg: RunConfig
    samples: list
    rates: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.samples) < 2:
            raise ValueError("rates require at least two mesh levels")
        self.rates = rates(self.samples)

    def finest_rates(self) -> dict:
        return self.rates[-1]

    def metadata(self) -> dict:
        c = self.cfg
        return {
            "problem": c.problem, "k": c.k, "beta0": c.beta0, "beta1": c.beta1_value,
            "gamma": gamma_of_beta1(c.k, c.beta1_value), "cfl": c.cfl_value,
            "t_final": c.t_final, "init": c.label(), "commit": _commit_hash(),
        }

    def to_csv(self, precise: bool = False) -> str:
        buf = io.StringIO()
        for key, val in self.metadata().items():
            buf.write(f"# {key}={val}\n")
        buf.write(CSV_HEADER + "\n")
        w = csv.writer(buf, lineterminator="\n")
        for s, r in zip(self.samples, self.rates):
            row = [s.N]
            for col in ERROR_COLUMNS:
                row.append(repr(getattr(s, col)) if precise else f"{getattr(s, col):.2e}")
                rv = r[col]
                row.append("" if rv is None else (repr(rv) if precise else f"{rv:.1f}"))
            w.writerow(row)
        return buf.getvalue()

    def to_text(self) -> str:
        heads = ["N"]
        for col in ERROR_COLUMNS:
            heads += [col, "rate"]
        lines = [" ".join(f"{h:>9}" for h in heads)]
        for s, r in zip(self.samples, self.rates):
            cells = [f"{s.N:>9d}"]
            for col in ERROR_COLUMNS:
                cells.append(f"{getattr(s, col):9.2e}")
                cells.append(f"{'-':>9}" if r[col] is None else f"{r[col]:9.2f}")
            lines.append(" ".join(cells))
        meta = ", ".join(f"{k}={v}" for k, v in self.metadata().items())
        return meta + "\n" + "\n".join(lines) + "\n"


def _commit_hash() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True,
                             timeout=5, cwd=__file__.rsplit("/", 1)[0])
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _run_one(args):
    cfg, n = args
    return run_case(cfg, n)


def run_convergence(cfg: RunConfig, workers: int = 1) -> ConvergenceReport:
    if len(cfg.n_list) < 2:
        raise ValueError("rates require at least two mesh levels")
    jobs = [(cfg, n) for n in cfg.n_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(_run_one, jobs))
    else:
        samples = [_run_one(j) for j in jobs]
    return ConvergenceReport(cfg, samples)


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **kw)
