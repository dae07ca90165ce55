"""Manufactured test problems with exact solution u = exp(-2t) sin(x + y)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .flux import Burgers, ScalarFlux, Sine, Zero
from .mesh import AnalyticField, DecayingSine


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    f1: ScalarFlux
    f2: ScalarFlux
    exact: AnalyticField
    source: Callable


def _burgers_source(x, y, t):
    # u (u_x + u_y) with u = e^{-2t} sin(x+y)
    return np.exp(-4.0 * t) * np.sin(2.0 * (np.asarray(x) + np.asarray(y)))


def _sine_source(x, y, t):
    # cos(u) (u_x + u_y)
    s = np.asarray(x) + np.asarray(y)
    a = np.exp(-2.0 * t)
    return 2.0 * a * np.cos(s) * np.cos(a * np.sin(s))


def _no_source(x, y, t):
    return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y)))


PROBLEMS = {
    "burgers2d": lambda: ProblemSpec("burgers2d", Burgers(), Burgers(), DecayingSine(), _burgers_source),
    "sinflux2d": lambda: ProblemSpec("sinflux2d", Sine(), Sine(), DecayingSine(), _sine_source),
    # pure diffusion: the exact solution needs no source
    "heat": lambda: ProblemSpec("heat", Zero(), Zero(), DecayingSine(), _no_source),
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


def manufacture_source(problem) -> Callable:
    """Closed-form g for a problem name or ProblemSpec."""
    if isinstance(problem, str):
        problem = get_problem(problem)
    return problem.source


def pde_residual(problem: ProblemSpec, x, y, t):
    """u_t + f1(u)_x + f2(u)_y - Laplace(u) - g at the given points."""
    u = problem.exact
    val = u(x, y, t)
    div = problem.f1.df(val) * u.deriv(1, 0, 0)(x, y, t) + problem.f2.df(val) * u.deriv(0, 1, 0)(x, y, t)
    lap = u.deriv(2, 0, 0)(x, y, t) + u.deriv(0, 2, 0)(x, y, t)
    return u.deriv(0, 0, 1)(x, y, t) + div - lap - problem.source(x, y, t)
