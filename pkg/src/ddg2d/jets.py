"""Truncated bivariate Taylor jets in (t, y).

A jet is an array J with J[a, b, ...] = d_t^a d_y^b q / (a! b!); trailing
axes are batch dimensions. Products and compositions are truncated to the
box a <= A, b <= B, which is closed under the Leibniz rule.
"""
from __future__ import annotations

from math import factorial

import numpy as np


def from_derivatives(D) -> np.ndarray:
    """Raw derivatives D[a, b] -> Taylor coefficients."""
    D = np.asarray(D, dtype=float)
    A, B = D.shape[:2]
    fa = np.array([factorial(a) for a in range(A)], dtype=float)
    fb = np.array([factorial(b) for b in range(B)], dtype=float)
    scale = 1.0 / np.outer(fa, fb)
    return D * scale.reshape(scale.shape + (1,) * (D.ndim - 2))


def to_derivatives(J) -> np.ndarray:
    J = np.asarray(J, dtype=float)
    A, B = J.shape[:2]
    scale = np.outer([factorial(a) for a in range(A)], [factorial(b) for b in range(B)]).astype(float)
    return J * scale.reshape(scale.shape + (1,) * (J.ndim - 2))


def truncate(J, A: int, B: int) -> np.ndarray:
    if A < 0 or B < 0 or A >= J.shape[0] or B >= J.shape[1]:
        raise ValueError(f"cannot truncate jet of order {J.shape[:2]} to ({A}, {B})")
    return J[: A + 1, : B + 1]


def constant(value, A: int, B: int) -> np.ndarray:
    value = np.asarray(value, dtype=float)
    J = np.zeros((A + 1, B + 1) + value.shape)
    J[0, 0] = value
    return J


def mul(P, Q) -> np.ndarray:
    """Truncated Cauchy product on the common box."""
    A = min(P.shape[0], Q.shape[0])
    B = min(P.shape[1], Q.shape[1])
    shape = (A, B) + np.broadcast_shapes(P.shape[2:], Q.shape[2:])
    out = np.zeros(shape)
    for a in range(A):
        for b in range(B):
            acc = out[a, b]
            for a1 in range(a + 1):
                for b1 in range(b + 1):
                    acc += P[a1, b1] * Q[a - a1, b - b1]
    return out


def div(P, Q) -> np.ndarray:
    """P / Q; Q[0, 0] must be nonzero wherever the result is used."""
    A = min(P.shape[0], Q.shape[0])
    B = min(P.shape[1], Q.shape[1])
    shape = (A, B) + np.broadcast_shapes(P.shape[2:], Q.shape[2:])
    R = np.zeros(shape)
    q0 = Q[0, 0]
    for a in range(A):
        for b in range(B):
            acc = P[a, b].copy()
            for a1 in range(a + 1):
                for b1 in range(b + 1):
                    if (a1, b1) != (0, 0):
                        acc = acc - Q[a1, b1] * R[a - a1, b - b1]
            R[a, b] = acc / q0
    return R


def compose(deriv, J) -> np.ndarray:
    """F(J) for a scalar function with ``deriv(n, x)`` giving F^(n)(x).

    Uses F(J) = sum_n F^(n)(J0) / n! (J - J0)^n, exact in the truncated box.
    """
    A, B = J.shape[:2]
    nmax = (A - 1) + (B - 1)
    J0 = J[0, 0]
    dJ = J.copy()
    dJ[0, 0] = 0.0
    out = constant(deriv(0, J0), A - 1, B - 1)
    power = constant(np.ones_like(J0), A - 1, B - 1)
    for n in range(1, nmax + 1):
        power = mul(power, dJ)
        out = out + (np.asarray(deriv(n, J0), dtype=float) / factorial(n)) * power
    return out


def d_t(J) -> np.ndarray:
    """Jet of d_t q, one order lower in t."""
    A = J.shape[0]
    if A < 2:
        raise ValueError("jet has no t-derivative information")
    a = np.arange(1, A).reshape((-1, 1) + (1,) * (J.ndim - 2))
    return a * J[1:]


def d_y(J, n: int = 1) -> np.ndarray:
    """Jet of d_y^n q, n orders lower in y."""
    B = J.shape[1]
    if B <= n:
        raise ValueError("jet has insufficient y-derivative information")
    b = np.arange(B - n)
    fac = np.ones(B - n)
    for r in range(1, n + 1):
        fac = fac * (b + r)
    return fac.reshape((1, -1) + (1,) * (J.ndim - 2)) * J[:, n:]
