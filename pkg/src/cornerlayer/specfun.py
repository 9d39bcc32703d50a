"""erfc and the corner-singularity family z_n(x, t).

The solution of the incompatible-data problem is split as
u = A0*z0 + y, where

    z0(x, t) = exp(-b00*t/eps) * erfc(x / (2*sqrt(t)))

solves the constant-coefficient equation eps*(z_t - z_xx) + b00*z = 0 on
the quarter plane with z(x, 0) = 0 for x > 0 and z(0, t) =
exp(-b00*t/eps).  The higher members obey

    z_n(x, t) = n * int_0^t z_{n-1}(x, s) exp(-b00*(t-s)/eps) ds

with boundary trace z_n(0, t) = t^n exp(-b00*t/eps), and carry the
higher-order corner corrections.  z1 has the closed form implemented in
:func:`z1_closed`, validated against the recurrence quadrature.

Everything here is a pure function of its value arguments; safe to call
concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

__all__ = [
    "SingularParams",
    "DomainError",
    "erfc",
    "erfc_vec",
    "z0",
    "z0_row",
    "z0_grid",
    "z0_derivatives",
    "z1_closed",
    "zn_quadrature",
    "exp_decay",
]

_SQRT_PI = math.sqrt(math.pi)
# exp(x) for x below this underflows even as a denormal; flush to 0.
_EXP_FLUSH = -745.0


class DomainError(ValueError):
    """Argument outside the quarter-plane domain of the z_n family."""


@dataclass(frozen=True)
class SingularParams:
    """Perturbation parameter and corner reaction coefficient b(0,0)."""

    eps: float
    b00: float

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")
        if not self.b00 > 0.0:
            raise ValueError("b00 must be positive")


def erfc(z: float) -> float:
    """Complementary error function (backend-selected kernel)."""
    return kernels.erfc(z)


def erfc_vec(z) -> np.ndarray:
    return kernels.erfc_vec(z)


def exp_decay(t: float, p: SingularParams) -> float:
    """exp(-b00*t/eps) with the exponent flushed to 0 on deep underflow."""
    ex = -p.b00 * t / p.eps
    if ex < _EXP_FLUSH:
        return 0.0
    return math.exp(ex)


def z0(x: float, t: float, p: SingularParams) -> float:
    """The singular function absorbing the corner jump.

    Conventions at the domain edges: z0(x, 0) = 0 for x > 0 and
    z0(0, 0) = 1, the limit along the boundary trace x = 0.  Grid
    corners need a stored value and this choice makes the transformed
    boundary data continuous.
    """
    if x < 0.0 or t < 0.0:
        raise DomainError(f"z0 needs x >= 0 and t >= 0, got ({x}, {t})")
    if t == 0.0:
        return 1.0 if x == 0.0 else 0.0
    decay = exp_decay(t, p)
    if decay == 0.0:
        return 0.0
    return decay * kernels.erfc(x / (2.0 * math.sqrt(t)))


def z0_row(x, t: float, p: SingularParams) -> np.ndarray:
    """z0 along an array of x at one time level t > 0."""
    x = np.asarray(x, dtype=float)
    if t == 0.0:
        out = np.zeros_like(x)
        out[x == 0.0] = 1.0
        return out
    decay = exp_decay(t, p)
    if decay == 0.0:
        return np.zeros_like(x)
    return decay * kernels.erfc_vec(x / (2.0 * math.sqrt(t)))


def z0_grid(xs, ts, p: SingularParams) -> np.ndarray:
    """z0 on a tensor grid, shaped (len(xs), len(ts))."""
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    out = np.empty((xs.size, ts.size))
    for j, t in enumerate(ts):
        out[:, j] = z0_row(xs, float(t), p)
    return out


@dataclass(frozen=True)
class Z0Derivatives:
    dx: float
    dxx: float
    dxxx: float
    dxxxx: float
    dt: float


def z0_derivatives(x: float, t: float, p: SingularParams) -> Z0Derivatives:
    """Closed-form x-derivatives of z0 up to order four, and dt.

    dt comes from the defining equation, z_t = z_xx - (b00/eps) z0, so
    eps*(dt - dxx) + b00*z0 vanishes identically.
    """
    if t <= 0.0:
        raise DomainError(f"z0 derivatives need t > 0, got t = {t}")
    if x < 0.0:
        raise DomainError(f"z0 derivatives need x >= 0, got x = {x}")
    ex = -x * x / (4.0 * t) - p.b00 * t / p.eps
    pref = math.exp(ex) if ex >= _EXP_FLUSH else 0.0
    sq = math.sqrt(math.pi * t)
    dx = -pref / sq
    dxx = x * pref / (2.0 * t * sq)
    dxxx = (1.0 - x * x / (2.0 * t)) * pref / (2.0 * t * sq)
    dxxxx = -x * (3.0 - x * x / (2.0 * t)) * pref / (4.0 * t * t * sq)
    val = z0(x, t, p)
    dt = dxx - (p.b00 / p.eps) * val
    return Z0Derivatives(dx, dxx, dxxx, dxxxx, dt)


def z1_closed(x: float, t: float, p: SingularParams) -> float:
    """Closed form of z1:

        exp(-b00*t/eps) * [ (t + x^2/2)*erfc(eta) - (x*sqrt(t)/sqrt(pi))*exp(-eta^2) ]

    with eta = x/(2*sqrt(t)); zero at t = 0.  Cross-checked against
    :func:`zn_quadrature` applied to the defining recurrence.
    """
    if x < 0.0 or t < 0.0:
        raise DomainError(f"z1 needs x >= 0 and t >= 0, got ({x}, {t})")
    if t == 0.0:
        return 0.0
    decay = exp_decay(t, p)
    if decay == 0.0:
        return 0.0
    eta = x / (2.0 * math.sqrt(t))
    first = (t + 0.5 * x * x) * kernels.erfc(eta)
    ee = math.exp(-eta * eta) if -eta * eta >= _EXP_FLUSH else 0.0
    second = x * math.sqrt(t) / _SQRT_PI * ee
    return decay * (first - second)


_GL_ORDER = 8
_gl_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _gl_cache:
        _gl_cache[order] = np.polynomial.legendre.leggauss(order)
    return _gl_cache[order]


def _composite_nodes(a: float, b: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights on [a, b]."""
    xg, wg = _gl_nodes(_GL_ORDER)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    s = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    return s, w


def _decay_vec(dt, p: SingularParams) -> np.ndarray:
    ex = -p.b00 * np.asarray(dt, dtype=float) / p.eps
    return np.where(ex < _EXP_FLUSH, 0.0, np.exp(np.maximum(ex, _EXP_FLUSH)))


def zn_quadrature(n: int, x: float, t: float, p: SingularParams, panels: int = 1024) -> float:
    """Evaluate z_n (n in {1, 2}) from the recurrence by quadrature.

    Composite Gauss-Legendre on (0, t), applied once for n=1 and nested
    for n=2 (the inner integral reuses the same panel count, so n=2
    costs panels^2 evaluations; it exists as an oracle, not a hot path).
    Absolute error <= 1e-10 at panels=1024 for eps >= 1e-4.
    """
    if n not in (1, 2):
        raise DomainError(f"recurrence quadrature supports n in {{1, 2}}, got {n}")
    if panels < 64:
        raise ValueError("panels must be >= 64")
    if x < 0.0 or t < 0.0:
        raise DomainError(f"z_n needs x >= 0 and t >= 0, got ({x}, {t})")
    if t == 0.0:
        return 0.0
    s, w = _composite_nodes(0.0, t, panels)
    if n == 1:
        inner = z0_vec_times(x, s, p)
    else:
        inner = np.array([zn_quadrature(1, x, float(si), p, panels) for si in s])
    return float(n) * float(np.dot(w, inner * _decay_vec(t - s, p)))


def z0_vec_times(x: float, s: np.ndarray, p: SingularParams) -> np.ndarray:
    """z0(x, s_i) for an array of times s_i > 0."""
    eta = x / (2.0 * np.sqrt(s))
    return kernels.erfc_vec(eta) * _decay_vec(s, p)
