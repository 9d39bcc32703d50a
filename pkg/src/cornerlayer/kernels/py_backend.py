"""NumPy implementations of the numerical kernels.

These are the fallback used when the compiled extension is missing and
the reference the extension is tested against.  Same algorithms in both:

* erfc via the all-positive power series for |z| <= 1.3 and a Lentz
  continued fraction for z > 1.3, with erfc(-z) = 2 - erfc(z) for z < 0.
  The 1 - erf subtraction caps the series accuracy at roughly
  ulp/erfc(z), so the crossover sits where both branches stay below
  1e-14 relative.  Accuracy holds while results are normal doubles
  (roughly z <= 26.5); beyond that values degrade gracefully into
  denormals and flush to 0 once exp(-z^2) underflows.
* a postfix stack machine for coefficient programs (see expr.Program),
* the Thomas algorithm with a positivity check on every pivot.
"""

from __future__ import annotations

import math

import numpy as np

from ..expr import (
    EvalError,
    OP_ADD,
    OP_CONST,
    OP_COS,
    OP_DIV,
    OP_EXP,
    OP_LN,
    OP_MUL,
    OP_NEG,
    OP_POW,
    OP_SIN,
    OP_SQRT,
    OP_SUB,
    OP_VAR_T,
    OP_VAR_X,
)

_SQRT_PI = math.sqrt(math.pi)
_SERIES_CUT = 1.3
_TAIL = 1e-17
_MAX_SERIES = 200
_MAX_CF = 400

# The compiled extension, when present, provides the same API.
march_programs = None
bilinear_max_diff = None


class PivotError(ArithmeticError):
    """Nonpositive pivot met during tridiagonal elimination."""

    def __init__(self, index: int):
        super().__init__(f"nonpositive pivot at row {index}")
        self.index = index


def erfc(z: float) -> float:
    """Complementary error function, double precision."""
    z = float(z)
    if z != z:  # NaN
        return z
    if z < 0.0:
        return 2.0 - erfc(-z)
    if z <= _SERIES_CUT:
        return _erfc_series(z)
    return _erfc_cf(z)


def _erfc_series(z: float) -> float:
    # erf(z) = 2/sqrt(pi) * z * exp(-z^2) * sum (2 z^2)^n / (2n+1)!!
    # All terms positive: no cancellation inside the sum.
    z2 = 2.0 * z * z
    term = 1.0
    s = 1.0
    for n in range(1, _MAX_SERIES):
        term *= z2 / (2 * n + 1)
        s += term
        if term <= _TAIL * s:
            break
    return 1.0 - (2.0 / _SQRT_PI) * z * math.exp(-z * z) * s


def _erfc_cf(z: float) -> float:
    # erfc(z) = exp(-z^2)/sqrt(pi) / K,
    # K = z + (1/2)/(z + 1/(z + (3/2)/(z + 2/(z + ...))))
    # evaluated with the modified Lentz scheme.
    tiny = 1e-300
    f = z
    c = f
    d = 0.0
    for n in range(1, _MAX_CF):
        a = 0.5 * n
        d = z + a * d
        if d == 0.0:
            d = tiny
        c = z + a / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < _TAIL:
            break
    return math.exp(-z * z) / (_SQRT_PI * f)


def erfc_vec(z) -> np.ndarray:
    """Elementwise erfc on a float64 array."""
    z = np.asarray(z, dtype=np.float64)
    az = np.abs(z)
    out = np.empty_like(az)
    small = az <= _SERIES_CUT
    if np.any(small):
        out[small] = _erfc_series_vec(az[small])
    large = ~small
    if np.any(large):
        out[large] = _erfc_cf_vec(az[large])
    neg = z < 0.0
    if np.any(neg):
        out[neg] = 2.0 - out[neg]
    return out


def _erfc_series_vec(z: np.ndarray) -> np.ndarray:
    # Per-element freeze keeps the sums identical to the scalar loop.
    z2 = 2.0 * z * z
    term = np.ones_like(z)
    s = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    for n in range(1, _MAX_SERIES):
        term *= z2 / (2 * n + 1)
        s += np.where(active, term, 0.0)
        active &= term > _TAIL * s
        if not active.any():
            break
    return 1.0 - (2.0 / _SQRT_PI) * z * np.exp(-z * z) * s


def _erfc_cf_vec(z: np.ndarray) -> np.ndarray:
    tiny = 1e-300
    f = z.copy()
    c = z.copy()
    d = np.zeros_like(z)
    active = np.ones(z.shape, dtype=bool)
    for n in range(1, _MAX_CF):
        a = 0.5 * n
        d = z + a * d
        d[d == 0.0] = tiny
        c = z + a / c
        c[c == 0.0] = tiny
        d = 1.0 / d
        delta = c * d
        f *= np.where(active, delta, 1.0)
        active &= np.abs(delta - 1.0) >= _TAIL
        if not active.any():
            break
    return np.exp(-z * z) / (_SQRT_PI * f)


def eval_program(ops, args, x, t):
    """Run a coefficient program; ``x`` and ``t`` are scalars or arrays."""
    stack = []
    for op, a in zip(ops, args):
        if op == OP_CONST:
            stack.append(a)
        elif op == OP_VAR_X:
            stack.append(x)
        elif op == OP_VAR_T:
            stack.append(t)
        elif op == OP_ADD:
            rhs = stack.pop()
            stack[-1] = stack[-1] + rhs
        elif op == OP_SUB:
            rhs = stack.pop()
            stack[-1] = stack[-1] - rhs
        elif op == OP_MUL:
            rhs = stack.pop()
            stack[-1] = stack[-1] * rhs
        elif op == OP_DIV:
            rhs = stack.pop()
            if np.any(np.asarray(rhs) == 0.0):
                raise EvalError("division by zero")
            stack[-1] = stack[-1] / rhs
        elif op == OP_NEG:
            stack[-1] = -stack[-1]
        elif op == OP_POW:
            if a < 0 and np.any(np.asarray(stack[-1]) == 0.0):
                raise EvalError("zero raised to a negative power")
            stack[-1] = np.power(stack[-1], a)
        elif op == OP_EXP:
            stack[-1] = np.exp(stack[-1])
        elif op == OP_SIN:
            stack[-1] = np.sin(stack[-1])
        elif op == OP_COS:
            stack[-1] = np.cos(stack[-1])
        elif op == OP_SQRT:
            if np.any(np.asarray(stack[-1]) < 0.0):
                raise EvalError("sqrt of a negative value")
            stack[-1] = np.sqrt(stack[-1])
        elif op == OP_LN:
            if np.any(np.asarray(stack[-1]) <= 0.0):
                raise EvalError("ln of a nonpositive value")
            stack[-1] = np.log(stack[-1])
    res = stack[-1]
    shape = np.broadcast_shapes(np.shape(x), np.shape(t))
    if np.shape(res) != shape:
        res = np.broadcast_to(np.asarray(res, dtype=float), shape)
    return res


def thomas(sub, diag, sup, rhs) -> np.ndarray:
    """Solve a tridiagonal system by forward elimination.

    ``sub``/``sup`` hold the off-diagonal entry of each row (sub[0] and
    sup[-1] are ignored).  Raises :class:`PivotError` if any pivot is
    nonpositive, which cannot happen for a well-assembled M-matrix.
    """
    diag = np.asarray(diag, dtype=float)
    sub = np.asarray(sub, dtype=float)
    sup = np.asarray(sup, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = diag.shape[0]
    piv = np.empty(n)
    y = np.empty(n)
    p = diag[0]
    if not p > 0.0:
        raise PivotError(0)
    piv[0] = p
    y[0] = rhs[0]
    for i in range(1, n):
        m = sub[i] / piv[i - 1]
        p = diag[i] - m * sup[i - 1]
        if not p > 0.0:
            raise PivotError(i)
        piv[i] = p
        y[i] = rhs[i] - m * y[i - 1]
    x = np.empty(n)
    x[n - 1] = y[n - 1] / piv[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = (y[i] - sup[i] * x[i + 1]) / piv[i]
    return x
