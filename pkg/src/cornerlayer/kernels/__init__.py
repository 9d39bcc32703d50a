"""Numerical kernel backends.

The hot loops — erfc, coefficient-program evaluation, tridiagonal
solves, the implicit time march and the union-grid comparison — exist
twice: a Cython extension (``_ckern``) built at install time, and NumPy
fallbacks.  The compiled backend is selected automatically at import
when present; set ``CORNERLAYER_KERNELS=python`` (or ``compiled``) to
force one, or call :func:`set_backend` from code, as the benchmark
script does.

``march_programs`` and ``bilinear_max_diff`` are compiled-only fused
kernels; they are ``None`` under the python backend and the callers in
:mod:`cornerlayer.solver` / :mod:`cornerlayer.interp` fall back to their
vectorized NumPy paths.
"""

from __future__ import annotations

import os
import sys

import numpy as np

from . import py_backend
from .py_backend import PivotError

try:
    from . import _ckern
except ImportError:
    _ckern = None

__all__ = [
    "PivotError",
    "available_backends",
    "backend_name",
    "set_backend",
    "erfc",
    "erfc_vec",
    "eval_program",
    "thomas",
    "march_programs",
    "bilinear_max_diff",
]

_BACKEND = ""


def available_backends() -> tuple[str, ...]:
    return ("python",) if _ckern is None else ("compiled", "python")


def backend_name() -> str:
    return _BACKEND


def _compiled_thomas(sub, diag, sup, rhs):
    out = np.empty(len(diag), dtype=np.float64)
    bad = _ckern.thomas(
        np.ascontiguousarray(sub, dtype=np.float64),
        np.ascontiguousarray(diag, dtype=np.float64),
        np.ascontiguousarray(sup, dtype=np.float64),
        np.ascontiguousarray(rhs, dtype=np.float64),
        out,
    )
    if bad >= 0:
        raise PivotError(bad)
    return out


def _compiled_eval_program(ops, args, x, t):
    shape = np.broadcast_shapes(np.shape(x), np.shape(t))
    xb = np.ascontiguousarray(np.broadcast_to(np.asarray(x, dtype=np.float64), shape).ravel())
    tb = np.ascontiguousarray(np.broadcast_to(np.asarray(t, dtype=np.float64), shape).ravel())
    if xb.size == 0:
        return np.empty(shape, dtype=np.float64)
    out = np.empty(xb.size, dtype=np.float64)
    err = _ckern.eval_program(ops, args, xb, tb, out)
    if err:
        raise EvalErrorFromCode(err)
    return out.reshape(shape)


def EvalErrorFromCode(code: int):
    from ..expr import EvalError

    msgs = {
        1: "division by zero",
        2: "sqrt of a negative value",
        3: "ln of a nonpositive value",
        4: "zero raised to a negative power",
    }
    return EvalError(msgs.get(code, f"evaluation error {code}"))


def set_backend(name: str) -> None:
    """Bind the module-level kernel functions to one backend."""
    global _BACKEND, erfc, erfc_vec, eval_program, thomas
    global march_programs, bilinear_max_diff
    if name not in available_backends():
        raise ValueError(f"backend {name!r} not available (have {available_backends()})")
    if name == "compiled":
        erfc = _ckern.erfc
        erfc_vec = _ckern.erfc_vec
        eval_program = _compiled_eval_program
        thomas = _compiled_thomas
        march_programs = _ckern.march_programs
        bilinear_max_diff = _ckern.bilinear_max_diff
    else:
        erfc = py_backend.erfc
        erfc_vec = py_backend.erfc_vec
        eval_program = py_backend.eval_program
        thomas = py_backend.thomas
        march_programs = None
        bilinear_max_diff = None
    _BACKEND = name


_forced = os.environ.get("CORNERLAYER_KERNELS", "").strip().lower()
if _forced:
    if _forced not in ("python", "compiled"):
        print(
            f"cornerlayer: ignoring CORNERLAYER_KERNELS={_forced!r} (want python|compiled)",
            file=sys.stderr,
        )
        _forced = ""
    elif _forced == "compiled" and _ckern is None:
        print(
            "cornerlayer: CORNERLAYER_KERNELS=compiled but the extension is not built;"
            " using the python backend",
            file=sys.stderr,
        )
        _forced = ""

set_backend(_forced or available_backends()[0])
