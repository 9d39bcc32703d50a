"""Implicit finite-difference solve of the transformed problem.

On a tensor mesh the scheme at an interior node (x_i, t_j) is

    eps*(Y_ij - Y_i,j-1)/k_j
      - eps*[ (Y_i+1,j - Y_ij)/h_{i+1} - (Y_ij - Y_i-1,j)/h_i ] / hbar_i
      + b(x_i, t_j)*Y_ij  =  rhs(x_i, t_j),

backward in time, nodal collocation of the coefficients.  Each level is
a tridiagonal M-matrix system (sub, sup <= 0 < diag, strictly dominant
by eps/k_j + b), which gives the scheme a discrete maximum principle.

The march runs in the compiled kernel when available; the NumPy path
assembles level rows vectorized and solves with LAPACK's banded solver.
A single solve is sequential in time; distinct solves share no mutable
state and can run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from . import kernels
from .kernels import PivotError
from .mesh import TensorMesh
from .problem import ProblemSpec, amplitude_A0, y_data
from .specfun import SingularParams, z0_grid, z0_row

__all__ = [
    "GridFunction",
    "TridiagonalSystem",
    "NumericalBreakdown",
    "assemble_level",
    "thomas_solve",
    "solve_y",
    "march_arrays",
    "reconstruct_u",
    "max_principle_probe",
]


class NumericalBreakdown(ArithmeticError):
    """Nonpositive pivot or broken M-matrix structure during a solve."""


@dataclass(frozen=True)
class GridFunction:
    """Nodal values on a tensor mesh; values[i, j] lives at (x_i, t_j)."""

    mesh: TensorMesh
    values: np.ndarray

    def __post_init__(self):
        expect = (self.mesh.N + 1, self.mesh.M + 1)
        if self.values.shape != expect:
            raise ValueError(f"values shaped {self.values.shape}, mesh wants {expect}")


@dataclass(frozen=True)
class TridiagonalSystem:
    """One implicit level over the interior unknowns.

    The M-matrix sign pattern holds by construction: sub, sup <= 0,
    diag > 0 and diag - |sub| - |sup| = eps/k_j + b(x_i, t_j).
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray


def _structural(eps: float, mesh: TensorMesh):
    """Level-independent pieces of the scheme matrix."""
    h, hbar = mesh.h, mesh.hbar
    sub = -eps / (h[:-1] * hbar)
    sup = -eps / (h[1:] * hbar)
    lap = eps * (1.0 / (h[:-1] * hbar) + 1.0 / (h[1:] * hbar))
    return sub, sup, lap


def assemble_level(
    p: ProblemSpec,
    mesh: TensorMesh,
    A0: float,
    j: int,
    prev: np.ndarray,
) -> TridiagonalSystem:
    """Assemble the tridiagonal system of time level j (1 <= j <= M).

    ``prev`` holds the full row of nodal values at t_{j-1} (length N+1).
    Boundary values at t_j fold into the first and last right-hand
    sides.
    """
    if not 1 <= j <= mesh.M:
        raise ValueError(f"level j must lie in 1..{mesh.M}, got {j}")
    data = y_data(p, A0)
    tj = float(mesh.time.nodes[j])
    kj = float(mesh.k[j - 1])
    xi = mesh.space.nodes[1:-1]
    sub, sup, lap = _structural(p.eps, mesh)
    brow = p.b.eval_array(x=xi, t=tj)
    diag = p.eps / kj + lap + brow
    rhs = data.rhs_row(xi, tj) + (p.eps / kj) * np.asarray(prev[1:-1], dtype=float)
    rhs = np.array(rhs, dtype=float)
    rhs[0] -= sub[0] * data.left(tj)
    rhs[-1] -= sup[-1] * data.right(tj)
    return TridiagonalSystem(sub, diag, sup, rhs)


def thomas_solve(sys: TridiagonalSystem) -> np.ndarray:
    """Solve one level; relative residual <= 1e-12 for well-posed input."""
    try:
        return kernels.thomas(sys.sub, sys.diag, sys.sup, sys.rhs)
    except PivotError as exc:
        raise NumericalBreakdown(str(exc)) from exc


def _check_level_signs(diag: np.ndarray, epk: float, brow: np.ndarray) -> None:
    # Structural parts are sign-definite on a valid mesh; only the
    # reaction row can break dominance.
    if not np.all(epk + brow > 0.0):
        raise NumericalBreakdown("lost diagonal dominance: eps/k + b <= 0 at a node")
    if not np.all(diag > 0.0):
        raise NumericalBreakdown("nonpositive diagonal entry")


def _march_numpy(
    eps: float,
    mesh: TensorMesh,
    level_rows: Callable[[int, float], tuple[np.ndarray, np.ndarray]],
    left_col: np.ndarray,
    right_col: np.ndarray,
    init_row: np.ndarray,
) -> np.ndarray:
    """Generic implicit march; level_rows(j, t_j) -> (b_row, g_row) where
    g_row is the source term without the time-coupling part."""
    N, M = mesh.N, mesh.M
    t = mesh.time.nodes
    sub, sup, lap = _structural(eps, mesh)
    Y = np.empty((N + 1, M + 1))
    Y[0, :] = left_col
    Y[N, :] = right_col
    Y[:, 0] = init_row
    ab = np.zeros((3, N - 1))
    for j in range(1, M + 1):
        kj = float(mesh.k[j - 1])
        epk = eps / kj
        brow, grow = level_rows(j, float(t[j]))
        diag = epk + lap + brow
        _check_level_signs(diag, epk, brow)
        rhs = grow + epk * Y[1:-1, j - 1]
        rhs[0] -= sub[0] * Y[0, j]
        rhs[-1] -= sup[-1] * Y[N, j]
        ab[0, 1:] = sup[:-1]
        ab[1, :] = diag
        ab[2, :-1] = sub[1:]
        Y[1:-1, j] = solve_banded((1, 1), ab, rhs, overwrite_ab=False, check_finite=False)
    return Y


def solve_y(p: ProblemSpec, mesh: TensorMesh) -> GridFunction:
    """March the scheme over all time levels; deterministic reruns.

    Uses the fused compiled march when the extension is loaded,
    otherwise the vectorized NumPy path.  Both produce the same scheme;
    they may differ by rounding at the ulp level.
    """
    A0 = amplitude_A0(p)
    data = y_data(p, A0)
    sp = p.singular_params()
    t = mesh.time.nodes
    left_col = data.left_values(t)
    right_col = data.right_values(t)
    init_row = data.initial_values(mesh.space.nodes)

    if kernels.march_programs is not None:
        pb = p.b.program()
        pf = p.f.program()
        try:
            Y = kernels.march_programs(
                p.eps, sp.b00, A0,
                mesh.space.nodes, mesh.h, mesh.hbar, mesh.time.nodes, mesh.k,
                pb.ops, pb.args, pf.ops, pf.args, max(pb.stack_need, pf.stack_need),
                left_col, right_col, init_row,
            )
        except PivotError as exc:
            raise NumericalBreakdown(str(exc)) from exc
        return GridFunction(mesh, Y)

    xi = mesh.space.nodes[1:-1]

    def level_rows(j: int, tj: float):
        brow = p.b.eval_array(x=xi, t=tj)
        grow = (
            p.f.eval_array(x=xi, t=tj)
            - A0 * (brow - sp.b00) * z0_row(xi, tj, sp)
        )
        return brow, np.array(grow, dtype=float)

    Y = _march_numpy(p.eps, mesh, level_rows, left_col, right_col, init_row)
    return GridFunction(mesh, Y)


def march_arrays(
    mesh: TensorMesh,
    eps: float,
    b_rows: np.ndarray,
    g_rows: np.ndarray,
    left_col: np.ndarray,
    right_col: np.ndarray,
    init_row: np.ndarray,
) -> GridFunction:
    """March with raw per-level data instead of a ProblemSpec.

    ``b_rows`` and ``g_rows`` are (N-1, M) arrays holding the reaction
    row and source row of levels j = 1..M.  Used by the maximum
    principle probe and by scheme property tests.
    """
    b_rows = np.asarray(b_rows, dtype=float)
    g_rows = np.asarray(g_rows, dtype=float)

    def level_rows(j: int, tj: float):
        return b_rows[:, j - 1], g_rows[:, j - 1]

    Y = _march_numpy(eps, mesh, level_rows,
                     np.asarray(left_col, dtype=float),
                     np.asarray(right_col, dtype=float),
                     np.asarray(init_row, dtype=float))
    return GridFunction(mesh, Y)


def reconstruct_u(Y: GridFunction, A0: float, p: ProblemSpec) -> GridFunction:
    """Add the singular part back: U = A0*z0 + Y on the same mesh.

    At x = 0 the boundary values of u are recovered exactly; the corner
    carries A0 + phi(0+) = gL(0) by the z0 convention.
    """
    sp = p.singular_params()
    zg = z0_grid(Y.mesh.space.nodes, Y.mesh.time.nodes, sp)
    return GridFunction(Y.mesh, Y.values + A0 * zg)


def max_principle_probe(p: ProblemSpec, mesh: TensorMesh, ndata: int = 20, seed: int = 0) -> bool:
    """Inverse positivity check: nonnegative data must give Y >= -1e-13.

    Solves the scheme with ``ndata`` random nonnegative (rhs, boundary,
    initial) datasets using the reaction coefficient of ``p``.
    """
    rng = np.random.default_rng(seed)
    N, M = mesh.N, mesh.M
    xi = mesh.space.nodes[1:-1]
    t = mesh.time.nodes
    b_rows = np.column_stack([p.b.eval_array(x=xi, t=float(tj)) for tj in t[1:]])
    for _ in range(ndata):
        g_rows = rng.random((N - 1, M))
        left = rng.random(M + 1)
        right = rng.random(M + 1)
        init = rng.random(N + 1)
        Y = march_arrays(mesh, p.eps, b_rows, g_rows, left, right, init)
        if Y.values.min() < -1e-13:
            return False
    return True
