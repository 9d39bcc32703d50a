"""Two-mesh convergence experiments.

The two-mesh difference of a cell (eps, N, M) is

    D = max over the union grid of | interp(Y on N,M) - interp(Y on 2N,2M) |

and the estimated global order is Q = log2(D(N,M) / D(2N,2M)).  Uniform
rows take the max of D over the eps sweep before forming orders.

Refinement convention: the fine run recomputes its space transition
(sigma depends on ln 2N) but keeps the coarse time transition, i.e. the
fine time mesh is the bisection of the coarse one.  Space meshes are
generally non-nested.

Cells are independent jobs; results are keyed by (eps exponent, N) so
aggregation does not depend on completion order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal

import numpy as np

from .interp import max_diff
from .mesh import space_mesh, tensor, time_mesh
from .problem import ProblemSpec, amplitude_A0
from .solver import reconstruct_u, solve_y

__all__ = [
    "ConvergenceTable",
    "two_mesh_cell",
    "build_table",
    "emit",
    "fmt_d",
    "fmt_q",
]


def _solve_pair(p: ProblemSpec, N: int, M: int, reconstructed: bool):
    coarse = tensor(space_mesh(N, p.eps, p.beta), time_mesh(M, p.eps, p.beta, p.T))
    fine = tensor(
        space_mesh(2 * N, p.eps, p.beta),
        time_mesh(2 * M, p.eps, p.beta, p.T, tau=coarse.tau),
    )
    Ya = solve_y(p, coarse)
    Yb = solve_y(p, fine)
    if reconstructed:
        A0 = amplitude_A0(p)
        Ya = reconstruct_u(Ya, A0, p)
        Yb = reconstruct_u(Yb, A0, p)
    return Ya, Yb


def two_mesh_cell(p: ProblemSpec, N: int, M: int, reconstructed: bool = False) -> float:
    """One cell: solve on (N, M) and (2N, 2M), return the union-grid
    difference of the two interpolants (of Y, or of U = A0*z0 + Y)."""
    Ya, Yb = _solve_pair(p, N, M, reconstructed)
    return max_diff(Ya, Yb)


@dataclass(frozen=True)
class ConvergenceTable:
    """D and Q per (eps, N) plus the uniform rows.

    Q[:, k] = log2(D[:, k] / D[:, k+1]) wherever the next column exists;
    uniform_D[k] = max over the eps sweep of D[:, k].
    """

    eps_exponents: tuple[int, ...]
    N_list: tuple[int, ...]
    M_list: tuple[int, ...]
    D: np.ndarray          # (n_eps, n_N)
    Q: np.ndarray          # (n_eps, n_N - 1), empty for one column
    uniform_D: np.ndarray  # (n_N,)
    uniform_Q: np.ndarray  # (n_N - 1,)

    def cell(self, eps_exponent: int, N: int) -> tuple[float, float | None]:
        i = self.eps_exponents.index(eps_exponent)
        k = self.N_list.index(N)
        q = float(self.Q[i, k]) if k < self.Q.shape[1] else None
        return float(self.D[i, k]), q

    def uniform(self, N: int) -> tuple[float, float | None]:
        k = self.N_list.index(N)
        q = float(self.uniform_Q[k]) if k < self.uniform_Q.size else None
        return float(self.uniform_D[k]), q


def _cell_job(args):
    p, kexp, N, M, reconstructed = args
    return (kexp, N), two_mesh_cell(p.with_eps(2.0 ** -kexp), N, M, reconstructed)


def build_table(
    p: ProblemSpec,
    eps_exponents=range(0, 31),
    N_list=(64, 128, 256, 512, 1024, 2048, 4096),
    M_list=None,
    reconstructed: bool = False,
    jobs: int = 1,
) -> ConvergenceTable:
    """Fill every (eps, N) cell and the uniform rows; deterministic.

    ``M_list`` defaults to the pairing M = N/4.  With ``jobs > 1`` the
    independent cells run in a process pool; results are keyed, so the
    table does not depend on scheduling order.
    """
    eps_exponents = tuple(int(k) for k in eps_exponents)
    N_list = tuple(int(n) for n in N_list)
    if not eps_exponents or not N_list:
        raise ValueError("eps sweep and N list must be nonempty")
    if M_list is None:
        M_list = tuple(max(4, n // 4) for n in N_list)
    else:
        M_list = tuple(int(m) for m in M_list)
        if len(M_list) != len(N_list):
            raise ValueError("M_list must pair with N_list")

    tasks = [
        (p, kexp, N, M, reconstructed)
        for kexp in eps_exponents
        for N, M in zip(N_list, M_list)
    ]
    results: dict = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for key, val in pool.map(_cell_job, tasks):
                results[key] = val
    else:
        for task in tasks:
            key, val = _cell_job(task)
            results[key] = val

    D = np.array([[results[(k, n)] for n in N_list] for k in eps_exponents])
    Q = np.log2(D[:, :-1] / D[:, 1:]) if len(N_list) > 1 else np.empty((len(eps_exponents), 0))
    uniform_D = D.max(axis=0)
    uniform_Q = (
        np.log2(uniform_D[:-1] / uniform_D[1:]) if len(N_list) > 1 else np.empty(0)
    )
    return ConvergenceTable(eps_exponents, N_list, tuple(M_list), D, Q, uniform_D, uniform_Q)


def fmt_d(value: float) -> str:
    """Scientific display with three decimals, e.g. 7.360E-02.

    Rounds the shortest decimal representation half-to-even so that
    display ties behave decimally, not in binary.
    """
    d = Decimal(repr(float(value)))
    if d == 0:
        return "0.000E+00"
    exp = d.adjusted()
    mant = d.scaleb(-exp).quantize(Decimal("1.000"), rounding=ROUND_HALF_EVEN)
    if abs(mant) >= 10:
        mant = (mant / 10).quantize(Decimal("1.000"), rounding=ROUND_HALF_EVEN)
        exp += 1
    return f"{mant}E{exp:+03d}"


def fmt_q(value: float) -> str:
    """Order display with three decimals, round half to even."""
    return str(Decimal(repr(float(value))).quantize(Decimal("0.001"), rounding=ROUND_HALF_EVEN))


def emit(table: ConvergenceTable, fmt: str = "csv") -> str:
    """Render the table; ``csv`` for machines, ``pretty`` for terminals.

    CSV rows are the eps exponents plus a final ``uniform`` row, columns
    alternate D and Q per N; the last Q column of each row is empty.
    """
    if fmt == "csv":
        return _emit_csv(table)
    if fmt == "pretty":
        return _emit_pretty(table)
    raise ValueError(f"unknown format {fmt!r}")


def _emit_csv(table: ConvergenceTable) -> str:
    header = ["eps"]
    for n in table.N_list:
        header += [f"D_N{n}", f"Q_N{n}"]
    lines = [",".join(header)]
    nq = table.Q.shape[1]
    for i, kexp in enumerate(table.eps_exponents):
        row = [f"2^-{kexp}" if kexp else "2^0"]
        for k in range(len(table.N_list)):
            row.append(fmt_d(table.D[i, k]))
            row.append(fmt_q(table.Q[i, k]) if k < nq else "")
        lines.append(",".join(row))
    row = ["uniform"]
    for k in range(len(table.N_list)):
        row.append(fmt_d(table.uniform_D[k]))
        row.append(fmt_q(table.uniform_Q[k]) if k < table.uniform_Q.size else "")
    lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _emit_pretty(table: ConvergenceTable) -> str:
    width = 11
    cols = len(table.N_list)
    head1 = "          " + "".join(f"{'N=' + str(n):>{width}}" for n in table.N_list)
    head2 = "          " + "".join(f"{'M=' + str(m):>{width}}" for m in table.M_list)
    rule = "-" * (10 + width * cols)
    lines = [head1, head2, rule]
    nq = table.Q.shape[1]
    for i, kexp in enumerate(table.eps_exponents):
        label = f"2^-{kexp}" if kexp else "2^0"
        dvals = "".join(f"{fmt_d(table.D[i, k]):>{width}}" for k in range(cols))
        qvals = "".join(
            f"{fmt_q(table.Q[i, k]) if k < nq else '':>{width}}" for k in range(cols)
        )
        lines.append(f"eps={label:<6}" + dvals)
        lines.append(" " * 10 + qvals)
    lines.append(rule)
    dvals = "".join(f"{fmt_d(table.uniform_D[k]):>{width}}" for k in range(cols))
    qvals = "".join(
        f"{fmt_q(table.uniform_Q[k]) if k < table.uniform_Q.size else '':>{width}}"
        for k in range(cols)
    )
    lines.append("uniform   " + dvals)
    lines.append(" " * 10 + qvals)
    return "\n".join(lines) + "\n"
