"""Command-line front end.

Subcommands:

* ``solve`` — solve one problem, write the solution surface CSV plus a
  metadata JSON; optional mesh dumps and plot data (corner zoom and
  two-mesh nodal differences).
* ``table`` — run the two-mesh convergence experiment over an eps sweep
  and a list of N, write the table CSV and print the pretty form.
* ``check`` — print the compatibility report (findings, not errors:
  exit code stays 0).
* ``eval`` — print interpolated solution values at given points.

Exit codes: 0 success, 1 configuration/IO errors, 2 numerical breakdown.
eps accepts decimals or dyadic literals like ``2^-12``.  All CSVs use
'.' as the decimal separator regardless of locale.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from .harness import build_table, emit, two_mesh_cell, _solve_pair
from .interp import bilinear_eval, interp_to, union_grid
from .mesh import InvalidM, InvalidN, mesh_csv, space_mesh, tensor, time_mesh
from .problem import amplitude_A0, check_compatibility, load_problem
from .solver import NumericalBreakdown, reconstruct_u, solve_y

__all__ = ["main"]


def _parse_eps(text: str) -> float:
    if "^" in text:
        base, _, expo = text.partition("^")
        return float(base) ** float(expo)
    return float(text)


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_exponents(text: str) -> list[int]:
    # "0..30" or "0,3,12"
    if ".." in text:
        lo, _, hi = text.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return _parse_int_list(text)


def _grid_csv(xs, ts, values) -> str:
    """Header row of x nodes, first column of t nodes, one value per cell."""
    lines = ["t\\x," + ",".join(repr(float(x)) for x in xs)]
    for j, t in enumerate(ts):
        lines.append(repr(float(t)) + "," + ",".join(repr(float(v)) for v in values[:, j]))
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load(args) -> object:
    p = load_problem(args.problem)
    if args.eps is not None:
        p = p.with_eps(_parse_eps(args.eps))
    if getattr(args, "beta", None) is not None:
        from dataclasses import replace

        p = replace(p, beta=args.beta)
    return p


def _cmd_solve(args) -> int:
    p = _load(args)
    N = args.N
    M = args.M if args.M is not None else max(4, N // 4)
    # Validate mesh preconditions before any solve.
    smesh = space_mesh(N, p.eps, p.beta)
    tmesh = time_mesh(M, p.eps, p.beta, p.T)
    mesh = tensor(smesh, tmesh)
    out = Path(args.out)

    t0 = time.perf_counter()
    A0 = amplitude_A0(p)
    Y = solve_y(p, mesh)
    U = reconstruct_u(Y, A0, p)
    wall = time.perf_counter() - t0

    surface = Y if args.component == "y" else U
    _write(out / "solution.csv", _grid_csv(mesh.space.nodes, mesh.time.nodes, surface.values))
    meta = {
        "problem": args.problem,
        "component": args.component,
        "eps": p.eps,
        "beta": p.beta,
        "T": p.T,
        "N": N,
        "M": M,
        "sigma": mesh.sigma,
        "tau": mesh.tau,
        "A0": A0,
        "backend": kernels.backend_name(),
        "wall_time_s": wall,
    }
    _write(out / "metadata.json", json.dumps(meta, indent=2) + "\n")

    if args.dump_mesh:
        _write(out / "mesh_x.csv", mesh_csv(smesh))
        _write(out / "mesh_t.csv", mesh_csv(tmesh))

    if args.plot_data:
        _emit_plot_data(p, mesh, surface, out)
    return 0


def _corner_window(mesh, values):
    xs = mesh.space.nodes
    ts = mesh.time.nodes
    xmax = 4.0 * mesh.sigma
    tmax = 4.0 * mesh.tau
    ix = xs <= xmax * (1 + 1e-12)
    jt = ts <= tmax * (1 + 1e-12)
    return xs[ix], ts[jt], values[np.ix_(ix, jt)]


def _emit_plot_data(p, mesh, surface, out: Path) -> None:
    """Corner zoom of the surface plus two-mesh nodal differences
    (full mesh and the [0, 4*sigma] x [0, 4*tau] window)."""
    cx, ct, cv = _corner_window(mesh, surface.values)
    _write(out / "surface_corner.csv", _grid_csv(cx, ct, cv))

    Ya, Yb = _solve_pair(p, mesh.N, mesh.M, reconstructed=False)
    fine_at_coarse = interp_to(Yb, Ya.mesh.space.nodes, Ya.mesh.time.nodes)
    diff = np.abs(Ya.values - fine_at_coarse)
    _write(out / "twomesh_full.csv", _grid_csv(Ya.mesh.space.nodes, Ya.mesh.time.nodes, diff))
    dx, dt, dv = _corner_window(Ya.mesh, diff)
    _write(out / "twomesh_corner.csv", _grid_csv(dx, dt, dv))


def _cmd_table(args) -> int:
    p = _load(args)
    N_list = _parse_int_list(args.N)
    exps = _parse_exponents(args.eps_exponents)
    M_list = None
    if args.M is not None:
        M_list = _parse_int_list(args.M)
    # Validate all mesh preconditions up front.
    for n in N_list:
        space_mesh(n, p.eps, p.beta)
    if M_list is not None:
        for m in M_list:
            time_mesh(m, p.eps, p.beta, p.T)
    table = build_table(
        p,
        eps_exponents=exps,
        N_list=N_list,
        M_list=M_list,
        reconstructed=args.reconstructed,
        jobs=args.jobs,
    )
    _write(Path(args.out) / "table.csv", emit(table, "csv"))
    print(emit(table, "pretty"), end="")
    return 0


def _cmd_check(args) -> int:
    p = _load(args)
    report = check_compatibility(p)
    print(f"compatibility report for '{args.problem}' (tolerance 1e-10 relative):")
    for name in report.CONDITIONS:
        res = report.residual(name)
        flag = report.flags.get(name)
        if res is None:
            lack = ", ".join(report.missing.get(name, ()))
            print(f"  {name:13s} skipped (missing: {lack})")
        else:
            state = "satisfied" if flag else "VIOLATED"
            print(f"  {name:13s} residual {res: .6e}  {state}")
    try:
        from .problem import amplitude_A1, amplitude_A2

        A0 = amplitude_A0(p)
        print(f"  A0 = {A0!r}")
        A1 = amplitude_A1(p, A0)
        print(f"  A1 = {A1!r}  (eps*A1 = {p.eps * A1!r})")
        A2 = amplitude_A2(p, A0, A1)
        print(f"  A2 = {A2!r}  (eps^2*A2 = {p.eps**2 * A2!r})")
    except Exception as exc:  # amplitudes are optional diagnostics
        print(f"  amplitudes: {exc}")
    return 0


def _cmd_eval(args) -> int:
    p = _load(args)
    N = args.N
    M = args.M if args.M is not None else max(4, N // 4)
    mesh = tensor(space_mesh(N, p.eps, p.beta), time_mesh(M, p.eps, p.beta, p.T))
    A0 = amplitude_A0(p)
    Y = solve_y(p, mesh)
    G = Y if args.component == "y" else reconstruct_u(Y, A0, p)
    for spec in args.at:
        xs, _, ts = spec.partition(",")
        x, t = float(xs), float(ts)
        print(f"{x!r} {t!r} {bilinear_eval(G, x, t)!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cornerlayer",
        description="Layer-adapted solver for reaction-diffusion problems with "
        "boundary/initial data that disagree at a corner.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, eps_default=None):
        sp.add_argument("--problem", required=True,
                        help="built-in name (example23) or JSON problem file")
        sp.add_argument("--eps", default=eps_default,
                        help="perturbation parameter; decimal or dyadic like 2^-12")
        sp.add_argument("--beta", type=float, default=None,
                        help="override the reaction lower bound used by the meshes")

    sp = sub.add_parser("solve", help="solve one problem and write CSV/JSON artifacts")
    common(sp)
    sp.add_argument("--N", type=int, required=True, help="space cells (>= 8, divisible by 4)")
    sp.add_argument("--M", type=int, default=None, help="time cells (even); default N/4")
    sp.add_argument("--component", choices=("u", "y"), default="u",
                    help="surface to write: reconstructed u (default) or the remainder y")
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--dump-mesh", action="store_true", help="write mesh_x.csv / mesh_t.csv")
    sp.add_argument("--plot-data", action="store_true",
                    help="write corner zoom and two-mesh difference surfaces")
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("table", help="two-mesh convergence table over an eps sweep")
    common(sp)
    sp.add_argument("--N", required=True, help="comma-separated space cell counts, e.g. 64,128,256")
    sp.add_argument("--M", default=None,
                    help="comma-separated time cell counts (free-M mode); default pairing M=N/4")
    sp.add_argument("--eps-exponents", default="0..30",
                    help="dyadic sweep, e.g. 0..30 or 0,3,12")
    sp.add_argument("--reconstructed", action="store_true",
                    help="compare u = A0*z0 + y instead of y")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes for the cells")
    sp.add_argument("--out", default=".", help="output directory")
    sp.set_defaults(func=_cmd_table)

    sp = sub.add_parser("check", help="print the corner compatibility report")
    common(sp)
    sp.set_defaults(func=_cmd_check)

    sp = sub.add_parser("eval", help="print interpolated solution values at points")
    common(sp)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--M", type=int, default=None)
    sp.add_argument("--component", choices=("u", "y"), default="u")
    sp.add_argument("--at", action="append", required=True, metavar="X,T",
                    help="evaluation point; repeatable")
    sp.set_defaults(func=_cmd_eval)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalBreakdown as exc:
        print(f"cornerlayer: numerical breakdown: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, InvalidN, InvalidM, json.JSONDecodeError) as exc:
        print(f"cornerlayer: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
