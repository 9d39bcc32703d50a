"""Continuous problem description, corner amplitudes and diagnostics.

A problem is

    eps*(u_t - u_xx) + b(x,t)*u = f(x,t)   on (0,1) x (0,T],
    u(0,t) = gL(t),  u(1,t) = gR(t),  u(x,0) = phi(x),

with b > beta > 0, b_x(0,0) = 0, and the data allowed to disagree at the
corner (0,0): phi(0+) != gL(0).  The jump amplitude A0 = gL(0) - phi(0+)
multiplies the singular function z0; subtracting A0*z0 leaves the
continuous remainder y whose data this module assembles.

Higher amplitudes A1, A2 measure first/second-order corner
incompatibility of the remainder; they need user-supplied derivative
expressions (this package does no symbolic differentiation).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .expr import Expression, parse
from .specfun import SingularParams, exp_decay, z0, z0_row

__all__ = [
    "ProblemSpec",
    "Amplitudes",
    "CompatibilityReport",
    "MissingDerivative",
    "YData",
    "amplitude_A0",
    "amplitude_A1",
    "amplitude_A2",
    "check_compatibility",
    "y_data",
    "load_problem",
    "example23",
    "BUILTINS",
]

# Accepted derivative expressions and their variable sets.
DERIVATIVE_VARS = {
    "gL_t": {"t"}, "gL_tt": {"t"},
    "gR_t": {"t"}, "gR_tt": {"t"},
    "phi_x": {"x"}, "phi_xx": {"x"}, "phi_xxxx": {"x"},
    "b_t": {"x", "t"}, "b_x": {"x", "t"}, "b_xx": {"x", "t"},
    "b_xt": {"x", "t"}, "b_xxx": {"x", "t"},
    "f_t": {"x", "t"}, "f_xx": {"x", "t"},
}

_COMPAT_TOL = 1e-10


class MissingDerivative(ValueError):
    """A requested diagnostic needs derivative expressions not supplied."""

    def __init__(self, names):
        self.names = tuple(names)
        super().__init__(f"missing derivative expression(s): {', '.join(self.names)}")


@dataclass(frozen=True)
class ProblemSpec:
    """Immutable continuous problem; expressions are shareable."""

    eps: float
    beta: float
    T: float
    b: Expression
    f: Expression
    gL: Expression
    gR: Expression
    phi: Expression
    derivatives: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")
        if not self.beta > 0.0:
            raise ValueError("beta must be positive")
        if not self.T > 0.0:
            raise ValueError("T must be positive")
        for key in self.derivatives:
            if key not in DERIVATIVE_VARS:
                raise ValueError(f"unknown derivative key '{key}'")
        # b must dominate beta on the closed domain (sampled check).  The
        # sampled minimum may equal beta exactly, e.g. beta pinned to
        # b(0,0); allow it up to rounding.
        xs = np.linspace(0.0, 1.0, 101)
        ts = np.linspace(0.0, self.T, 101)
        bmin = min(float(np.min(self.b.eval_array(x=xs, t=t))) for t in ts)
        if bmin < self.beta - 1e-12:
            raise ValueError(
                f"b must stay above beta on the domain: sampled min {bmin} < beta {self.beta}"
            )
        if "b_x" in self.derivatives:
            bx00 = self.derivatives["b_x"](x=0.0, t=0.0)
            if abs(bx00) > 1e-12:
                raise ValueError(f"b_x(0,0) must vanish, got {bx00}")

    def with_eps(self, eps: float) -> "ProblemSpec":
        return replace(self, eps=eps)

    def b00(self) -> float:
        return self.b(x=0.0, t=0.0)

    def singular_params(self) -> SingularParams:
        return SingularParams(self.eps, self.b00())

    def require(self, *names: str) -> tuple[Expression, ...]:
        missing = [n for n in names if n not in self.derivatives]
        if missing:
            raise MissingDerivative(missing)
        return tuple(self.derivatives[n] for n in names)


@dataclass(frozen=True)
class Amplitudes:
    """Corner singularity strengths.

    The natural scalings are A0 = O(1), eps*A1 = O(1), eps^2*A2 = O(1);
    ``scalings`` records them for diagnostics without asserting.
    """

    A0: float
    A1: float | None = None
    A2: float | None = None

    def scalings(self, eps: float) -> dict:
        out = {"A0": self.A0}
        if self.A1 is not None:
            out["eps_A1"] = eps * self.A1
        if self.A2 is not None:
            out["eps2_A2"] = eps * eps * self.A2
        return out


def amplitude_A0(p: ProblemSpec) -> float:
    """Jump gL(0) - phi(0+) absorbed by the leading singular term."""
    return p.gL(t=0.0) - p.phi(x=0.0)


def amplitude_A1(p: ProblemSpec, A0: float) -> float:
    """First-order amplitude: the unique A1 restoring the first-order
    corner identity for the once-corrected remainder,

        A1 = gL'(0) - phi''(0) + [b(0,0)*(A0 + phi(0)) - f(0,0)] / eps.
    """
    gL_t, phi_xx = p.require("gL_t", "phi_xx")
    b00 = p.b00()
    phi0 = p.phi(x=0.0)
    return (
        gL_t(t=0.0)
        - phi_xx(x=0.0)
        + (b00 * (A0 + phi0) - p.f(x=0.0, t=0.0)) / p.eps
    )


def amplitude_A2(p: ProblemSpec, A0: float, A1: float) -> float:
    """Second-order amplitude (coefficient -2*eps in the corner identity):

        2*eps*A2 = eps*(gL''(0) - phi''''(0)) + (A1 + gL'(0))*b(0,0)
                   - 2*A0*(b_t + b_xx)(0,0) - A0*b(0,0)^2/eps
                   + b_t(0,0)*(gL(0) - A0) + b_xx(0,0)*phi(0)
                   + b(0,0)*phi''(0) - (f_t + f_xx)(0,0).
    """
    gL_t, gL_tt, phi_xx, phi_xxxx, b_t, b_xx, f_t, f_xx = p.require(
        "gL_t", "gL_tt", "phi_xx", "phi_xxxx", "b_t", "b_xx", "f_t", "f_xx"
    )
    eps = p.eps
    b00 = p.b00()
    bt00 = b_t(x=0.0, t=0.0)
    bxx00 = b_xx(x=0.0, t=0.0)
    num = (
        eps * (gL_tt(t=0.0) - phi_xxxx(x=0.0))
        + (A1 + gL_t(t=0.0)) * b00
        - 2.0 * A0 * (bt00 + bxx00)
        - A0 * b00 * b00 / eps
        + bt00 * (p.gL(t=0.0) - A0)
        + bxx00 * p.phi(x=0.0)
        + b00 * phi_xx(x=0.0)
        - (f_t(x=0.0, t=0.0) + f_xx(x=0.0, t=0.0))
    )
    return num / (2.0 * eps)


@dataclass(frozen=True)
class CompatibilityReport:
    """Residuals of the corner compatibility identities.

    ``None`` means the needed derivative expressions were not supplied;
    ``missing`` lists them per condition.  A residual is flagged
    satisfied iff |residual| <= 1e-10 * (1 + |rhs|) with rhs the
    right-hand side of that identity.
    """

    level0_left: float
    level0_right: float
    first_left: float | None
    first_right: float | None
    second_left: float | None
    second_right: float | None
    flags: dict
    missing: dict

    CONDITIONS = (
        "level0_left", "level0_right",
        "first_left", "first_right",
        "second_left", "second_right",
    )

    def residual(self, name: str):
        return getattr(self, name)


def _flag(residual: float, rhs: float) -> bool:
    return abs(residual) <= _COMPAT_TOL * (1.0 + abs(rhs))


def check_compatibility(p: ProblemSpec) -> CompatibilityReport:
    """Evaluate the level-0/1/2 corner identities on the raw data.

    Missing derivatives disable individual conditions (reported, not
    fatal).  The first-derivative phi_x only enters the second-order
    identity through 2*b_x*phi_x, so it is not demanded when b_x
    vanishes at that corner.
    """
    d = p.derivatives
    eps = p.eps
    flags: dict = {}
    missing: dict = {}

    gL0 = p.gL(t=0.0)
    gR0 = p.gR(t=0.0)
    phi0 = p.phi(x=0.0)
    phi1 = p.phi(x=1.0)
    level0_left = phi0 - gL0
    level0_right = phi1 - gR0
    flags["level0_left"] = _flag(level0_left, gL0)
    flags["level0_right"] = _flag(level0_right, gR0)

    def resolve(cond: str, *names: str) -> bool:
        lack = [n for n in names if n not in d]
        if lack:
            missing[cond] = tuple(lack)
            flags[cond] = None
            return False
        return True

    first_left = None
    if resolve("first_left", "gL_t", "phi_xx"):
        rhs = p.f(x=0.0, t=0.0)
        first_left = (
            eps * (d["gL_t"](t=0.0) - d["phi_xx"](x=0.0)) + p.b00() * phi0 - rhs
        )
        flags["first_left"] = _flag(first_left, rhs)

    first_right = None
    if resolve("first_right", "gR_t", "phi_xx"):
        rhs = p.f(x=1.0, t=0.0)
        first_right = (
            eps * (d["gR_t"](t=0.0) - d["phi_xx"](x=1.0))
            + p.b(x=1.0, t=0.0) * gR0
            - rhs
        )
        flags["first_right"] = _flag(first_right, rhs)

    second_left = None
    if resolve("second_left", "gL_t", "gL_tt", "phi_xx", "phi_xxxx",
               "b_t", "b_x", "b_xx", "f_t", "f_xx"):
        rhs = d["f_t"](x=0.0, t=0.0) + d["f_xx"](x=0.0, t=0.0)
        # b_x(0,0) = 0 by assumption, so the 2*b_x*phi_x term drops.
        second_left = (
            eps * (d["gL_tt"](t=0.0) - d["phi_xxxx"](x=0.0))
            + p.b00() * (d["gL_t"](t=0.0) + d["phi_xx"](x=0.0))
            + d["b_t"](x=0.0, t=0.0) * gL0
            + d["b_xx"](x=0.0, t=0.0) * phi0
            - rhs
        )
        flags["second_left"] = _flag(second_left, rhs)

    second_right = None
    if resolve("second_right", "gR_t", "gR_tt", "phi_xx", "phi_xxxx",
               "b_t", "b_x", "b_xx", "f_t", "f_xx"):
        bx10 = d["b_x"](x=1.0, t=0.0)
        if bx10 != 0.0 and "phi_x" not in d:
            missing["second_right"] = ("phi_x",)
            flags["second_right"] = None
        else:
            rhs = d["f_t"](x=1.0, t=0.0) + d["f_xx"](x=1.0, t=0.0)
            cross = 2.0 * bx10 * d["phi_x"](x=1.0) if bx10 != 0.0 else 0.0
            second_right = (
                eps * (d["gR_tt"](t=0.0) - d["phi_xxxx"](x=1.0))
                + p.b(x=1.0, t=0.0) * (d["gR_t"](t=0.0) + d["phi_xx"](x=1.0))
                + d["b_t"](x=1.0, t=0.0) * gR0
                + cross
                + d["b_xx"](x=1.0, t=0.0) * phi1
                - rhs
            )
            flags["second_right"] = _flag(second_right, rhs)

    return CompatibilityReport(
        level0_left, level0_right, first_left, first_right,
        second_left, second_right, flags, missing,
    )


@dataclass(frozen=True)
class YData:
    """Data of the transformed problem for the remainder y = u - A0*z0.

    All fields are pure callables, safe for concurrent use:
    rhs(x,t) = f - A0*(b - b(0,0))*z0,
    left(t)  = gL(t) - A0*exp(-b(0,0)t/eps),
    right(t) = gR(t) - A0*z0(1,t),
    initial(x) = phi(x).
    left(0) equals phi(0+) by the z0 corner convention.
    """

    rhs: Callable[[float, float], float]
    left: Callable[[float], float]
    right: Callable[[float], float]
    initial: Callable[[float], float]
    rhs_row: Callable[[np.ndarray, float], np.ndarray]
    left_values: Callable[[np.ndarray], np.ndarray]
    right_values: Callable[[np.ndarray], np.ndarray]
    initial_values: Callable[[np.ndarray], np.ndarray]


def y_data(p: ProblemSpec, A0: float) -> YData:
    sp = p.singular_params()
    b00 = sp.b00

    def rhs(x: float, t: float) -> float:
        return p.f(x=x, t=t) - A0 * (p.b(x=x, t=t) - b00) * z0(x, t, sp)

    def left(t: float) -> float:
        return p.gL(t=t) - A0 * exp_decay(t, sp)

    def right(t: float) -> float:
        return p.gR(t=t) - A0 * z0(1.0, t, sp)

    def initial(x: float) -> float:
        return p.phi(x=x)

    def rhs_row(x: np.ndarray, t: float) -> np.ndarray:
        return (
            p.f.eval_array(x=x, t=t)
            - A0 * (p.b.eval_array(x=x, t=t) - b00) * z0_row(x, t, sp)
        )

    def left_values(ts: np.ndarray) -> np.ndarray:
        return np.array([left(float(t)) for t in ts])

    def right_values(ts: np.ndarray) -> np.ndarray:
        return np.array([right(float(t)) for t in ts])

    def initial_values(xs: np.ndarray) -> np.ndarray:
        return p.phi.eval_array(x=xs)

    return YData(rhs, left, right, initial, rhs_row, left_values, right_values, initial_values)


def default_beta(b: Expression, T: float) -> float:
    """Fallback beta when a problem file omits it: just below the
    sampled minimum of b on a 201x201 grid."""
    xs = np.linspace(0.0, 1.0, 201)
    bmin = math.inf
    for t in np.linspace(0.0, T, 201):
        bmin = min(bmin, float(np.min(b.eval_array(x=xs, t=t))))
    if not bmin > 0.0:
        raise ValueError(f"cannot default beta: sampled min of b is {bmin}")
    return 0.999 * bmin


def _parse_eps(value) -> float:
    if isinstance(value, str):
        text = value.strip()
        if "^" in text:
            base, _, expo = text.partition("^")
            return float(base) ** float(expo)
        return float(text)
    return float(value)


def from_dict(data: dict, name: str = "") -> ProblemSpec:
    """Build a ProblemSpec from the JSON problem-file schema."""
    for key in ("eps", "b", "f", "gL", "gR", "phi"):
        if key not in data:
            raise ValueError(f"problem file missing required field '{key}'")
    b = parse(data["b"], {"x", "t"})
    f = parse(data["f"], {"x", "t"})
    gL = parse(data["gL"], {"t"})
    gR = parse(data["gR"], {"t"})
    phi = parse(data["phi"], {"x"})
    T = float(data.get("T", 1.0))
    eps = _parse_eps(data["eps"])
    beta = float(data["beta"]) if "beta" in data else default_beta(b, T)
    derivatives = {}
    for key, src in data.get("derivatives", {}).items():
        if key not in DERIVATIVE_VARS:
            raise ValueError(f"unknown derivative key '{key}'")
        derivatives[key] = parse(src, DERIVATIVE_VARS[key])
    return ProblemSpec(eps, beta, T, b, f, gL, gR, phi, derivatives, name)


def example23(eps: float = 2.0 ** -12) -> ProblemSpec:
    """Built-in test problem: b = 1+x^2+t, f = exp(-x), phi = 1-x,
    gL = 0, gR = -t^2 on (0,1) x (0,1].  phi(0) = 1 != 0 = gL(0)."""
    return from_dict(
        {
            "eps": eps,
            "beta": 1.0,
            "T": 1.0,
            "b": "1 + x^2 + t",
            "f": "exp(-x)",
            "gL": "0",
            "gR": "-t^2",
            "phi": "1 - x",
            "derivatives": {
                "gL_t": "0", "gL_tt": "0",
                "gR_t": "-2*t", "gR_tt": "-2",
                "phi_x": "-1", "phi_xx": "0", "phi_xxxx": "0",
                "b_t": "1", "b_x": "2*x", "b_xx": "2", "b_xt": "0", "b_xxx": "0",
                "f_t": "0", "f_xx": "exp(-x)",
            },
        },
        name="example23",
    )


BUILTINS = {"example23": example23}


def load_problem(source: str | Path) -> ProblemSpec:
    """Load a built-in problem by name or a JSON problem file by path."""
    text = str(source)
    if text in BUILTINS:
        return BUILTINS[text]()
    path = Path(source)
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return from_dict(data, name=path.stem)
