"""Piecewise-uniform layer-adapted meshes (Shishkin meshes).

The space mesh splits [0, 1] as [0, sigma] | [sigma, 1-sigma] |
[1-sigma, 1] with cells in the ratio N/4 : N/2 : N/4 and

    sigma = min(1/4, 2*sqrt(eps/beta)*ln(N)),

condensing points inside the two boundary layers of width O(sqrt(eps)).
The time mesh splits [0, T] as [0, tau] | [tau, T] with M/2 cells each
and

    tau = min(T/2, (eps/beta)*ln(M)),

resolving the initial layer of width O(eps).  Transition points are
computed once and inserted exactly, so sigma and tau are mesh nodes
bit-exactly.  Meshes are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InvalidN",
    "InvalidM",
    "Mesh1D",
    "TensorMesh",
    "space_mesh",
    "time_mesh",
    "tensor",
]


class InvalidN(ValueError):
    """Space cell count not usable (needs N >= 8 divisible by 4)."""


class InvalidM(ValueError):
    """Time cell count not usable (needs M >= 4 even)."""


@dataclass(frozen=True)
class Mesh1D:
    """Strictly increasing nodes plus the transition coordinates."""

    nodes: np.ndarray
    transitions: tuple[float, ...]
    kind: str  # "space" or "time"

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=np.float64)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a mesh needs at least two nodes")
        if not np.all(np.diff(nodes) > 0.0):
            raise ValueError("mesh nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, a: float, b: float, ncells: int, kind: str) -> "Mesh1D":
        return cls(np.linspace(a, b, ncells + 1), (), kind)

    @property
    def ncells(self) -> int:
        return self.nodes.size - 1

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.nodes)


@dataclass(frozen=True)
class TensorMesh:
    """Space x time mesh with precomputed spacing arrays.

    ``h[i-1] = x_i - x_{i-1}``, ``hbar[i-1] = (h_i + h_{i+1})/2`` for the
    interior nodes i = 1..N-1, and ``k[j-1] = t_j - t_{j-1}``.
    """

    space: Mesh1D
    time: Mesh1D
    sigma: float
    tau: float
    h: np.ndarray
    hbar: np.ndarray
    k: np.ndarray

    @property
    def N(self) -> int:
        return self.space.ncells

    @property
    def M(self) -> int:
        return self.time.ncells

    @property
    def T(self) -> float:
        return float(self.time.nodes[-1])


def _three_piece(a: float, p: float, q: float, b: float, n1: int, n2: int, n3: int) -> np.ndarray:
    left = np.linspace(a, p, n1 + 1)
    mid = np.linspace(p, q, n2 + 1)
    right = np.linspace(q, b, n3 + 1)
    return np.concatenate([left, mid[1:], right[1:]])


def space_mesh(N: int, eps: float, beta: float) -> Mesh1D:
    """Layer-adapted mesh on [0, 1] with N cells (N >= 8, 4 | N)."""
    if N < 8 or N % 4 != 0:
        raise InvalidN(f"N must be >= 8 and divisible by 4, got {N}")
    if not (eps > 0.0 and beta > 0.0):
        raise ValueError("eps and beta must be positive")
    sigma = min(0.25, 2.0 * math.sqrt(eps / beta) * math.log(N))
    nodes = _three_piece(0.0, sigma, 1.0 - sigma, 1.0, N // 4, N // 2, N // 4)
    return Mesh1D(nodes, (sigma, 1.0 - sigma), "space")


def time_mesh(M: int, eps: float, beta: float, T: float = 1.0, tau: float | None = None) -> Mesh1D:
    """Layer-adapted mesh on [0, T] with M cells (M >= 4, even).

    ``tau`` overrides the transition point; the two-mesh harness uses it
    to refine a mesh without moving the transition.
    """
    if M < 4 or M % 2 != 0:
        raise InvalidM(f"M must be >= 4 and even, got {M}")
    if not T > 0.0:
        raise ValueError("T must be positive")
    if tau is None:
        tau = min(T / 2.0, (eps / beta) * math.log(M))
    elif not 0.0 < tau < T:
        raise ValueError(f"tau must lie inside (0, {T}), got {tau}")
    half = M // 2
    left = np.linspace(0.0, tau, half + 1)
    right = np.linspace(tau, T, half + 1)
    return Mesh1D(np.concatenate([left, right[1:]]), (tau,), "time")


def tensor(space: Mesh1D, time: Mesh1D) -> TensorMesh:
    """Tensor product with spacing arrays; (N+1)*(M+1) nodes."""
    h = np.diff(space.nodes)
    hbar = 0.5 * (h[:-1] + h[1:])
    k = np.diff(time.nodes)
    for arr in (h, hbar, k):
        arr.setflags(write=False)
    sigma = space.transitions[0] if space.transitions else float("nan")
    tau = time.transitions[0] if time.transitions else float("nan")
    return TensorMesh(space, time, sigma, tau, h, hbar, k)


def mesh_csv(mesh: Mesh1D) -> str:
    """One coordinate per line (debug dump behind the CLI flag)."""
    return "\n".join(repr(float(v)) for v in mesh.nodes) + "\n"
