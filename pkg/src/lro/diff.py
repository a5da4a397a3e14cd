"""Implicit differentiation of conic solutions through the embedding residual.

The solution of a cone program is characterized by a zero of the normalized
residual map of its homogeneous self-dual embedding.  Differentiating that
fixed point gives the derivative of the solution with respect to the problem
data ``(G, h, c)``, in forward mode (directional derivatives of ``x``) and
adjoint mode (data cotangents from an ``x`` cotangent).  Projection-Jacobian
elements are the deterministic choices made in :mod:`lro.cones`, so the whole
pipeline is deterministic.

All functions are pure given ``(program, solution)`` and may run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from lro._embedding import (
    DeflatedJacobian,
    build_q_matrix,
    embedding_project,
    embedding_residual,
    residual_jacobian,
)
from lro.cones import ConeSpec, dual, project
from lro.solver import ConeProgram, ConicSolution, Status

__all__ = [
    "EmbeddingPoint",
    "build_q",
    "residual_map",
    "solution_map",
    "derivative_forward",
    "derivative_adjoint",
    "ForwardResult",
    "AdjointResult",
]

RCOND_FALLBACK = 1e-10


@dataclass(frozen=True)
class EmbeddingPoint:
    """Point ``z = (u, v, w)`` of the homogeneous self-dual embedding."""

    u: np.ndarray
    v: np.ndarray
    w: float

    @classmethod
    def from_vector(cls, z: np.ndarray, n: int) -> "EmbeddingPoint":
        return cls(np.asarray(z[:n], dtype=float), np.asarray(z[n:-1], dtype=float), float(z[-1]))

    @classmethod
    def from_solution(cls, sol: ConicSolution) -> "EmbeddingPoint":
        n = sol.x.shape[0]
        return cls.from_vector(sol.z, n)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.u, self.v, [self.w]])

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def total_dim(self) -> int:
        return self.u.shape[0] + self.v.shape[0] + 1


def build_q(prog: ConeProgram) -> sp.csc_matrix:
    """Skew-symmetric data matrix of the embedding."""
    return build_q_matrix(prog.g, prog.h, prog.c)


def residual_map(z: EmbeddingPoint, q: sp.spmatrix, cones: ConeSpec) -> np.ndarray:
    """Normalized residual ``((Q - I) Pi + I)(z / |w|)``; zero exactly at solutions."""
    return embedding_residual(z.as_vector(), q, z.n, cones)


def solution_map(z: EmbeddingPoint, cones: ConeSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map an embedding point with ``w > 0`` to ``(x, r, s)``."""
    if z.w <= 0:
        raise ValueError("solution map requires w > 0")
    pv = project(z.v, dual(cones))
    return z.u / z.w, pv / z.w, (pv - z.v) / z.w


def _require_optimal(sol: ConicSolution) -> None:
    if sol.status != Status.OPTIMAL:
        raise ValueError(f"can only differentiate optimal solutions, got {sol.status}")


def _deflated_jacobian(prog: ConeProgram, zvec: np.ndarray) -> DeflatedJacobian:
    """Residual Jacobian ``U`` with the structural homogeneous ray removed.

    ``U z = 0`` holds identically at solutions (positive homogeneity of the
    cone projection), so the meaningful operator is ``U`` restricted to
    perturbations that keep ``w`` fixed; its conditioning is what the
    nondifferentiability diagnostic reports.
    """
    u = residual_jacobian(build_q(prog), zvec, prog.n, prog.cones)
    return DeflatedJacobian(u, rcond_floor=RCOND_FALLBACK)


@dataclass
class ForwardResult:
    dx: np.ndarray
    nondifferentiable: bool
    rcond: float


@dataclass
class AdjointResult:
    """Adjoint data gradient, stored through its rank-two factors.

    ``g_G = pi_v d_u^T - d_v pi_u^T`` restricted to the structural pattern of
    the program matrix; derivatives with respect to structurally-zero entries
    of ``G`` are not tracked because no parameter of the artifact reaches
    them.
    """

    d: np.ndarray
    pi: np.ndarray
    n: int
    m: int
    g_rows: np.ndarray
    g_cols: np.ndarray
    nondifferentiable: bool
    rcond: float

    def g_entries(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Values of the G-cotangent at explicit (row, col) positions."""
        n = self.n
        du, dv = self.d[:n], self.d[n : n + self.m]
        pu, pv = self.pi[:n], self.pi[n : n + self.m]
        return pv[rows] * du[cols] - dv[rows] * pu[cols]

    @property
    def g_g(self) -> sp.csc_matrix:
        vals = self.g_entries(self.g_rows, self.g_cols)
        return sp.coo_matrix((vals, (self.g_rows, self.g_cols)), shape=(self.m, self.n)).tocsc()

    @property
    def g_h(self) -> np.ndarray:
        n = self.n
        return self.d[n : n + self.m] * self.pi[-1] - self.d[-1] * self.pi[n : n + self.m]

    @property
    def g_c(self) -> np.ndarray:
        n = self.n
        return self.d[:n] * self.pi[-1] - self.d[-1] * self.pi[:n]


def derivative_forward(
    prog: ConeProgram,
    sol: ConicSolution,
    dg: sp.spmatrix | np.ndarray,
    dh: np.ndarray,
    dc: np.ndarray,
) -> ForwardResult:
    """Directional derivative of ``x`` along a data perturbation ``(dG, dh, dc)``."""
    _require_optimal(sol)
    zvec = sol.z / sol.z[-1]
    solver = _deflated_jacobian(prog, zvec)
    pi = embedding_project(zvec, prog.n, prog.cones)
    dq = build_q_matrix(sp.csc_matrix(dg), np.asarray(dh, float), np.asarray(dc, float))
    dz = solver.solve(-(dq @ pi))
    n = prog.n
    x = zvec[:n]
    dx = dz[:n] - x * dz[-1]
    return ForwardResult(dx=dx, nondifferentiable=solver.nondifferentiable, rcond=solver.rcond)


def derivative_adjoint(prog: ConeProgram, sol: ConicSolution, g_x: np.ndarray) -> AdjointResult:
    """Adjoint of the data-to-solution map applied to an ``x`` cotangent."""
    _require_optimal(sol)
    g_x = np.asarray(g_x, dtype=float)
    if g_x.shape != (prog.n,):
        raise ValueError("cotangent must have the primal dimension")
    zvec = sol.z / sol.z[-1]
    solver = _deflated_jacobian(prog, zvec)
    pi = embedding_project(zvec, prog.n, prog.cones)
    # cotangent of dz' (w pinned): only the leading N - 1 components matter
    g_head = np.concatenate([g_x, np.zeros(prog.m)])
    d = -solver.solve_transposed(g_head)
    coo = prog.g.tocoo()
    return AdjointResult(
        d=d,
        pi=pi,
        n=prog.n,
        m=prog.m,
        g_rows=coo.row.copy(),
        g_cols=coo.col.copy(),
        nondifferentiable=solver.nondifferentiable,
        rcond=solver.rcond,
    )
