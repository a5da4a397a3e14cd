"""Operator-splitting solver for standard-form cone programs.

Solves ``min c^T x  s.t.  G x + s = h, s in K`` together with its dual by
Douglas-Rachford splitting on the homogeneous self-dual embedding: alternate
a linear solve with ``I + Q`` (reduced to a sparse LDL^T of the quasidefinite
matrix ``[[I, -G^T], [-G, -I]]`` plus a rank-one update) and a projection onto
``R^n x K* x R_+``.  Candidate solutions are refined with a Gauss-Newton step
on the embedding residual, which typically reaches tolerances well beyond
what plain splitting delivers in reasonable time.

A solver run is a pure function of its inputs; distinct calls may run
concurrently.  The symbolic sparsity analysis of the embedding matrix is
cached per pattern, so families of programs sharing one structure (as the
training loop produces) only pay for numeric refactorization.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from lro import ldlt
from lro._embedding import (
    DeflatedJacobian,
    build_q_matrix,
    embedding_project,
    embedding_residual,
    residual_jacobian,
)
from lro.cones import ConeSpec, dual, project

__all__ = [
    "ConeProgram",
    "ConicSolution",
    "SolverSettings",
    "Status",
    "solve",
    "residuals",
    "objective_value",
    "dump_program",
    "load_program",
]


class Status(str, Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass
class ConeProgram:
    """Standard-form cone program data ``(G, h, c)`` with cone ``K``."""

    g: sp.csc_matrix
    h: np.ndarray
    c: np.ndarray
    cones: ConeSpec

    def __post_init__(self) -> None:
        self.g = sp.csc_matrix(self.g)
        self.h = np.asarray(self.h, dtype=float).ravel()
        self.c = np.asarray(self.c, dtype=float).ravel()
        m, n = self.g.shape
        if self.h.shape[0] != m or self.c.shape[0] != n:
            raise ValueError("inconsistent program dimensions")
        if self.cones.free_dim != 0:
            raise ValueError("program cones cannot contain free rows")
        if self.cones.total_dim != m:
            raise ValueError(
                f"cone dimension {self.cones.total_dim} does not match m = {m}"
            )

    @property
    def m(self) -> int:
        return self.g.shape[0]

    @property
    def n(self) -> int:
        return self.g.shape[1]


@dataclass
class ConicSolution:
    """Primal/dual solution with the embedding point used for differentiation."""

    x: np.ndarray
    r: np.ndarray
    s: np.ndarray
    z: np.ndarray
    status: Status
    primal_res: float
    dual_res: float
    gap: float
    iterations: int
    solve_time: float
    info: dict = field(default_factory=dict)


def objective_value(prog: ConeProgram, sol: ConicSolution) -> float:
    return float(prog.c @ sol.x)


@dataclass
class SolverSettings:
    max_iter: int = 50_000
    tol: float = 1e-8
    scaling: bool = True
    relaxation: float = 1.5
    check_every: int = 25
    polish: bool = True
    ruiz_iters: int = 10
    cert_tol_factor: float = 1.0

    def __post_init__(self) -> None:
        if not 1.0 <= self.relaxation < 2.0:
            raise ValueError("relaxation must lie in [1, 2)")


def residuals(prog: ConeProgram, sol: ConicSolution) -> tuple[float, float, float]:
    """Normalized primal/dual residuals and duality gap of a candidate."""
    return _residuals(prog.g, prog.h, prog.c, sol.x, sol.r, sol.s)


def _residuals(g, h, c, x, r, s) -> tuple[float, float, float]:
    ctx = float(c @ x)
    primal = np.linalg.norm(g @ x + s - h) / (1.0 + np.linalg.norm(h))
    dvec = g.T @ r + c
    dual_res = np.linalg.norm(dvec) / (1.0 + np.linalg.norm(c))
    gap = abs(ctx + float(h @ r)) / (1.0 + abs(ctx))
    return float(primal), float(dual_res), float(gap)


def _ruiz_equilibrate(g: sp.csc_matrix, cone: ConeSpec, iters: int):
    """Cone-block-uniform row scaling and column scaling with unit target norms."""
    m, n = g.shape
    d = np.ones(m)
    e = np.ones(n)
    blocks: list[np.ndarray] = []
    i = cone.zero_dim + cone.nonneg_dim
    for dim in cone.soc_dims:
        blocks.append(np.arange(i, i + dim))
        i += dim
    work = g.copy().tocsr()
    for _ in range(iters):
        row_norms = np.zeros(m)
        absw = abs(work)
        row_norms = absw.max(axis=1).toarray().ravel()
        for idx in blocks:  # one scalar per second-order block keeps the cone intact
            row_norms[idx] = row_norms[idx].max()
        row_norms[row_norms == 0] = 1.0
        dr = 1.0 / np.sqrt(row_norms)
        work = sp.diags(dr) @ work
        d *= dr
        col_norms = abs(work).max(axis=0).toarray().ravel()
        col_norms[col_norms == 0] = 1.0
        de = 1.0 / np.sqrt(col_norms)
        work = work @ sp.diags(de)
        e *= de
        if np.abs(1.0 - row_norms).max() < 1e-4 and np.abs(1.0 - col_norms).max() < 1e-4:
            break
    return work.tocsc(), d, e


class _LinearOperator:
    """Solves ``(I + Q) z = w`` via LDL^T of the quasidefinite core.

    Eliminating the homogeneous scalar reduces ``I + Q`` to
    ``M = [[I, G^T], [-G, I]]`` plus the rank-one term ``q q^T`` with
    ``q = (c, h)``; ``M`` itself maps to the symmetric quasidefinite matrix
    ``[[I, -G^T], [-G, -I]]`` by flipping the sign of the second block of the
    solution.
    """

    def __init__(self, g: sp.csc_matrix, h: np.ndarray, c: np.ndarray):
        self.n = g.shape[1]
        self.m = g.shape[0]
        upper = ldlt.quasidefinite_kkt(g)
        self.factor = ldlt.factorize(upper, symbolic=ldlt.cached_symbolic(upper))
        self.q = np.concatenate([c, h])
        self.mq = self._m_solve(self.q)
        self.denom = 1.0 + float(self.q @ self.mq)

    def _m_solve(self, rhs: np.ndarray) -> np.ndarray:
        out = self.factor.solve(rhs)
        out[self.n:] = -out[self.n:]
        return out

    def solve(self, w: np.ndarray) -> np.ndarray:
        rhs = w[:-1] - w[-1] * self.q
        mr = self._m_solve(rhs)
        zhat = mr - self.mq * (float(self.q @ mr) / self.denom)
        z3 = w[-1] + float(self.q @ zhat)
        return np.concatenate([zhat, [z3]])


def _polish(q, n, cone, z0, g, h, c, tol, max_steps=6):
    """Gauss-Newton refinement of the embedding residual at fixed w = 1."""
    z = z0 / z0[-1]
    best = _extract(z, n, cone)
    best_res = max(_residuals(g, h, c, *best))
    for _ in range(max_steps):
        resid = embedding_residual(z, q, n, cone)
        solver = DeflatedJacobian(residual_jacobian(q, z, n, cone))
        step = solver.solve(-resid)[:-1]
        improved = False
        for alpha in (1.0, 0.5, 0.25, 0.125):
            z_try = z.copy()
            z_try[:-1] += alpha * step
            if z_try[-1] <= 0:
                continue
            cand = _extract(z_try / z_try[-1], n, cone)
            cand_res = max(_residuals(g, h, c, *cand))
            if cand_res < best_res:
                z = z_try / z_try[-1]
                best, best_res = cand, cand_res
                improved = True
                break
        if not improved or best_res <= 0.01 * tol:
            break
    return best, best_res


def _extract(z, n, cone):
    """Map an embedding point with w > 0 to (x, r, s)."""
    w = z[-1]
    v = z[n:-1]
    pv = project(v, dual(cone))
    return z[:n] / w, pv / w, (pv - v) / w


def solve(
    prog: ConeProgram,
    settings: SolverSettings | None = None,
    init: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> ConicSolution:
    """Solve a cone program; ``init`` optionally warm-starts from (x, r, s)."""
    settings = settings or SolverSettings()
    t0 = time.perf_counter()
    m, n = prog.m, prog.n
    cone = prog.cones

    if settings.scaling:
        gs, d, e = _ruiz_equilibrate(prog.g, cone, settings.ruiz_iters)
    else:
        gs, d, e = prog.g, np.ones(m), np.ones(n)
    hs = d * prog.h
    cs = e * prog.c

    lin = _LinearOperator(gs, hs, cs)
    q_scaled = build_q_matrix(gs, hs, cs)
    q_orig = None  # built lazily for polish

    total = n + m + 1
    u = np.zeros(total)
    v = np.zeros(total)
    if init is not None:
        x0, r0, s0 = init
        u[:n] = x0 / e
        u[n:-1] = r0 / d
        u[-1] = 1.0
        v[n:-1] = d * s0
    else:
        u[-1] = 1.0

    alpha = settings.relaxation
    best = None
    best_res = np.inf
    status = Status.MAX_ITER
    iterations = settings.max_iter
    tol = settings.tol
    polish_from = 1e-3

    for t in range(1, settings.max_iter + 1):
        utilde = lin.solve(u + v)
        ubar = alpha * utilde + (1.0 - alpha) * u
        u = embedding_project(ubar - v, n, cone)
        v = v - ubar + u

        if t % settings.check_every != 0 and t != settings.max_iter:
            continue

        tau = u[-1]
        unorm = np.linalg.norm(u)
        if tau > 1e-9 * max(unorm, 1.0):
            x = e * (u[:n] / tau)
            r = d * (u[n:-1] / tau)
            s = (v[n:-1] / tau) / d
            cand_res = max(_residuals(prog.g, prog.h, prog.c, x, r, s))
            if cand_res < best_res:
                best, best_res = (x, r, s), cand_res
            if best_res <= tol:
                status = Status.OPTIMAL
                iterations = t
                break
            if settings.polish and cand_res <= polish_from:
                if q_orig is None:
                    q_orig = build_q_matrix(prog.g, prog.h, prog.c)
                z_cand = np.concatenate([x, r - s, [1.0]])
                pol, pol_res = _polish(q_orig, n, cone, z_cand, prog.g, prog.h, prog.c, tol)
                if pol_res < best_res:
                    best, best_res = pol, pol_res
                if best_res <= tol:
                    status = Status.OPTIMAL
                    iterations = t
                    break
                polish_from /= 10.0  # retry only once meaningfully closer
        else:
            # homogeneous ray: look for infeasibility / unboundedness certificates
            x_ray = e * u[:n]
            y_ray = d * u[n:-1]
            s_ray = v[n:-1] / d
            cert = settings.cert_tol_factor * max(tol, 1e-9)
            hty = float(prog.h @ y_ray)
            ctx = float(prog.c @ x_ray)
            if hty < 0 and np.linalg.norm(prog.g.T @ y_ray) <= cert * (-hty) * max(
                1.0, np.linalg.norm(prog.h)
            ):
                status = Status.INFEASIBLE
                iterations = t
                best = (x_ray, y_ray, s_ray)
                break
            if ctx < 0 and np.linalg.norm(prog.g @ x_ray + s_ray) <= cert * (-ctx) * max(
                1.0, np.linalg.norm(prog.c)
            ):
                status = Status.UNBOUNDED
                iterations = t
                best = (x_ray, y_ray, s_ray)
                break

    if best is None:
        best = (np.full(n, np.nan), np.full(m, np.nan), np.full(m, np.nan))
    x, r, s = best
    if status in (Status.OPTIMAL, Status.MAX_ITER):
        primal, dual_res, gap = _residuals(prog.g, prog.h, prog.c, x, r, s)
    else:
        primal = dual_res = gap = float("nan")
    z = np.concatenate([x, r - s, [1.0]])
    return ConicSolution(
        x=x,
        r=r,
        s=s,
        z=z,
        status=status,
        primal_res=primal,
        dual_res=dual_res,
        gap=gap,
        iterations=iterations,
        solve_time=time.perf_counter() - t0,
        info={"scaled": settings.scaling},
    )


def dump_program(prog: ConeProgram, path) -> None:
    """Write program data as plain text: triplets, then h, c, cone blocks."""
    coo = prog.g.tocoo()
    lines = [f"{prog.n} {prog.m} {coo.nnz}"]
    for i, j, val in zip(coo.row, coo.col, coo.data):
        lines.append(f"{i} {j} {float(val)!r}")
    lines.append("h " + " ".join(repr(float(v)) for v in prog.h))
    lines.append("c " + " ".join(repr(float(v)) for v in prog.c))
    if prog.cones.zero_dim:
        lines.append(f"zero {prog.cones.zero_dim}")
    if prog.cones.nonneg_dim:
        lines.append(f"nonneg {prog.cones.nonneg_dim}")
    if prog.cones.soc_dims:
        lines.append("soc " + " ".join(str(dd) for dd in prog.cones.soc_dims))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_program(path) -> ConeProgram:
    with open(path, encoding="utf-8") as fh:
        tokens = [line.split() for line in fh if line.strip()]
    n, m, nnz = (int(t) for t in tokens[0])
    rows, cols, vals = [], [], []
    for entry in tokens[1 : 1 + nnz]:
        rows.append(int(entry[0]))
        cols.append(int(entry[1]))
        vals.append(float(entry[2]))
    h = c = None
    zero = nonneg = 0
    socs: tuple[int, ...] = ()
    for entry in tokens[1 + nnz :]:
        key, rest = entry[0], entry[1:]
        if key == "h":
            h = np.array([float(v) for v in rest])
        elif key == "c":
            c = np.array([float(v) for v in rest])
        elif key == "zero":
            zero = int(rest[0])
        elif key == "nonneg":
            nonneg = int(rest[0])
        elif key == "soc":
            socs = tuple(int(v) for v in rest)
    g = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsc()
    return ConeProgram(g, h, c, ConeSpec(zero_dim=zero, nonneg_dim=nonneg, soc_dims=socs))
