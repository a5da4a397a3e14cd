"""Shared helpers for the homogeneous self-dual embedding.

Both the solver (Newton refinement of candidate solutions) and the
differentiation module (residual-map derivatives) need the skew-symmetric
data matrix, the projection onto the embedding cone, and its Jacobian.
The embedding cone is ``R^n x K* x R_+`` for a program cone ``K`` over the
``m`` slack rows.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from lro.cones import ConeSpec, dual, project, project_jacobian

__all__ = [
    "build_q_matrix",
    "embedding_project",
    "embedding_project_jacobian",
    "embedding_residual",
    "residual_jacobian",
    "DeflatedJacobian",
]


def build_q_matrix(g: sp.spmatrix, h: np.ndarray, c: np.ndarray) -> sp.csc_matrix:
    """Skew-symmetric embedding matrix ``[[0, G^T, c], [-G, 0, h], [-c^T, -h^T, 0]]``."""
    g = sp.csc_matrix(g)
    m, n = g.shape
    c_col = sp.csc_matrix(np.asarray(c, dtype=float).reshape(n, 1))
    h_col = sp.csc_matrix(np.asarray(h, dtype=float).reshape(m, 1))
    q = sp.bmat(
        [
            [None, g.T, c_col],
            [-g, None, h_col],
            [-c_col.T, -h_col.T, None],
        ],
        format="csc",
    )
    return q


def embedding_project(z: np.ndarray, n: int, cone: ConeSpec) -> np.ndarray:
    """Projection onto ``R^n x K* x R_+`` applied to a length n + m + 1 vector."""
    m = cone.total_dim
    out = np.empty_like(z)
    out[:n] = z[:n]
    out[n : n + m] = project(z[n : n + m], dual(cone))
    out[-1] = max(z[-1], 0.0)
    return out


def embedding_project_jacobian(z: np.ndarray, n: int, cone: ConeSpec) -> np.ndarray:
    """Block-diagonal conservative-Jacobian element of :func:`embedding_project`.

    The trailing scalar follows the nonnegative-orthant tie rule (derivative
    0 at exactly zero).
    """
    m = cone.total_dim
    total = n + m + 1
    jac = np.zeros((total, total))
    jac[:n, :n] = np.eye(n)
    jac[n : n + m, n : n + m] = project_jacobian(z[n : n + m], dual(cone))
    jac[-1, -1] = 1.0 if z[-1] > 0.0 else 0.0
    return jac


def embedding_residual(z: np.ndarray, q: sp.spmatrix, n: int, cone: ConeSpec) -> np.ndarray:
    """Normalized residual ``((Q - I) Pi + I)(z / |w|)`` of the embedding."""
    w = z[-1]
    if w == 0.0:
        raise ValueError("embedding point has w = 0")
    zn = z / abs(w)
    pi = embedding_project(zn, n, cone)
    return q @ pi - pi + zn


def residual_jacobian(q: sp.spmatrix, zvec: np.ndarray, n: int, cone: ConeSpec) -> np.ndarray:
    """``U = ((Q - I) J_Pi(z) + I) / w`` for a normalized point (w = 1 at solutions)."""
    jac_pi = embedding_project_jacobian(zvec, n, cone)
    u = (q @ jac_pi) - jac_pi
    u[np.diag_indices_from(u)] += 1.0
    return u / zvec[-1]


class DeflatedJacobian:
    """QR solver for the residual Jacobian with the homogeneous ray removed.

    ``U`` annihilates the solution ray (``U z = 0`` follows from positive
    homogeneity of the projection), so square solves are structurally
    singular.  Pinning the ``w`` perturbation to zero keeps the ``N - 1``
    remaining columns, which have full rank exactly when the solution is
    unique and nondegenerate; ``rcond`` estimates their conditioning from the
    triangular factor, and rank-deficient cases fall back to minimum-norm
    least squares.
    """

    def __init__(self, u: np.ndarray, rcond_floor: float = 1e-10):
        import scipy.linalg as sla

        self._sla = sla
        self.a = u[:, :-1]
        self.qf, self.rf = sla.qr(self.a, mode="economic", check_finite=False)
        diag = np.abs(np.diag(self.rf))
        self.rcond = float(diag.min() / diag.max()) if diag.max() > 0 else 0.0
        self.nondifferentiable = not np.isfinite(self.rcond) or self.rcond < rcond_floor

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """min-norm solution of ``U (dz', 0) = rhs``; returns the full dz."""
        if self.nondifferentiable:
            dz_head = np.linalg.lstsq(self.a, rhs, rcond=None)[0]
        else:
            dz_head = self._sla.solve_triangular(
                self.rf, self.qf.T @ rhs, check_finite=False
            )
        return np.concatenate([dz_head, [0.0]])

    def solve_transposed(self, g_head: np.ndarray) -> np.ndarray:
        """min-norm solution of ``A^T d = g`` for the deflated block ``A``."""
        if self.nondifferentiable:
            return np.linalg.lstsq(self.a.T, g_head, rcond=None)[0]
        return self.qf @ self._sla.solve_triangular(
            self.rf, g_head, trans="T", check_finite=False
        )
