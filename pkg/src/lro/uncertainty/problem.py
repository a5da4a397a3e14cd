"""Robust-problem data model: uncertain constraint atoms and convex objective.

The single uncertain constraint is the maximum of ``L`` atoms, each affine in
the uncertain vector ``u`` and jointly affine in the decision ``x`` and the
family parameter ``y``:

    g_l(x, u, y) = x^T F_l u + (Dy_l^T y + d_l)^T u + a_l^T x + e_l^T y + c_l.

The objective is linear plus weighted l1/l2 distance terms; deterministic
constraints are affine rows whose coefficients may themselves be affine in
``y`` (which is how decision-times-family products are modeled after lifting
them into auxiliary variables).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from lro.uncertainty.sets import MRO, Ellipsoidal, UncertaintySet

__all__ = [
    "UncertainAtom",
    "NormAtom",
    "LinearConstraint",
    "RobustProblem",
    "eval_constraint",
    "constraint_values",
    "worst_case_value",
]


@dataclass
class UncertainAtom:
    """One affine piece of the max-of-affine uncertain constraint."""

    f: np.ndarray  # (n, m) coefficient of x (x) u
    d: np.ndarray  # (m,) constant u coefficient
    a: np.ndarray  # (n,) x coefficient
    dy: np.ndarray | None = None  # (p_y, m) y-linear u coefficient
    e: np.ndarray | None = None  # (p_y,) y coefficient
    c: float = 0.0

    def __post_init__(self):
        self.f = np.atleast_2d(np.asarray(self.f, dtype=float))
        self.d = np.asarray(self.d, dtype=float).ravel()
        self.a = np.asarray(self.a, dtype=float).ravel()
        if self.dy is not None:
            self.dy = np.atleast_2d(np.asarray(self.dy, dtype=float))
        if self.e is not None:
            self.e = np.asarray(self.e, dtype=float).ravel()
        self.c = float(self.c)

    def u_coefficient(self, x: np.ndarray, y: np.ndarray | None) -> np.ndarray:
        """P_l(x, y): the coefficient of ``u`` at a fixed decision."""
        p = self.f.T @ x + self.d
        if self.dy is not None and y is not None:
            p = p + self.dy.T @ y
        return p

    def affine_part(self, x: np.ndarray, y: np.ndarray | None) -> float:
        out = float(self.a @ x) + self.c
        if self.e is not None and y is not None:
            out += float(self.e @ y)
        return out

    def grad_x(self, u: np.ndarray) -> np.ndarray:
        return self.f @ u + self.a


@dataclass
class NormAtom:
    """Objective term ``weight * || M x - (M_y y + offset) ||_{1 or 2}``."""

    weight: float
    mat: np.ndarray  # (k, n)
    mat_y: np.ndarray | None = None  # (k, p_y)
    offset: np.ndarray | None = None  # (k,)
    kind: str = "l1"

    def __post_init__(self):
        self.mat = np.atleast_2d(np.asarray(self.mat, dtype=float))
        if self.mat_y is not None:
            self.mat_y = np.atleast_2d(np.asarray(self.mat_y, dtype=float))
        if self.offset is not None:
            self.offset = np.asarray(self.offset, dtype=float).ravel()
        if self.kind not in ("l1", "l2"):
            raise ValueError("norm atom kind must be 'l1' or 'l2'")
        self.weight = float(self.weight)

    def residual(self, x: np.ndarray, y: np.ndarray | None) -> np.ndarray:
        res = self.mat @ x
        if self.mat_y is not None and y is not None:
            res = res - self.mat_y @ y
        if self.offset is not None:
            res = res - self.offset
        return res

    def value(self, x: np.ndarray, y: np.ndarray | None) -> float:
        res = self.residual(x, y)
        ord_ = 1 if self.kind == "l1" else 2
        return self.weight * float(np.linalg.norm(res, ord_))


@dataclass
class LinearConstraint:
    """Deterministic rows ``(W0 + sum_k y_k Wy[k]) x (=|<=) rhs0 + rhs_y y``."""

    w0: np.ndarray  # (rows, n)
    rhs0: np.ndarray  # (rows,)
    wy: np.ndarray | None = None  # (p_y, rows, n)
    rhs_y: np.ndarray | None = None  # (rows, p_y)
    equality: bool = False

    def __post_init__(self):
        self.w0 = np.atleast_2d(np.asarray(self.w0, dtype=float))
        self.rhs0 = np.asarray(self.rhs0, dtype=float).ravel()
        if self.wy is not None:
            self.wy = np.asarray(self.wy, dtype=float)
            if self.wy.ndim != 3:
                raise ValueError("y-linear coefficient block must be 3-d")
        if self.rhs_y is not None:
            self.rhs_y = np.atleast_2d(np.asarray(self.rhs_y, dtype=float))

    def matrix(self, y: np.ndarray | None) -> np.ndarray:
        w = self.w0
        if self.wy is not None and y is not None:
            w = w + np.tensordot(y, self.wy, axes=(0, 0))
        return w

    def rhs(self, y: np.ndarray | None) -> np.ndarray:
        r = self.rhs0
        if self.rhs_y is not None and y is not None:
            r = r + self.rhs_y @ y
        return r


@dataclass
class RobustProblem:
    """A family of robust problems sharing structure, indexed by ``y``."""

    n: int
    m: int
    p_y: int
    atoms: list[UncertainAtom]
    c_obj: np.ndarray
    norm_atoms: list[NormAtom] = field(default_factory=list)
    constraints: list[LinearConstraint] = field(default_factory=list)
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        self.c_obj = np.asarray(self.c_obj, dtype=float).ravel()
        if self.c_obj.shape[0] != self.n:
            raise ValueError("objective dimension mismatch")
        if not self.atoms:
            raise ValueError("a robust problem needs at least one uncertain atom")
        for atom in self.atoms:
            if atom.f.shape != (self.n, self.m) or atom.a.shape[0] != self.n:
                raise ValueError("atom dimensions inconsistent with the problem")
        if self.lb is not None:
            self.lb = np.asarray(self.lb, dtype=float).ravel()
        if self.ub is not None:
            self.ub = np.asarray(self.ub, dtype=float).ravel()

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def objective_value(self, x: np.ndarray, y: np.ndarray | None = None) -> float:
        out = float(self.c_obj @ x)
        for atom in self.norm_atoms:
            out += atom.value(x, y)
        return out


def constraint_values(
    prob: RobustProblem, x: np.ndarray, u: np.ndarray, y: np.ndarray | None = None
) -> np.ndarray:
    """Per-atom constraint values over a batch of uncertainty points (N x L)."""
    u2 = np.atleast_2d(np.asarray(u, dtype=float))
    cols = []
    for atom in prob.atoms:
        p = atom.u_coefficient(x, y)
        cols.append(u2 @ p + atom.affine_part(x, y))
    return np.column_stack(cols)


def eval_constraint(
    prob: RobustProblem, x: np.ndarray, u: np.ndarray, y: np.ndarray | None = None
) -> tuple[float, int]:
    """Max over atoms and the argmax index (lowest index wins ties)."""
    vals = constraint_values(prob, x, np.atleast_2d(u), y)[0]
    idx = int(np.argmax(vals))
    return float(vals[idx]), idx


def max_constraint_values(
    prob: RobustProblem, x: np.ndarray, u: np.ndarray, y: np.ndarray | None = None
) -> np.ndarray:
    """Constraint function g = max_l g_l over a batch of u points."""
    return constraint_values(prob, x, u, y).max(axis=1)


def constraint_grad_x(
    prob: RobustProblem, x: np.ndarray, u: np.ndarray, y: np.ndarray | None = None
) -> np.ndarray:
    """One conservative-gradient element of g in x (argmax atom, lowest index)."""
    _, idx = eval_constraint(prob, x, u, y)
    return prob.atoms[idx].grad_x(np.asarray(u, dtype=float))


def worst_case_value(
    prob: RobustProblem,
    uset: UncertaintySet,
    x: np.ndarray,
    y: np.ndarray | None = None,
    n_samples: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Supremum of the constraint over the uncertainty set.

    Exact closed form for the Euclidean ball variant without support; for
    every other variant, a sampled lower bound from boundary draws, which is
    what the duality-tightness checks compare against.
    """
    if isinstance(uset, Ellipsoidal) and uset.p == 2 and uset.support is None and uset.variant == "ellipsoidal":
        vals = []
        for atom in prob.atoms:
            p = atom.u_coefficient(x, y)
            vals.append(
                atom.affine_part(x, y)
                + float(uset.b @ p)
                + float(np.linalg.norm(uset.a.T @ p, 2))
            )
        return float(max(vals))
    rng = rng or np.random.default_rng(0)
    n_samples = n_samples or 10_000
    if isinstance(uset, MRO):
        configs = uset.sample_configurations(rng, n_samples)
        total = np.zeros(n_samples)
        for k in range(uset.n_clusters):
            u_k = configs[:, k, :] @ uset.a.T + uset.b
            total += uset.weights[k] * max_constraint_values(prob, x, u_k, y)
        return float(total.max())
    u = uset.sample(rng, n_samples, boundary=True)
    if u.shape[0] == 0:
        warnings.warn("no admissible samples found in the uncertainty set")
        return float("-inf")
    return float(max_constraint_values(prob, x, u, y).max())
