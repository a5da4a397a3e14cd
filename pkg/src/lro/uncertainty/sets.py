"""Uncertainty-set data model.

Every set describes uncertain vectors ``u = A z + b`` for a latent ``z``
constrained by the variant (norm ball, budget pair, polyhedron, or clustered
transport budget), optionally intersected with a box support on ``u``.  The
reshaping matrix ``A`` and center ``b`` are always part of the trainable
parameter vector; budget radii and the transport radius enter the cone data
affinely as well and are trainable for those variants.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "BoxSupport",
    "UncertaintySet",
    "Box",
    "Ellipsoidal",
    "Budget",
    "Polyhedral",
    "MRO",
]


class BoxSupport:
    """Axis-aligned support bounds ``lb <= u <= ub`` intersected with the set."""

    def __init__(self, lb, ub):
        self.lb = np.asarray(lb, dtype=float).ravel()
        self.ub = np.asarray(ub, dtype=float).ravel()
        if self.lb.shape != self.ub.shape:
            raise ValueError("support bounds must have equal length")
        if np.any(self.lb > self.ub):
            raise ValueError("support lower bounds exceed upper bounds")

    def contains(self, u: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        u = np.atleast_2d(u)
        return np.all((u >= self.lb - tol) & (u <= self.ub + tol), axis=1)


class UncertaintySet:
    """Base for all variants; holds the affine reshaping ``(A, b)``."""

    variant = "base"

    def __init__(self, a, b, support: BoxSupport | None = None):
        self.a = np.atleast_2d(np.asarray(a, dtype=float))
        self.b = np.asarray(b, dtype=float).ravel()
        if self.a.shape[0] != self.b.shape[0]:
            raise ValueError("A and b must agree on the uncertainty dimension")
        self.support = support
        if support is not None and support.lb.shape[0] != self.m:
            raise ValueError("support dimension mismatch")

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def m_hat(self) -> int:
        return self.a.shape[1]

    # -- flat parameter vector ------------------------------------------------
    def _radii(self) -> np.ndarray:
        return np.empty(0)

    def _with_radii(self, radii: np.ndarray) -> dict:
        return {}

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([self.a.ravel(), self.b, self._radii()])

    @property
    def theta_size(self) -> int:
        return self.m * self.m_hat + self.m + self._radii().shape[0]

    def trainable_mask(self) -> np.ndarray:
        return np.ones(self.theta_size, dtype=bool)

    def with_theta(self, theta: np.ndarray) -> "UncertaintySet":
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.shape[0] != self.theta_size:
            raise ValueError("theta length mismatch")
        na = theta[: self.m * self.m_hat].reshape(self.m, self.m_hat)
        nb = theta[self.m * self.m_hat : self.m * self.m_hat + self.m]
        radii = theta[self.m * self.m_hat + self.m :]
        return self._rebuild(na, nb, radii)

    def _rebuild(self, a, b, radii) -> "UncertaintySet":
        raise NotImplementedError

    def scaled(self, rho: float) -> "UncertaintySet":
        """Homothety of the set body: ``A <- rho A`` (radius-carrying variants
        scale their radius instead)."""
        return self._rebuild(rho * self.a, self.b, self._radii())

    # -- sampling --------------------------------------------------------------
    def _sample_z(self, rng: np.random.Generator, count: int, boundary: bool) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, count: int, boundary: bool = True) -> np.ndarray:
        """Draw ``u`` points from the set (its boundary by default).

        With a box support, draws are rejected until they satisfy the bounds;
        points are a subset of the set either way, so any maximum over them
        lower-bounds the true worst case.
        """
        out = np.empty((0, self.m))
        attempts = 0
        while out.shape[0] < count and attempts < 60:
            z = self._sample_z(rng, count, boundary)
            u = z @ self.a.T + self.b
            if self.support is not None:
                u = u[self.support.contains(u)]
            out = np.vstack([out, u])
            attempts += 1
        return out[:count]


class Ellipsoidal(UncertaintySet):
    """Norm-ball set ``{A z + b : ||z||_p <= 1}`` for p in {1, 2, inf}."""

    variant = "ellipsoidal"

    def __init__(self, a, b, p: float = 2, support: BoxSupport | None = None):
        super().__init__(a, b, support)
        if p not in (1, 2) and not np.isinf(p):
            raise ValueError("only p in {1, 2, inf} is supported")
        self.p = float(p)

    def _rebuild(self, a, b, radii):
        return Ellipsoidal(a, b, p=self.p, support=self.support)

    def _sample_z(self, rng, count, boundary):
        z = rng.normal(size=(count, self.m_hat))
        if np.isinf(self.p):
            norms = np.abs(z).max(axis=1)
        else:
            norms = np.linalg.norm(z, ord=self.p, axis=1)
        norms[norms == 0] = 1.0
        z = z / norms[:, None]
        if not boundary:
            z *= rng.uniform(0.0, 1.0, size=(count, 1)) ** (1.0 / max(self.m_hat, 1))
        return z


class Box(Ellipsoidal):
    """Box set: the p = inf norm ball."""

    variant = "box"

    def __init__(self, a, b, support: BoxSupport | None = None):
        super().__init__(a, b, p=np.inf, support=support)

    def _rebuild(self, a, b, radii):
        return Box(a, b, support=self.support)


class Budget(UncertaintySet):
    """Intersection ``{A z + b : ||z||_inf <= rho1, ||z||_1 <= rho2}``."""

    variant = "budget"

    def __init__(self, a, b, rho1: float, rho2: float, support: BoxSupport | None = None):
        super().__init__(a, b, support)
        if rho1 < 0 or rho2 < 0:
            raise ValueError("budget radii must be nonnegative")
        self.rho1 = float(rho1)
        self.rho2 = float(rho2)

    def _radii(self):
        return np.array([self.rho1, self.rho2])

    def _rebuild(self, a, b, radii):
        rho1, rho2 = (radii if len(radii) == 2 else (self.rho1, self.rho2))
        return Budget(a, b, rho1=float(rho1), rho2=float(rho2), support=self.support)

    def _sample_z(self, rng, count, boundary):
        d = rng.normal(size=(count, self.m_hat))
        tmax = np.minimum(
            self.rho1 / np.maximum(np.abs(d).max(axis=1), 1e-300),
            self.rho2 / np.maximum(np.abs(d).sum(axis=1), 1e-300),
        )
        t = tmax if boundary else tmax * rng.uniform(0, 1, size=count)
        return d * t[:, None]


class Polyhedral(UncertaintySet):
    """Polyhedral latent constraint ``{A z + b : D z <= d}``.

    ``D`` and ``d`` describe the fixed polyhedron; the trainable reshaping is
    still ``(A, b)``.
    """

    variant = "polyhedral"

    def __init__(self, a, b, d_mat, d_vec, support: BoxSupport | None = None):
        super().__init__(a, b, support)
        self.d_mat = np.atleast_2d(np.asarray(d_mat, dtype=float))
        self.d_vec = np.asarray(d_vec, dtype=float).ravel()
        if self.d_mat.shape != (self.d_vec.shape[0], self.m_hat):
            raise ValueError("polyhedron dimensions inconsistent with A")

    def _rebuild(self, a, b, radii):
        return Polyhedral(a, b, self.d_mat, self.d_vec, support=self.support)

    def _sample_z(self, rng, count, boundary):
        # rays from the origin scaled to the first violated face
        d = rng.normal(size=(count, self.m_hat))
        rates = d @ self.d_mat.T
        with np.errstate(divide="ignore"):
            steps = np.where(rates > 1e-12, self.d_vec / np.where(rates > 1e-12, rates, 1.0), np.inf)
        t = steps.min(axis=1)
        t[~np.isfinite(t)] = 1e3  # unbounded direction: stay a valid inner point
        if not boundary:
            t = t * rng.uniform(0, 1, size=count)
        return d * t[:, None]


class MRO(UncertaintySet):
    """Clustered transport-budget set around centroids with cluster weights.

    Holds ``K`` centroids with simplex weights and a radius ``rho`` bounding
    the weighted mean distance (exponent fixed to 1, the Wasserstein-1
    specialization); requires a square reshaping matrix.
    """

    variant = "mro"

    def __init__(self, a, b, centroids, weights, rho: float, p: int = 1,
                 support: BoxSupport | None = None):
        super().__init__(a, b, support)
        if self.m != self.m_hat:
            raise ValueError("the clustered variant requires a square A")
        if p != 1:
            raise ValueError("only exponent p = 1 is supported")
        self.centroids = np.atleast_2d(np.asarray(centroids, dtype=float))
        self.weights = np.asarray(weights, dtype=float).ravel()
        if self.centroids.shape != (self.weights.shape[0], self.m):
            raise ValueError("centroid/weight dimensions inconsistent")
        if np.any(self.weights < -1e-12) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must lie on the simplex")
        if rho < 0:
            raise ValueError("radius must be nonnegative")
        self.rho = float(rho)
        self.p = 1

    @property
    def n_clusters(self) -> int:
        return self.weights.shape[0]

    def _radii(self):
        return np.array([self.rho])

    def _rebuild(self, a, b, radii):
        rho = float(radii[0]) if len(radii) == 1 else self.rho
        return MRO(a, b, self.centroids, self.weights, rho=rho, support=self.support)

    def scaled(self, rho: float) -> "MRO":
        return MRO(self.a, self.b, self.centroids, self.weights,
                   rho=rho * self.rho, support=self.support)

    def sample_configurations(self, rng: np.random.Generator, count: int,
                              boundary: bool = True) -> np.ndarray:
        """Cluster configurations ``v`` with weighted mean distance <= rho.

        Returns an array of shape (count, K, m); the weighted max-atom value
        over such a configuration lower-bounds the robust constraint.
        """
        k, m = self.n_clusters, self.m
        dirs = rng.normal(size=(count, k, m))
        # weighted transport cost per configuration
        cost = (np.linalg.norm(dirs, axis=2) * self.weights).sum(axis=1)
        cost[cost == 0] = 1.0
        scale = self.rho / cost
        if not boundary:
            scale = scale * rng.uniform(0, 1, size=count)
        return self.centroids[None, :, :] + dirs * scale[:, None, None]

    def _sample_z(self, rng, count, boundary):
        raise NotImplementedError("pointwise sampling is undefined; use sample_configurations")
