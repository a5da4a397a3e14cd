"""Cone definitions, Euclidean projections, and projection Jacobians.

These kernels sit beneath both the conic solver (cone projections drive the
splitting iteration) and the differentiation machinery (projection Jacobians
assemble the residual-map derivative).  Everything here is a pure function of
immutable inputs and safe to call concurrently.

Coordinate layout of a :class:`ConeSpec` is fixed: zero block, free block,
nonnegative orthant, then one second-order cone per entry of ``soc_dims``.
A second-order cone block of size ``d`` is ordered ``(t, x)`` with
``||x||_2 <= t`` and ``x`` of length ``d - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ConeSpec", "project", "project_jacobian", "dual"]


@dataclass(frozen=True)
class ConeSpec:
    """Block structure of a direct product of standard cones."""

    zero_dim: int = 0
    free_dim: int = 0
    nonneg_dim: int = 0
    soc_dims: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "zero_dim", int(self.zero_dim))
        object.__setattr__(self, "free_dim", int(self.free_dim))
        object.__setattr__(self, "nonneg_dim", int(self.nonneg_dim))
        object.__setattr__(self, "soc_dims", tuple(int(d) for d in self.soc_dims))
        if self.zero_dim < 0 or self.free_dim < 0 or self.nonneg_dim < 0:
            raise ValueError("cone block dimensions must be nonnegative")
        if any(d < 1 for d in self.soc_dims):
            raise ValueError("second-order cone blocks must have size >= 1")

    @property
    def total_dim(self) -> int:
        return self.zero_dim + self.free_dim + self.nonneg_dim + sum(self.soc_dims)

    def _check_vector(self, v: np.ndarray) -> np.ndarray:
        v = np.ascontiguousarray(v, dtype=float)
        if v.ndim != 1 or v.shape[0] != self.total_dim:
            raise ValueError(
                f"vector of length {v.shape} does not match cone of dimension "
                f"{self.total_dim}"
            )
        return v


def _project_soc(block: np.ndarray) -> np.ndarray:
    """Closed-form projection onto one second-order cone block (t, x)."""
    t = block[0]
    x = block[1:]
    nx = np.linalg.norm(x)
    if nx <= t:
        return block.copy()
    if nx <= -t:
        return np.zeros_like(block)
    out = np.empty_like(block)
    scale = 0.5 * (1.0 + t / nx)
    out[0] = 0.5 * (nx + t)
    out[1:] = scale * x
    return out


def project(v: np.ndarray, spec: ConeSpec) -> np.ndarray:
    """Euclidean projection of ``v`` onto the cone described by ``spec``."""
    v = spec._check_vector(v)
    out = np.empty_like(v)
    i = 0
    out[i : i + spec.zero_dim] = 0.0
    i += spec.zero_dim
    out[i : i + spec.free_dim] = v[i : i + spec.free_dim]
    i += spec.free_dim
    np.maximum(v[i : i + spec.nonneg_dim], 0.0, out=out[i : i + spec.nonneg_dim])
    i += spec.nonneg_dim
    for d in spec.soc_dims:
        out[i : i + d] = _project_soc(v[i : i + d])
        i += d
    return out


def _soc_jacobian(block: np.ndarray) -> np.ndarray:
    """One conservative-Jacobian element of the second-order cone projection.

    Boundary tie rule: points with ``||x|| == t`` take the identity limit from
    the cone side, points with ``||x|| == -t`` take the zero limit from the
    polar side, mirroring the branch order of the projection itself.  Both are
    valid Clarke elements and the choice is deterministic.
    """
    d = block.shape[0]
    t = block[0]
    x = block[1:]
    nx = np.linalg.norm(x)
    if nx <= t:
        return np.eye(d)
    if nx <= -t:
        return np.zeros((d, d))
    xh = x / nx
    jac = np.empty((d, d))
    jac[0, 0] = 0.5
    jac[0, 1:] = 0.5 * xh
    jac[1:, 0] = 0.5 * xh
    jac[1:, 1:] = (0.5 * (1.0 + t / nx)) * np.eye(d - 1) - (
        0.5 * t / nx
    ) * np.outer(xh, xh)
    return jac


def project_jacobian(v: np.ndarray, spec: ConeSpec) -> np.ndarray:
    """One element of the conservative Jacobian of ``project`` at ``v``.

    Nonnegative coordinates sitting exactly at zero map to derivative 0; the
    second-order cone boundary rule is described in :func:`_soc_jacobian`.
    The returned matrix is symmetric positive semidefinite.
    """
    v = spec._check_vector(v)
    n = spec.total_dim
    jac = np.zeros((n, n))
    i = spec.zero_dim
    jac[i : i + spec.free_dim, i : i + spec.free_dim] = np.eye(spec.free_dim)
    i += spec.free_dim
    nn = v[i : i + spec.nonneg_dim]
    idx = i + np.flatnonzero(nn > 0.0)
    jac[idx, idx] = 1.0
    i += spec.nonneg_dim
    for d in spec.soc_dims:
        jac[i : i + d, i : i + d] = _soc_jacobian(v[i : i + d])
        i += d
    return jac


def dual(spec: ConeSpec) -> ConeSpec:
    """Dual cone: zero and free blocks swap, the rest are self-dual.

    Only defined for specs with at most one of ``zero_dim``/``free_dim``
    positive: with both present, swapping the counts would misplace the two
    segments.  The solver and differentiation pipeline never need the mixed
    case (program cones carry zero/nonneg/soc blocks, their duals
    free/nonneg/soc).
    """
    if spec.zero_dim > 0 and spec.free_dim > 0:
        raise ValueError("dual of a cone with both zero and free blocks is ambiguous")
    return ConeSpec(
        zero_dim=spec.free_dim,
        free_dim=spec.zero_dim,
        nonneg_dim=spec.nonneg_dim,
        soc_dims=spec.soc_dims,
    )
