"""Sparse LDL^T factorization for symmetric quasidefinite matrices.

Up-looking factorization in the style of the classic LDL kernel: a symbolic
pass computes the elimination tree and column counts from the sparsity
pattern, a numeric pass fills L and D.  Quasidefinite matrices factor without
pivoting under any symmetric permutation, so none is applied.

The conic solver factors the embedding matrix ``[[I, -G^T], [-G, -I]]`` once
per program solve; thousands of programs in a training run share one sparsity
pattern, so symbolic analysis is cached per pattern.  The inner loops are
compiled with numba when available and fall back to pure Python otherwise.
"""

from __future__ import annotations

import hashlib

import numpy as np
import scipy.sparse as sp

__all__ = ["SymbolicLDL", "LDLFactor", "analyze", "factorize", "quasidefinite_kkt"]

try:  # pragma: no cover - exercised implicitly
    import numba

    _njit = numba.njit(cache=True)
except Exception:  # pragma: no cover
    def _njit(f):
        return f


@_njit
def _analyze_kernel(n, Ap, Ai, parent, Lnz, flag):
    for j in range(n):
        parent[j] = -1
        flag[j] = j
        Lnz[j] = 0
        for p in range(Ap[j], Ap[j + 1]):
            i = Ai[p]
            while i < j and flag[i] != j:
                if parent[i] == -1:
                    parent[i] = j
                Lnz[i] += 1
                flag[i] = j
                i = parent[i]


@_njit
def _factor_kernel(n, Ap, Ai, Ax, parent, Lp, Li, Lx, D, Y, pattern, flag, lnz_used):
    for j in range(n):
        Y[j] = 0.0
        top = n
        flag[j] = j
        lnz_used[j] = 0
        for p in range(Ap[j], Ap[j + 1]):
            i = Ai[p]
            if i > j:
                continue
            Y[i] += Ax[p]
            length = 0
            while flag[i] != j:
                pattern[length] = i
                length += 1
                flag[i] = j
                i = parent[i]
            while length > 0:
                length -= 1
                top -= 1
                pattern[top] = pattern[length]
        D[j] = Y[j]
        Y[j] = 0.0
        for s in range(top, n):
            i = pattern[s]
            yi = Y[i]
            Y[i] = 0.0
            p2 = Lp[i] + lnz_used[i]
            for p in range(Lp[i], p2):
                Y[Li[p]] -= Lx[p] * yi
            lji = yi / D[i]
            D[j] -= lji * yi
            Li[p2] = j
            Lx[p2] = lji
            lnz_used[i] += 1
        if D[j] == 0.0:
            return j
    return -1


@_njit
def _solve_kernel(n, Lp, Li, Lx, Lnz, D, b):
    for j in range(n):  # L y = b
        bj = b[j]
        for p in range(Lp[j], Lp[j] + Lnz[j]):
            b[Li[p]] -= Lx[p] * bj
    for j in range(n):  # D z = y
        b[j] /= D[j]
    for j in range(n - 1, -1, -1):  # L^T x = z
        acc = b[j]
        for p in range(Lp[j], Lp[j] + Lnz[j]):
            acc -= Lx[p] * b[Li[p]]
        b[j] = acc


class SymbolicLDL:
    """Elimination tree and column counts for one sparsity pattern."""

    def __init__(self, n: int, parent: np.ndarray, Lnz: np.ndarray):
        self.n = n
        self.parent = parent
        self.Lnz = Lnz
        self.Lp = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(Lnz, out=self.Lp[1:])
        self.nnz_l = int(self.Lp[-1])


def analyze(a_upper: sp.csc_matrix) -> SymbolicLDL:
    """Symbolic analysis of the upper-triangular pattern of a symmetric matrix."""
    n = a_upper.shape[0]
    parent = np.empty(n, dtype=np.int64)
    Lnz = np.zeros(n, dtype=np.int64)
    flag = np.empty(n, dtype=np.int64)
    _analyze_kernel(
        n, a_upper.indptr.astype(np.int64), a_upper.indices.astype(np.int64),
        parent, Lnz, flag,
    )
    return SymbolicLDL(n, parent, Lnz)


class LDLFactor:
    """Numeric LDL^T factor; ``solve`` applies L^{ -1}, D^{-1}, L^{-T}."""

    def __init__(self, symbolic: SymbolicLDL, Li, Lx, D, Lnz_used):
        self.symbolic = symbolic
        self.Li = Li
        self.Lx = Lx
        self.D = D
        self.Lnz = Lnz_used

    def solve(self, b: np.ndarray) -> np.ndarray:
        x = np.array(b, dtype=float, copy=True)
        s = self.symbolic
        _solve_kernel(s.n, s.Lp, self.Li, self.Lx, self.Lnz, self.D, x)
        return x


def factorize(a_upper: sp.csc_matrix, symbolic: SymbolicLDL | None = None) -> LDLFactor:
    """Factor a symmetric matrix given by its upper triangle in CSC form."""
    a_upper = a_upper.tocsc()
    a_upper.sort_indices()
    if symbolic is None:
        symbolic = analyze(a_upper)
    n = symbolic.n
    Li = np.empty(symbolic.nnz_l, dtype=np.int64)
    Lx = np.empty(symbolic.nnz_l)
    D = np.empty(n)
    Y = np.zeros(n)
    pattern = np.empty(n, dtype=np.int64)
    flag = np.empty(n, dtype=np.int64)
    lnz_used = np.zeros(n, dtype=np.int64)
    bad = _factor_kernel(
        n, a_upper.indptr.astype(np.int64), a_upper.indices.astype(np.int64),
        np.ascontiguousarray(a_upper.data, dtype=float),
        symbolic.parent, symbolic.Lp, Li, Lx, D, Y, pattern, flag, lnz_used,
    )
    if bad >= 0:
        raise np.linalg.LinAlgError(f"zero pivot at column {bad}")
    return LDLFactor(symbolic, Li, Lx, D, lnz_used)


_symbolic_cache: dict[bytes, SymbolicLDL] = {}


def pattern_key(a_upper: sp.csc_matrix) -> bytes:
    h = hashlib.sha1()
    h.update(np.int64(a_upper.shape[0]).tobytes())
    h.update(a_upper.indptr.tobytes())
    h.update(a_upper.indices.tobytes())
    return h.digest()


def cached_symbolic(a_upper: sp.csc_matrix) -> SymbolicLDL:
    key = pattern_key(a_upper)
    sym = _symbolic_cache.get(key)
    if sym is None:
        sym = analyze(a_upper)
        _symbolic_cache[key] = sym
    return sym


def quasidefinite_kkt(g: sp.spmatrix) -> sp.csc_matrix:
    """Upper triangle of ``[[I, -G^T], [-G, -I]]`` for a program matrix G.

    Leaving the lower-left block empty yields exactly the upper triangle the
    factorization consumes; the matrix is quasidefinite (diagonal +1 / -1),
    so the factorization needs no pivoting.
    """
    g = sp.csc_matrix(g)
    m, n = g.shape
    out = sp.bmat(
        [[sp.identity(n), -g.T], [None, -sp.identity(m)]], format="csc"
    )
    out.sort_indices()
    return out
