"""Lowering of robust problems into standard-form cone programs.

Each uncertain atom's worst case over the set is dualized into deterministic
rows (norm caps become second-order or orthant rows, polyhedra and transport
budgets add multiplier variables), following the max-of-affine reformulations
for each set variant.  While rows are emitted, every coefficient is tracked
symbolically in the set parameter ``theta`` and the family parameter ``y``,
producing a :class:`ParamMap` that regenerates ``(G, h, c)`` at any
``(theta, y)`` with the sparsity pattern held fixed, plus its exact adjoint.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp

from lro.cones import ConeSpec
from lro.solver import ConeProgram
from lro.uncertainty.coeffs import Coef, LinExpr
from lro.uncertainty.problem import RobustProblem
from lro.uncertainty.sets import MRO, Box, Budget, Ellipsoidal, Polyhedral, UncertaintySet

__all__ = ["ParamMap", "canonicalize", "apply_param_map", "apply_param_map_adjoint"]


class ParamMap:
    """Affine map from ``(theta, y)`` to the cone program data.

    Entries are affine in ``theta`` at fixed ``y`` and vice versa; products of
    a ``theta`` component with a ``y`` component (which arise when a trained
    reshaping multiplies family-dependent data) are tracked as explicit cross
    terms, so application and adjoint stay exact.
    """

    def __init__(self, shape, cones, n_theta, n_y, g_parts, h_parts, c_parts, var_index):
        self.m, self.n = shape
        self.cones = cones
        self.n_theta = n_theta
        self.n_y = n_y
        (self.g_row, self.g_col, self.g_base,
         self.g_lin_t, self.g_lin_y, self.g_bilin) = g_parts
        (self.h_base, self.h_lin_t, self.h_lin_y, self.h_bilin) = h_parts
        (self.c_base, self.c_lin_t, self.c_lin_y, self.c_bilin) = c_parts
        self.var_index = var_index

    # -- forward ---------------------------------------------------------------
    def apply(self, theta, y=None):
        theta = np.asarray(theta, dtype=float).ravel()
        y = _as_y(y, self.n_y)
        if theta.shape[0] != self.n_theta:
            raise ValueError("theta length mismatch")
        gv = self.g_base.copy()
        _accumulate(gv, self.g_lin_t, theta)
        _accumulate(gv, self.g_lin_y, y)
        _accumulate_bilin(gv, self.g_bilin, theta, y)
        g = sp.coo_matrix((gv, (self.g_row, self.g_col)), shape=(self.m, self.n)).tocsc()
        h = self.h_base.copy()
        _accumulate(h, self.h_lin_t, theta)
        _accumulate(h, self.h_lin_y, y)
        _accumulate_bilin(h, self.h_bilin, theta, y)
        c = self.c_base.copy()
        _accumulate(c, self.c_lin_t, theta)
        _accumulate(c, self.c_lin_y, y)
        _accumulate_bilin(c, self.c_bilin, theta, y)
        return g, h, c

    def apply_program(self, theta, y=None) -> ConeProgram:
        g, h, c = self.apply(theta, y)
        return ConeProgram(g, h, c, self.cones)

    # -- adjoint ---------------------------------------------------------------
    def adjoint(self, theta, y, g_g, g_h=None, g_c=None):
        """Exact transpose of the data map at ``(theta, y)``.

        ``g_g`` may be a dense array, a sparse matrix, or any object exposing
        ``g_entries(rows, cols)`` (as the conic adjoint result does).
        """
        theta = np.asarray(theta, dtype=float).ravel()
        y = _as_y(y, self.n_y)
        ge = _gather(g_g, self.g_row, self.g_col)
        g_theta = np.zeros(self.n_theta)
        g_y = np.zeros(self.n_y)
        _scatter(g_theta, self.g_lin_t, ge)
        _scatter(g_y, self.g_lin_y, ge)
        _scatter_bilin(g_theta, g_y, self.g_bilin, ge, theta, y)
        if g_h is not None:
            _scatter(g_theta, self.h_lin_t, g_h)
            _scatter(g_y, self.h_lin_y, g_h)
            _scatter_bilin(g_theta, g_y, self.h_bilin, g_h, theta, y)
        if g_c is not None:
            _scatter(g_theta, self.c_lin_t, g_c)
            _scatter(g_y, self.c_lin_y, g_c)
            _scatter_bilin(g_theta, g_y, self.c_bilin, g_c, theta, y)
        return g_theta, g_y


def apply_param_map(pmap: ParamMap, theta, y=None):
    return pmap.apply(theta, y)


def apply_param_map_adjoint(pmap: ParamMap, theta, y, g_g, g_h=None, g_c=None):
    return pmap.adjoint(theta, y, g_g, g_h, g_c)


def _as_y(y, n_y):
    if y is None:
        return np.zeros(n_y)
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != n_y:
        raise ValueError("y length mismatch")
    return y


def _accumulate(vals, links, params):
    pos, pidx, coeff = links
    if pos.shape[0] == 0:
        return
    np.add.at(vals, pos, coeff * params[pidx])


def _accumulate_bilin(vals, links, theta, y):
    pos, tidx, yidx, coeff = links
    if pos.shape[0] == 0:
        return
    np.add.at(vals, pos, coeff * theta[tidx] * y[yidx])


def _scatter(grad, links, cotangent):
    pos, pidx, coeff = links
    if pos.shape[0] == 0:
        return
    np.add.at(grad, pidx, coeff * cotangent[pos])


def _scatter_bilin(g_theta, g_y, links, cotangent, theta, y):
    pos, tidx, yidx, coeff = links
    if pos.shape[0] == 0:
        return
    np.add.at(g_theta, tidx, coeff * y[yidx] * cotangent[pos])
    np.add.at(g_y, yidx, coeff * theta[tidx] * cotangent[pos])


def _gather(g_g, rows, cols):
    if hasattr(g_g, "g_entries"):
        return g_g.g_entries(rows, cols)
    if sp.issparse(g_g):
        g_g = g_g.toarray()
    g_g = np.asarray(g_g)
    return g_g[rows, cols]


# -- symbolic builder ------------------------------------------------------------


class _Builder:
    def __init__(self, n_theta: int, n_y: int):
        self.n_theta = n_theta
        self.n_y = n_y
        self.n_vars = 0
        self.var_index: dict[str, np.ndarray] = {}
        self.obj: dict[int, Coef] = {}
        self.zero_rows: list[LinExpr] = []
        self.nonneg_rows: list[LinExpr] = []
        self.soc_blocks: list[list[LinExpr]] = []

    def add_var(self, name: str, k: int) -> np.ndarray:
        idx = np.arange(self.n_vars, self.n_vars + k)
        self.n_vars += k
        base = name
        suffix = 1
        while name in self.var_index:
            suffix += 1
            name = f"{base}~{suffix}"
        self.var_index[name] = idx
        return idx

    def add_objective(self, col: int, coeff) -> None:
        cur = self.obj.get(int(col))
        coeff = coeff if isinstance(coeff, Coef) else Coef.const(coeff)
        self.obj[int(col)] = coeff if cur is None else cur + coeff

    def add_zero(self, expr: LinExpr) -> None:
        self.zero_rows.append(expr)

    def add_nonneg(self, expr: LinExpr) -> None:
        self.nonneg_rows.append(expr)

    def add_soc(self, exprs: list[LinExpr]) -> None:
        self.soc_blocks.append(exprs)

    def finalize(self) -> ParamMap:
        rows: list[LinExpr] = []
        rows.extend(self.zero_rows)
        rows.extend(self.nonneg_rows)
        soc_dims = []
        for block in self.soc_blocks:
            rows.extend(block)
            soc_dims.append(len(block))
        m, n = len(rows), self.n_vars
        cones = ConeSpec(
            zero_dim=len(self.zero_rows),
            nonneg_dim=len(self.nonneg_rows),
            soc_dims=tuple(soc_dims),
        )

        g_row, g_col, g_base = [], [], []
        g_t, g_y, g_ty = _LinkAcc(), _LinkAcc(), _BilinAcc()
        h_base = np.zeros(m)
        h_t, h_y, h_ty = _LinkAcc(), _LinkAcc(), _BilinAcc()
        for i, expr in enumerate(rows):
            # slack s = h - G x must equal the expression: G = -coef, h = offset
            for col, coef in expr.terms.items():
                if not coef.is_structural:
                    continue
                e = len(g_base)
                g_row.append(i)
                g_col.append(col)
                g_base.append(-coef.c0)
                g_t.add(e, coef.lin_t, sign=-1.0)
                g_y.add(e, coef.lin_y, sign=-1.0)
                g_ty.add(e, coef.bilin, sign=-1.0)
            off = expr.offset
            h_base[i] = off.c0
            h_t.add(i, off.lin_t)
            h_y.add(i, off.lin_y)
            h_ty.add(i, off.bilin)

        c_base = np.zeros(n)
        c_t, c_y, c_ty = _LinkAcc(), _LinkAcc(), _BilinAcc()
        for col, coef in self.obj.items():
            c_base[col] = coef.c0
            c_t.add(col, coef.lin_t)
            c_y.add(col, coef.lin_y)
            c_ty.add(col, coef.bilin)

        return ParamMap(
            (m, n),
            cones,
            self.n_theta,
            self.n_y,
            (
                np.asarray(g_row, dtype=np.int64),
                np.asarray(g_col, dtype=np.int64),
                np.asarray(g_base, dtype=float),
                g_t.arrays(),
                g_y.arrays(),
                g_ty.arrays(),
            ),
            (h_base, h_t.arrays(), h_y.arrays(), h_ty.arrays()),
            (c_base, c_t.arrays(), c_y.arrays(), c_ty.arrays()),
            dict(self.var_index),
        )


class _LinkAcc:
    def __init__(self):
        self.pos, self.pidx, self.coeff = [], [], []

    def add(self, pos, links: dict, sign=1.0):
        for idx, v in links.items():
            self.pos.append(pos)
            self.pidx.append(idx)
            self.coeff.append(sign * v)

    def arrays(self):
        return (
            np.asarray(self.pos, dtype=np.int64),
            np.asarray(self.pidx, dtype=np.int64),
            np.asarray(self.coeff, dtype=float),
        )


class _BilinAcc:
    def __init__(self):
        self.pos, self.tidx, self.yidx, self.coeff = [], [], [], []

    def add(self, pos, links: dict, sign=1.0):
        for (ti, yj), v in links.items():
            self.pos.append(pos)
            self.tidx.append(ti)
            self.yidx.append(yj)
            self.coeff.append(sign * v)

    def arrays(self):
        return (
            np.asarray(self.pos, dtype=np.int64),
            np.asarray(self.tidx, dtype=np.int64),
            np.asarray(self.yidx, dtype=np.int64),
            np.asarray(self.coeff, dtype=float),
        )


# -- canonicalization ------------------------------------------------------------


def canonicalize(
    prob: RobustProblem, uset: UncertaintySet, y: np.ndarray | None = None
) -> tuple[ConeProgram, ParamMap, dict[str, np.ndarray]]:
    """Lower a robust problem with its uncertainty set to a cone program.

    Returns the program at the set's current parameters and the given ``y``,
    the parameter map reproducing the data at any ``(theta, y)``, and the
    table mapping variable names to column indices.  The sparsity pattern of
    the program is independent of the parameter values, so one symbolic
    factorization serves the entire training run.
    """
    if prob.m != uset.m:
        raise ValueError("uncertainty dimension mismatch between problem and set")
    if np.linalg.matrix_rank(uset.a) < uset.m_hat:
        warnings.warn("reshaping matrix is rank deficient", stacklevel=2)

    bld = _Builder(n_theta=uset.theta_size, n_y=prob.p_y)
    x = bld.add_var("x", prob.n)

    a_sym, b_sym, radii_sym = _set_symbols(uset)

    for i, ci in enumerate(prob.c_obj):
        if ci != 0.0:
            bld.add_objective(x[i], ci)
    for k, atom in enumerate(prob.norm_atoms):
        _lower_norm_atom(bld, atom, x, k)
    for k, con in enumerate(prob.constraints):
        _lower_linear_constraint(bld, con, x)
    _lower_bounds(bld, prob, x)

    if isinstance(uset, MRO):
        _lower_mro(bld, prob, uset, a_sym, b_sym, radii_sym, x)
    elif isinstance(uset, Budget):
        _lower_budget(bld, prob, uset, a_sym, b_sym, radii_sym, x)
    elif isinstance(uset, Polyhedral):
        _lower_polyhedral(bld, prob, uset, a_sym, b_sym, x)
    elif isinstance(uset, Ellipsoidal):  # includes Box
        _lower_norm_ball(bld, prob, uset, a_sym, b_sym, x)
    else:
        raise ValueError(f"unsupported uncertainty set variant {uset.variant!r}")

    pmap = bld.finalize()
    prog = pmap.apply_program(uset.theta, y)
    return prog, pmap, pmap.var_index


def _set_symbols(uset: UncertaintySet):
    m, mh = uset.m, uset.m_hat
    a_sym = [[Coef.theta(i * mh + j) for j in range(mh)] for i in range(m)]
    b_sym = [Coef.theta(m * mh + i) for i in range(m)]
    base = m * mh + m
    radii = [Coef.theta(base + k) for k in range(uset._radii().shape[0])]
    return a_sym, b_sym, radii


def _atom_p_exprs(atom, x, p_y) -> list[LinExpr]:
    n, m = atom.f.shape
    exprs = []
    for i in range(m):
        terms = {int(x[d]): Coef.const(atom.f[d, i]) for d in range(n) if atom.f[d, i] != 0.0}
        off = Coef.const(atom.d[i])
        if atom.dy is not None:
            for k in range(p_y):
                if atom.dy[k, i] != 0.0:
                    off = off + Coef.y(k, atom.dy[k, i])
        exprs.append(LinExpr(terms, off))
    return exprs


def _atom_a_expr(atom, x, p_y) -> LinExpr:
    terms = {int(x[d]): Coef.const(atom.a[d]) for d in range(len(x)) if atom.a[d] != 0.0}
    off = Coef.const(atom.c)
    if atom.e is not None:
        for k in range(p_y):
            if atom.e[k] != 0.0:
                off = off + Coef.y(k, atom.e[k])
    return LinExpr(terms, off)


def _sym_mat_t_vec(a_sym, exprs) -> list[LinExpr]:
    """A^T v for a symbolic matrix and expression vector (length m -> m_hat)."""
    m = len(a_sym)
    mh = len(a_sym[0]) if m else 0
    out = []
    for k in range(mh):
        acc = LinExpr()
        for i in range(m):
            acc = acc + exprs[i].scaled(a_sym[i][k])
        out.append(acc)
    return out


def _sym_dot(coefs, exprs) -> LinExpr:
    acc = LinExpr()
    for cf, ex in zip(coefs, exprs):
        acc = acc + ex.scaled(cf)
    return acc


def _support_terms(bld: _Builder, uset: UncertaintySet, tag: str):
    """Support function machinery: omega variables and the epigraph of sigma_S.

    A free support pins omega to zero (the support function is only finite
    there), adding nothing; a box support adds omega plus per-coordinate
    epigraph rows for max(lb_i w_i, ub_i w_i).
    """
    m = uset.m
    if uset.support is None:
        return [LinExpr() for _ in range(m)], LinExpr()
    omega = bld.add_var(f"omega_{tag}", m)
    sigma = bld.add_var(f"sigma_{tag}", m)
    lb, ub = uset.support.lb, uset.support.ub
    sigma_sum = LinExpr()
    for i in range(m):
        bld.add_nonneg(LinExpr.var(sigma[i]) - LinExpr.var(omega[i], lb[i]))
        bld.add_nonneg(LinExpr.var(sigma[i]) - LinExpr.var(omega[i], ub[i]))
        sigma_sum = sigma_sum + LinExpr.var(sigma[i])
    return [LinExpr.var(omega[i]) for i in range(m)], sigma_sum


def _lower_norm_ball(bld, prob, uset, a_sym, b_sym, x):
    """Norm-ball sets: margin >= dual norm of A^T (omega - P)."""
    q = _conjugate_order(uset.p)
    for l, atom in enumerate(prob.atoms):
        omega, sigma_sum = _support_terms(bld, uset, f"a{l}")
        p = _atom_p_exprs(atom, x, prob.p_y)
        diff = [omega[i] - p[i] for i in range(uset.m)]
        w = _sym_mat_t_vec(a_sym, diff)
        margin = -( _atom_a_expr(atom, x, prob.p_y) + sigma_sum + _sym_dot(b_sym, [p[i] - omega[i] for i in range(uset.m)]) )
        _emit_norm_cap(bld, q, margin, w, tag=f"cap{l}")


def _emit_norm_cap(bld, q, margin: LinExpr, w: list[LinExpr], tag: str):
    """Rows enforcing ||w||_q <= margin."""
    if q == 2:
        bld.add_soc([margin] + w)
    elif np.isinf(q):
        for wi in w:
            bld.add_nonneg(margin - wi)
            bld.add_nonneg(margin + wi)
    elif q == 1:
        pos = bld.add_var(f"abs+_{tag}", len(w))
        neg = bld.add_var(f"abs-_{tag}", len(w))
        total = LinExpr()
        for i, wi in enumerate(w):
            bld.add_nonneg(LinExpr.var(pos[i]))
            bld.add_nonneg(LinExpr.var(neg[i]))
            bld.add_zero(wi - LinExpr.var(pos[i]) + LinExpr.var(neg[i]))
            total = total + LinExpr.var(pos[i]) + LinExpr.var(neg[i])
        bld.add_nonneg(margin - total)
    else:
        raise ValueError(f"unsupported dual norm order {q}")


def _conjugate_order(p: float) -> float:
    if p == 2:
        return 2.0
    if p == 1:
        return np.inf
    if np.isinf(p):
        return 1.0
    raise ValueError(f"unsupported norm order {p}")


def _lower_budget(bld, prob, uset, a_sym, b_sym, radii_sym, x):
    rho1, rho2 = radii_sym
    for l, atom in enumerate(prob.atoms):
        omega, sigma_sum = _support_terms(bld, uset, f"a{l}")
        p = _atom_p_exprs(atom, x, prob.p_y)
        inner = _sym_mat_t_vec(a_sym, [omega[i] - p[i] for i in range(uset.m)])
        r = bld.add_var(f"bud_r{l}", uset.m_hat)
        pos = bld.add_var(f"bud+{l}", uset.m_hat)
        neg = bld.add_var(f"bud-{l}", uset.m_hat)
        l1_total = LinExpr()
        for i in range(uset.m_hat):
            bld.add_nonneg(LinExpr.var(pos[i]))
            bld.add_nonneg(LinExpr.var(neg[i]))
            bld.add_zero(LinExpr.var(r[i]) - inner[i] - LinExpr.var(pos[i]) + LinExpr.var(neg[i]))
            l1_total = l1_total + LinExpr.var(pos[i]) + LinExpr.var(neg[i])
        tinf = bld.add_var(f"bud_inf{l}", 1)[0]
        for i in range(uset.m_hat):
            bld.add_nonneg(LinExpr.var(tinf) - LinExpr.var(r[i]))
            bld.add_nonneg(LinExpr.var(tinf) + LinExpr.var(r[i]))
        margin = -(
            _atom_a_expr(atom, x, prob.p_y)
            + sigma_sum
            + _sym_dot(b_sym, [p[i] - omega[i] for i in range(uset.m)])
        )
        bld.add_nonneg(margin - l1_total.scaled(rho1) - LinExpr.var(tinf, 1.0).scaled(rho2))


def _lower_polyhedral(bld, prob, uset, a_sym, b_sym, x):
    d_mat, d_vec = uset.d_mat, uset.d_vec
    n_rows = d_vec.shape[0]
    for l, atom in enumerate(prob.atoms):
        gamma, sigma_sum = _support_terms(bld, uset, f"a{l}")
        p = _atom_p_exprs(atom, x, prob.p_y)
        hh = bld.add_var(f"poly_h{l}", n_rows)
        for i in range(n_rows):
            bld.add_nonneg(LinExpr.var(hh[i]))
        diff = [p[i] - gamma[i] for i in range(uset.m)]
        lhs = _sym_mat_t_vec(a_sym, diff)
        for k in range(uset.m_hat):
            dh = LinExpr()
            for i in range(n_rows):
                if d_mat[i, k] != 0.0:
                    dh = dh + LinExpr.var(hh[i], d_mat[i, k])
            bld.add_zero(lhs[k] - dh)
        d_dot_h = LinExpr()
        for i in range(n_rows):
            if d_vec[i] != 0.0:
                d_dot_h = d_dot_h + LinExpr.var(hh[i], d_vec[i])
        margin = -(
            _atom_a_expr(atom, x, prob.p_y) + sigma_sum + d_dot_h + _sym_dot(b_sym, diff)
        )
        bld.add_nonneg(margin)


def _lower_mro(bld, prob, uset, a_sym, b_sym, radii_sym, x):
    """Clustered transport-budget reformulation at exponent 1.

    One multiplier bounds the dual norm of every atom's reshaped slope (the
    transport-cost conjugate collapses to a norm cap at exponent 1), one
    epigraph value per cluster collects the per-centroid atom values, and the
    weighted combination is capped by the radius row.
    """
    (rho,) = radii_sym
    lam = bld.add_var("mro_lam", 1)[0]
    bld.add_nonneg(LinExpr.var(lam))
    svars = bld.add_var("mro_s", uset.n_clusters)
    budget = LinExpr.var(lam).scaled(rho)
    for k in range(uset.n_clusters):
        budget = budget + LinExpr.var(svars[k], uset.weights[k])
    bld.add_nonneg(-budget)
    free_support = uset.support is None
    for l, atom in enumerate(prob.atoms):
        p = _atom_p_exprs(atom, x, prob.p_y)
        a_expr = _atom_a_expr(atom, x, prob.p_y)
        if free_support:
            xi = _sym_mat_t_vec(a_sym, p)
            bld.add_soc([LinExpr.var(lam)] + xi)
            for k in range(uset.n_clusters):
                row = LinExpr.var(svars[k]) - a_expr - _sym_dot(b_sym, p)
                for j in range(uset.m):
                    row = row - xi[j].scaled(uset.centroids[k, j])
                bld.add_nonneg(row)
        else:
            for k in range(uset.n_clusters):
                omega, sigma_sum = _support_terms(bld, uset, f"a{l}k{k}")
                diff = [p[i] - omega[i] for i in range(uset.m)]
                xi = _sym_mat_t_vec(a_sym, diff)
                bld.add_soc([LinExpr.var(lam)] + xi)
                row = (
                    LinExpr.var(svars[k]) - a_expr - sigma_sum - _sym_dot(b_sym, diff)
                )
                for j in range(uset.m):
                    row = row - xi[j].scaled(uset.centroids[k, j])
                bld.add_nonneg(row)


def _lower_norm_atom(bld, atom, x, k):
    res = []
    n_rows = atom.mat.shape[0]
    for r in range(n_rows):
        terms = {int(x[d]): Coef.const(atom.mat[r, d]) for d in range(atom.mat.shape[1]) if atom.mat[r, d] != 0.0}
        off = Coef()
        if atom.offset is not None:
            off = off + Coef.const(-atom.offset[r])
        if atom.mat_y is not None:
            for j in range(atom.mat_y.shape[1]):
                if atom.mat_y[r, j] != 0.0:
                    off = off + Coef.y(j, -atom.mat_y[r, j])
        res.append(LinExpr(terms, off))
    if atom.kind == "l2":
        t = bld.add_var(f"obj_norm{k}", 1)[0]
        bld.add_objective(t, atom.weight)
        bld.add_soc([LinExpr.var(t)] + res)
    else:
        pos = bld.add_var(f"obj_abs+{k}", n_rows)
        neg = bld.add_var(f"obj_abs-{k}", n_rows)
        for r in range(n_rows):
            bld.add_nonneg(LinExpr.var(pos[r]))
            bld.add_nonneg(LinExpr.var(neg[r]))
            bld.add_zero(res[r] - LinExpr.var(pos[r]) + LinExpr.var(neg[r]))
            bld.add_objective(pos[r], atom.weight)
            bld.add_objective(neg[r], atom.weight)


def _lower_linear_constraint(bld, con, x):
    n_rows = con.w0.shape[0]
    for r in range(n_rows):
        terms: dict[int, Coef] = {}
        for d in range(con.w0.shape[1]):
            cf = Coef.const(con.w0[r, d])
            if con.wy is not None:
                for k in range(con.wy.shape[0]):
                    if con.wy[k, r, d] != 0.0:
                        cf = cf + Coef.y(k, con.wy[k, r, d])
            if cf.is_structural:
                terms[int(x[d])] = cf
        off = Coef.const(-con.rhs0[r])
        if con.rhs_y is not None:
            for k in range(con.rhs_y.shape[1]):
                if con.rhs_y[r, k] != 0.0:
                    off = off + Coef.y(k, -con.rhs_y[r, k])
        expr = LinExpr(terms, off)  # W x - rhs
        if con.equality:
            bld.add_zero(expr)
        else:
            bld.add_nonneg(-expr)


def _lower_bounds(bld, prob, x):
    if prob.lb is not None:
        for i, v in enumerate(prob.lb):
            if np.isfinite(v):
                bld.add_nonneg(LinExpr.var(x[i]) - v)
    if prob.ub is not None:
        for i, v in enumerate(prob.ub):
            if np.isfinite(v):
                bld.add_nonneg(LinExpr.of(v) - LinExpr.var(x[i]))
