import itertools

import numpy as np
import pytest
import scipy.sparse as sp

from lro.cones import ConeSpec
from lro.solver import (
    ConeProgram,
    SolverSettings,
    Status,
    dump_program,
    load_program,
    objective_value,
    residuals,
    solve,
)


def lp_program(a_ub, b_ub, c):
    """min c^T x  s.t.  a_ub x <= b_ub   as a nonneg-cone program."""
    m = a_ub.shape[0]
    return ConeProgram(sp.csc_matrix(a_ub), b_ub, c, ConeSpec(nonneg_dim=m))


def random_bounded_lp(rng, n, extra_rows):
    """LP with box bounds plus extra rows, feasible at an interior point."""
    rows = [np.eye(n), -np.eye(n)]
    rhs = [np.ones(n), np.ones(n)]
    x0 = rng.uniform(-0.3, 0.3, size=n)
    a = rng.normal(size=(extra_rows, n))
    rows.append(a)
    rhs.append(a @ x0 + rng.uniform(0.1, 1.0, size=extra_rows))
    a_ub = np.vstack(rows)
    b_ub = np.concatenate(rhs)
    c = rng.normal(size=n)
    return a_ub, b_ub, c


def vertex_enumeration_optimum(a_ub, b_ub, c, tol=1e-9):
    """Brute-force LP oracle: scan all basic feasible points."""
    m, n = a_ub.shape
    best = np.inf
    for rows in itertools.combinations(range(m), n):
        sub = a_ub[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, b_ub[list(rows)])
        if (a_ub @ x <= b_ub + tol).all():
            best = min(best, float(c @ x))
    return best


def test_min_x_subject_to_x_ge_1():
    # min x s.t. x >= 1  ->  -x <= -1
    prog = lp_program(np.array([[-1.0]]), np.array([-1.0]), np.array([1.0]))
    sol = solve(prog)
    assert sol.status == Status.OPTIMAL
    np.testing.assert_allclose(sol.x, [1.0], atol=1e-7)


def test_analytic_socp_sqrt2():
    # min t  s.t.  ||(1, 1)|| <= t :  rows select s = (t, 1, 1)
    g = sp.csc_matrix(np.array([[-1.0], [0.0], [0.0]]))
    h = np.array([0.0, 1.0, 1.0])
    c = np.array([1.0])
    prog = ConeProgram(g, h, c, ConeSpec(soc_dims=(3,)))
    sol = solve(prog)
    assert sol.status == Status.OPTIMAL
    assert abs(sol.x[0] - np.sqrt(2.0)) < 1e-8


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(101)
    for _ in range(20):
        n = int(rng.integers(2, 5))
        extra = int(rng.integers(1, 15 - 2 * n))
        a_ub, b_ub, c = random_bounded_lp(rng, n, extra)
        prog = lp_program(a_ub, b_ub, c)
        sol = solve(prog)
        assert sol.status == Status.OPTIMAL
        oracle = vertex_enumeration_optimum(a_ub, b_ub, c)
        assert abs(objective_value(prog, sol) - oracle) < 1e-6


def random_socp(rng, n, n_blocks):
    """Feasible, bounded SOCP: box bounds plus random second-order rows."""
    rows = [np.vstack([np.eye(n), -np.eye(n)])]
    rhs = [np.ones(2 * n)]
    socs = []
    for _ in range(n_blocks):
        d = int(rng.integers(2, 4))
        a = rng.normal(size=(d, n))
        offset = rng.uniform(1.0, 2.0)
        block_rows = np.vstack([np.zeros(n), a])
        block_rhs = np.concatenate([[offset + float(rng.uniform(0.5, 2.0))], a @ np.zeros(n) + rng.uniform(-0.2, 0.2, size=d)])
        rows.append(-block_rows)
        rhs.append(block_rhs)
        socs.append(d + 1)
    g = np.vstack(rows)
    h = np.concatenate(rhs)
    c = rng.normal(size=n)
    cones = ConeSpec(nonneg_dim=2 * n, soc_dims=tuple(socs))
    # nonneg rows need s = h - Gx >= 0 with G = rows stacked;
    # the box rows were written as identity blocks directly
    return ConeProgram(sp.csc_matrix(g), h, c, cones)


def test_random_socps_reach_tight_residuals():
    rng = np.random.default_rng(7)
    for _ in range(20):
        prog = random_socp(rng, int(rng.integers(2, 5)), int(rng.integers(1, 3)))
        sol = solve(prog)
        assert sol.status == Status.OPTIMAL
        assert max(sol.primal_res, sol.dual_res, sol.gap) <= 1e-8


def test_residuals_at_analytic_solution():
    prog = lp_program(np.array([[-1.0]]), np.array([-1.0]), np.array([1.0]))
    sol = solve(prog)
    sol.x[:] = [1.0]
    sol.r[:] = [1.0]
    sol.s[:] = [0.0]
    p, d, gap = residuals(prog, sol)
    assert max(p, d, gap) <= 1e-12


def test_residuals_grow_linearly_with_perturbation():
    rng = np.random.default_rng(3)
    a_ub, b_ub, c = random_bounded_lp(rng, 3, 4)
    prog = lp_program(a_ub, b_ub, c)
    sol = solve(prog)
    base = sol.primal_res
    sol.x[:] = sol.x + 1e-3 * rng.normal(size=3)
    p1, _, _ = residuals(prog, sol)
    assert p1 > base
    assert 1e-5 < p1 < 1e-1  # roughly proportional to the 1e-3 perturbation


def test_weak_duality_at_optimum():
    rng = np.random.default_rng(17)
    for _ in range(5):
        a_ub, b_ub, c = random_bounded_lp(rng, 3, 5)
        prog = lp_program(a_ub, b_ub, c)
        sol = solve(prog)
        ctx = float(prog.c @ sol.x)
        assert ctx + float(prog.h @ sol.r) >= -1e-8 * (1 + abs(ctx))


def test_row_scaling_invariance():
    rng = np.random.default_rng(23)
    a_ub, b_ub, c = random_bounded_lp(rng, 3, 4)
    prog = lp_program(a_ub, b_ub, c)
    scale = rng.uniform(0.1, 10.0, size=a_ub.shape[0])
    prog2 = lp_program(scale[:, None] * a_ub, scale * b_ub, c)
    o1 = objective_value(prog, solve(prog))
    o2 = objective_value(prog2, solve(prog2))
    assert abs(o1 - o2) < 1e-7


def test_infeasible_detection():
    # x <= -1 and x >= 1 simultaneously
    a_ub = np.array([[1.0], [-1.0]])
    b_ub = np.array([-1.0, -1.0])
    prog = lp_program(a_ub, b_ub, np.array([1.0]))
    sol = solve(prog)
    assert sol.status == Status.INFEASIBLE


def test_unbounded_detection():
    # min x s.t. x <= 0
    prog = lp_program(np.array([[1.0]]), np.array([0.0]), np.array([1.0]))
    sol = solve(prog)
    assert sol.status == Status.UNBOUNDED


def test_warm_start_runs_and_matches():
    rng = np.random.default_rng(31)
    a_ub, b_ub, c = random_bounded_lp(rng, 4, 5)
    prog = lp_program(a_ub, b_ub, c)
    cold = solve(prog)
    warm = solve(prog, init=(cold.x, cold.r, cold.s))
    assert warm.status == Status.OPTIMAL
    assert warm.iterations <= cold.iterations
    np.testing.assert_allclose(objective_value(prog, warm), objective_value(prog, cold), atol=1e-7)


def test_embedding_point_contract():
    rng = np.random.default_rng(5)
    prog = random_socp(rng, 3, 1)
    sol = solve(prog)
    np.testing.assert_allclose(sol.z, np.concatenate([sol.x, sol.r - sol.s, [1.0]]))


def test_dump_and_load_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    prog = random_socp(rng, 3, 2)
    path = tmp_path / "prog.txt"
    dump_program(prog, path)
    back = load_program(path)
    assert (back.g != prog.g).nnz == 0
    np.testing.assert_array_equal(back.h, prog.h)
    np.testing.assert_array_equal(back.c, prog.c)
    assert back.cones == prog.cones
