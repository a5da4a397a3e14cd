import numpy as np
import pytest
import scipy.sparse as sp

from lro.cones import ConeSpec
from lro.diff import (
    EmbeddingPoint,
    build_q,
    derivative_adjoint,
    derivative_forward,
    residual_map,
    solution_map,
)
from lro.solver import ConeProgram, SolverSettings, Status, solve

TIGHT = SolverSettings(tol=1e-10)


def random_bounded_socp(rng, n=3, extra=2):
    rows = [np.vstack([np.eye(n), -np.eye(n)])]
    rhs = [np.ones(2 * n)]
    socs = []
    a = rng.normal(size=(2, n))
    rows.append(-np.vstack([np.zeros(n), a]))
    rhs.append(np.concatenate([[2.0], rng.uniform(-0.2, 0.2, size=2)]))
    socs.append(3)
    g = np.vstack(rows)
    h = np.concatenate(rhs)
    c = rng.normal(size=n)
    return ConeProgram(sp.csc_matrix(g), h, c, ConeSpec(nonneg_dim=2 * n, soc_dims=tuple(socs)))


def test_build_q_zero_data():
    prog = ConeProgram(sp.csc_matrix((1, 1)), np.zeros(1), np.zeros(1), ConeSpec(nonneg_dim=1))
    q = build_q(prog)
    assert (q != 0).nnz == 0


def test_build_q_1x1_blocks():
    prog = ConeProgram(sp.csc_matrix(np.array([[2.0]])), np.array([3.0]), np.array([5.0]),
                       ConeSpec(nonneg_dim=1))
    q = build_q(prog).toarray()
    expected = np.array([[0.0, 2.0, 5.0], [-2.0, 0.0, 3.0], [-5.0, -3.0, 0.0]])
    np.testing.assert_array_equal(q, expected)


def test_build_q_skew_symmetric():
    rng = np.random.default_rng(0)
    prog = random_bounded_socp(rng)
    q = build_q(prog)
    assert abs(q + q.T).max() == 0.0


def test_residual_small_at_solution():
    rng = np.random.default_rng(1)
    prog = random_bounded_socp(rng)
    sol = solve(prog, TIGHT)
    assert sol.status == Status.OPTIMAL
    z = EmbeddingPoint.from_solution(sol)
    q = build_q(prog)
    assert np.linalg.norm(residual_map(z, q, prog.cones)) <= 1e-6


def test_residual_invariant_to_positive_scaling():
    rng = np.random.default_rng(2)
    prog = random_bounded_socp(rng)
    sol = solve(prog, TIGHT)
    q = build_q(prog)
    z1 = EmbeddingPoint.from_solution(sol)
    z2 = EmbeddingPoint.from_vector(2.0 * sol.z, prog.n)
    np.testing.assert_allclose(
        residual_map(z1, q, prog.cones), residual_map(z2, q, prog.cones), atol=1e-12
    )


def test_residual_zero_w_rejected():
    z = EmbeddingPoint(np.zeros(1), np.zeros(1), 0.0)
    q = sp.csc_matrix((3, 3))
    with pytest.raises(ValueError):
        residual_map(z, q, ConeSpec(nonneg_dim=1))


def test_residual_direct_formula_q_zero():
    # with Q = 0 and w = 1: N(z) = z - Pi(z) evaluated blockwise
    cone = ConeSpec(nonneg_dim=2)
    z = EmbeddingPoint(np.array([1.5]), np.array([0.5, -2.0]), 1.0)
    q = sp.csc_matrix((4, 4))
    got = residual_map(z, q, cone)
    pi = np.array([1.5, 0.5, 0.0, 1.0])
    zvec = np.array([1.5, 0.5, -2.0, 1.0])
    np.testing.assert_allclose(got, zvec - pi, atol=1e-14)


def test_solution_map_dual_cone_cases():
    cone = ConeSpec(nonneg_dim=2)
    # v in K* = nonneg: r = v, s = 0
    z = EmbeddingPoint(np.array([0.3]), np.array([1.0, 2.0]), 1.0)
    x, r, s = solution_map(z, cone)
    np.testing.assert_allclose(r, [1.0, 2.0])
    np.testing.assert_allclose(s, [0.0, 0.0])
    # v in -K: r = 0, s = -v
    z = EmbeddingPoint(np.array([0.3]), np.array([-1.0, -2.0]), 1.0)
    x, r, s = solution_map(z, cone)
    np.testing.assert_allclose(r, [0.0, 0.0])
    np.testing.assert_allclose(s, [1.0, 2.0])


def test_solution_map_matches_solver():
    rng = np.random.default_rng(3)
    prog = random_bounded_socp(rng)
    sol = solve(prog, TIGHT)
    x, r, s = solution_map(EmbeddingPoint.from_solution(sol), prog.cones)
    np.testing.assert_allclose(x, sol.x, atol=1e-9)
    np.testing.assert_allclose(r, sol.r, atol=1e-9)
    np.testing.assert_allclose(s, sol.s, atol=1e-9)
    assert abs(float(s @ r)) < 1e-9


def test_adjoint_zero_cotangent():
    rng = np.random.default_rng(4)
    prog = random_bounded_socp(rng)
    sol = solve(prog, TIGHT)
    adj = derivative_adjoint(prog, sol, np.zeros(prog.n))
    assert abs(adj.g_g).max() == 0.0
    np.testing.assert_array_equal(adj.g_h, np.zeros(prog.m))
    np.testing.assert_array_equal(adj.g_c, np.zeros(prog.n))


def test_forward_zero_direction():
    rng = np.random.default_rng(5)
    prog = random_bounded_socp(rng)
    sol = solve(prog, TIGHT)
    fwd = derivative_forward(prog, sol, sp.csc_matrix(prog.g.shape), np.zeros(prog.m), np.zeros(prog.n))
    np.testing.assert_allclose(fwd.dx, np.zeros(prog.n), atol=1e-12)


def random_pattern_direction(rng, prog):
    coo = prog.g.tocoo()
    vals = rng.normal(size=coo.nnz)
    dg = sp.coo_matrix((vals, (coo.row, coo.col)), shape=prog.g.shape).tocsc()
    return dg, rng.normal(size=prog.m), rng.normal(size=prog.n)


def test_adjoint_identity_many_triples():
    rng = np.random.default_rng(6)
    count = 0
    while count < 50:
        prog = random_bounded_socp(rng, n=int(rng.integers(2, 5)))
        sol = solve(prog, TIGHT)
        if sol.status != Status.OPTIMAL:
            continue
        dg, dh, dc = random_pattern_direction(rng, prog)
        g_x = rng.normal(size=prog.n)
        fwd = derivative_forward(prog, sol, dg, dh, dc)
        adj = derivative_adjoint(prog, sol, g_x)
        lhs = float(fwd.dx @ g_x)
        rhs = float((adj.g_g.multiply(dg)).sum() + adj.g_h @ dh + adj.g_c @ dc)
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))
        count += 1


def _active_set_stable(prog, base_sol, dg, dh, dc, eps):
    """Check SOC/nonneg activity pattern unchanged under +/- eps moves."""
    def pattern(p):
        sol = solve(p, TIGHT)
        if sol.status != Status.OPTIMAL:
            return None
        zd = prog.cones.zero_dim
        nn = prog.cones.nonneg_dim
        act = list(sol.s[zd:zd + nn] > 1e-7)
        i = zd + nn
        for d in prog.cones.soc_dims:
            t = sol.s[i]
            xn = np.linalg.norm(sol.s[i + 1:i + d])
            if t < 1e-7:
                act.append("origin")
            elif t - xn > 1e-7:
                act.append("interior")
            else:
                act.append("boundary")
            i += d
        return act

    plus = ConeProgram(prog.g + eps * dg, prog.h + eps * dh, prog.c + eps * dc, prog.cones)
    minus = ConeProgram(prog.g - eps * dg, prog.h - eps * dh, prog.c - eps * dc, prog.cones)
    pp, pm = pattern(plus), pattern(minus)
    return pp is not None and pm is not None and pp == pm


def test_forward_matches_finite_differences_on_smooth_instances():
    rng = np.random.default_rng(7)
    eps = 1e-6
    count = 0
    while count < 8:
        prog = random_bounded_socp(rng, n=int(rng.integers(2, 5)))
        sol = solve(prog, TIGHT)
        if sol.status != Status.OPTIMAL:
            continue
        dg, dh, dc = random_pattern_direction(rng, prog)
        if not _active_set_stable(prog, sol, dg, dh, dc, eps):
            continue
        fwd = derivative_forward(prog, sol, dg, dh, dc)
        if fwd.nondifferentiable:
            continue
        xp = solve(ConeProgram(prog.g + eps * dg, prog.h + eps * dh, prog.c + eps * dc, prog.cones), TIGHT).x
        xm = solve(ConeProgram(prog.g - eps * dg, prog.h - eps * dh, prog.c - eps * dc, prog.cones), TIGHT).x
        fd = (xp - xm) / (2 * eps)
        denom = max(np.linalg.norm(fd), 1e-8)
        assert np.linalg.norm(fwd.dx - fd) / denom <= 1e-4
        count += 1


def test_lp_vertex_insensitive_to_objective_shift():
    # at a unique nondegenerate LP vertex, small c moves leave x unchanged
    rng = np.random.default_rng(8)
    n = 3
    a_ub = np.vstack([np.eye(n), -np.eye(n)])
    b_ub = np.ones(2 * n)
    c = np.array([1.0, 0.7, -0.4])
    prog = ConeProgram(sp.csc_matrix(a_ub), b_ub, c, ConeSpec(nonneg_dim=2 * n))
    sol = solve(prog, TIGHT)
    dc = rng.normal(size=n) * 0.01
    fwd = derivative_forward(prog, sol, sp.csc_matrix(prog.g.shape), np.zeros(2 * n), dc)
    np.testing.assert_allclose(fwd.dx, np.zeros(n), atol=1e-7)
