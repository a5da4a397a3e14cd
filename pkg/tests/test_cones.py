import numpy as np
import pytest

from lro.cones import ConeSpec, dual, project, project_jacobian


def random_spec(rng, with_free=False):
    socs = tuple(int(d) for d in rng.integers(1, 5, size=rng.integers(0, 3)))
    if with_free:
        return ConeSpec(free_dim=int(rng.integers(0, 4)),
                        nonneg_dim=int(rng.integers(0, 4)), soc_dims=socs)
    return ConeSpec(zero_dim=int(rng.integers(0, 4)),
                    nonneg_dim=int(rng.integers(0, 4)), soc_dims=socs)


def test_soc_point_already_in_cone():
    spec = ConeSpec(soc_dims=(3,))
    v = np.array([2.0, 1.0, 0.0])
    np.testing.assert_allclose(project(v, spec), v)


def test_soc_point_in_polar_cone():
    spec = ConeSpec(soc_dims=(3,))
    v = np.array([-2.0, 1.0, 0.0])
    np.testing.assert_allclose(project(v, spec), np.zeros(3))


def brute_force_soc_projection(v, n_dir=2000, n_rad=400):
    # Independent oracle: scan points t*(1, r*direction) of the cone r <= 1.
    best = np.zeros_like(v)
    best_d = np.linalg.norm(v)
    phis = np.linspace(0.0, 2 * np.pi, n_dir, endpoint=False)
    for phi in phis:
        d = np.array([np.cos(phi), np.sin(phi)])
        for r in np.linspace(0.0, 1.0, 20):
            ray = np.array([1.0, r * d[0], r * d[1]])
            # distance from v to the ray {t * ray, t >= 0} minimized in closed form
            t = max(0.0, np.dot(v, ray) / np.dot(ray, ray))
            cand = t * ray
            dist = np.linalg.norm(v - cand)
            if dist < best_d:
                best_d = dist
                best = cand
    return best


def test_soc_middle_region_against_brute_force():
    spec = ConeSpec(soc_dims=(3,))
    v = np.array([1.0, 2.0, 0.0])
    oracle = brute_force_soc_projection(v)
    expected = np.array([1.5, 1.5, 0.0])  # value confirmed by the oracle scan
    assert np.linalg.norm(oracle - expected) < 5e-3
    got = project(v, spec)
    np.testing.assert_allclose(got, expected, atol=1e-12)
    # Moreau cross-check for the same point
    polar_part = -project(-v, dual(spec))
    np.testing.assert_allclose(got + polar_part, v, atol=1e-12)


def test_nonneg_jacobian_diag():
    spec = ConeSpec(nonneg_dim=2)
    jac = project_jacobian(np.array([1.0, -1.0]), spec)
    np.testing.assert_allclose(jac, np.diag([1.0, 0.0]))


def test_nonneg_tie_maps_to_zero():
    spec = ConeSpec(nonneg_dim=3)
    jac = project_jacobian(np.array([0.0, 2.0, -0.5]), spec)
    np.testing.assert_allclose(jac, np.diag([0.0, 1.0, 0.0]))


def test_soc_interior_jacobian_identity():
    spec = ConeSpec(soc_dims=(4,))
    jac = project_jacobian(np.array([5.0, 1.0, 1.0, 0.5]), spec)
    np.testing.assert_allclose(jac, np.eye(4))


def finite_difference_jacobian(v, spec, eps=1e-7):
    n = v.size
    jac = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = eps
        jac[:, k] = (project(v + e, spec) - project(v - e, spec)) / (2 * eps)
    return jac


def test_soc_middle_jacobian_matches_finite_differences():
    spec = ConeSpec(soc_dims=(3,))
    v = np.array([1.0, 2.0, 0.0])
    fd = finite_difference_jacobian(v, spec)
    np.testing.assert_allclose(project_jacobian(v, spec), fd, atol=1e-6)


def test_dual_swaps_zero_and_free():
    assert dual(ConeSpec(zero_dim=3)) == ConeSpec(free_dim=3)
    assert dual(ConeSpec(nonneg_dim=2)) == ConeSpec(nonneg_dim=2)


def test_dual_involution():
    rng = np.random.default_rng(0)
    for k in range(20):
        spec = random_spec(rng, with_free=bool(k % 2))
        assert dual(dual(spec)) == spec


def test_dual_mixed_blocks_rejected():
    with pytest.raises(ValueError):
        dual(ConeSpec(zero_dim=1, free_dim=1))


def test_dimension_mismatch_raises():
    spec = ConeSpec(nonneg_dim=2)
    with pytest.raises(ValueError):
        project(np.zeros(3), spec)
    with pytest.raises(ValueError):
        project_jacobian(np.zeros(3), spec)


def test_moreau_idempotence_nonexpansiveness():
    rng = np.random.default_rng(42)
    for k in range(300):
        spec = random_spec(rng, with_free=bool(k % 2))
        n = spec.total_dim
        if n == 0:
            continue
        v = rng.normal(scale=3.0, size=n)
        u = rng.normal(scale=3.0, size=n)
        proj = project(v, spec)
        moreau = proj - project(-v, dual(spec))
        np.testing.assert_allclose(moreau, v, atol=1e-12)
        np.testing.assert_allclose(project(proj, spec), proj, atol=1e-12)
        assert np.linalg.norm(project(u, spec) - proj) <= np.linalg.norm(u - v) + 1e-12


def test_jacobian_symmetric_psd_and_matches_fd_off_boundary():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 60:
        spec = random_spec(rng, with_free=bool(checked % 2))
        n = spec.total_dim
        if n == 0:
            continue
        v = rng.normal(scale=2.0, size=n)
        if _near_boundary(v, spec):
            continue
        jac = project_jacobian(v, spec)
        np.testing.assert_allclose(jac, jac.T, atol=1e-12)
        eigs = np.linalg.eigvalsh(0.5 * (jac + jac.T))
        assert eigs.min() > -1e-12
        assert eigs.max() < 1.0 + 1e-12
        fd = finite_difference_jacobian(v, spec)
        np.testing.assert_allclose(jac, fd, atol=1e-6)
        checked += 1


def _near_boundary(v, spec, margin=1e-2):
    i = spec.zero_dim + spec.free_dim
    if np.any(np.abs(v[i:i + spec.nonneg_dim]) < margin):
        return True
    i += spec.nonneg_dim
    for d in spec.soc_dims:
        t, x = v[i], v[i + 1:i + d]
        if abs(np.linalg.norm(x) - abs(t)) < margin:
            return True
        i += d
    return False
