import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symtomo.bodies import Ellipsoid, Polytope, gallery
from symtomo.geom_core import (
    AffineHyperplane,
    AffineMap,
    GeometryError,
    random_unit_vectors,
    rng,
    subspace_meet,
)
from symtomo.sections import section
from symtomo.symmetry import (
    GroupAction,
    detect_aligned_reflection,
    detect_central,
    detect_revolution_axis,
    fixed_dimension,
    invariance_residual,
    moment_normalize,
    rep_matrix,
    rho_k_sample,
)

seeds = st.integers(0, 2**31 - 1)


def _rot_z(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


# ---------------------------------------------------------------- representations


def test_rep_matrix_examples():
    assert np.array_equal(rep_matrix("reflection", 4, 3), np.diag([-1.0, 1, 1, 1]))
    assert np.array_equal(rep_matrix("reflection", 4, 0), -np.eye(4))
    assert np.array_equal(rep_matrix("quaternion", 4, params=[1, 0, 0, 0]), np.eye(4))


def test_rep_matrix_rejects_bad_input():
    with pytest.raises(GeometryError):
        rep_matrix("reflection", 3, 3)
    with pytest.raises(GeometryError):
        rep_matrix("quaternion", 4, params=[1, 1, 0, 0])
    with pytest.raises(GeometryError):
        rep_matrix("rotation", 4, 1)


@given(n=st.integers(1, 7), data=st.data())
def test_reflection_generator_is_involution_with_k_fixed(n, data):
    k = data.draw(st.integers(0, n - 1))
    g = rep_matrix("reflection", n, k)
    assert np.allclose(g @ g, np.eye(n), atol=1e-12)
    assert fixed_dimension([g]) == k


@given(seed=seeds, n=st.integers(2, 6), data=st.data())
def test_group_action_elements_fix_subspace(seed, n, data):
    k = data.draw(st.integers(0, n - 1))
    g0 = rng(seed)
    B = np.linalg.qr(g0.standard_normal((n, n)))[0][:, :k]
    p = g0.standard_normal(n)
    for kind in ("reflection", "rotation"):
        for g in GroupAction(kind, k, p, B).sample(4, seed):
            L = g.linear
            assert np.allclose(L.T @ L, np.eye(n), atol=1e-12)
            pts = p + (B @ g0.standard_normal((k, 3))).T
            assert np.allclose(g.apply(pts), pts, atol=1e-12)
    gen = GroupAction("reflection", k, p, B).generator().linear
    assert np.allclose(gen @ gen, np.eye(n), atol=1e-12)


def test_rho_sample_fixes_last_axis():
    for g in rho_k_sample(3, 1, seed=5, count=10):
        assert np.allclose(g.apply([0, 0, 0.7]), [0, 0, 0.7], atol=1e-12)


@given(seed=seeds)
def test_quaternion_orbits_are_spheres(seed):
    g = rng(seed)
    a = random_unit_vectors(g, 100, 4)
    x = g.standard_normal((100, 4))
    for ai, xi in zip(a, x):
        assert abs(np.linalg.norm(rep_matrix("quaternion", 4, params=ai) @ xi) - np.linalg.norm(xi)) < 1e-12


# ---------------------------------------------------------------- invariance residual


def test_invariance_residual_examples():
    Q = np.linalg.qr(rng(3).standard_normal((3, 3)))[0]
    assert invariance_residual(gallery("ball"), AffineMap.linear_map(Q), seed=0) < 1e-12
    assert invariance_residual(gallery("cube"), AffineMap.linear_map(_rot_z(np.pi / 2)), seed=0) < 1e-12
    pb = gallery("perturbed_ball", eps=0.05)
    assert invariance_residual(pb, AffineMap.linear_map(np.diag([-1.0, 1, 1])), dirs=64, seed=0) > 1e-3


def test_spherocylinder_invariant_under_axial_rotations():
    K = gallery("spherocylinder")
    for g in rho_k_sample(3, 1, seed=2, count=5):
        assert invariance_residual(K, g, seed=1) < 1e-9


@given(seed=seeds)
@settings(max_examples=15)
def test_invariance_residual_conjugation_covariance(seed):
    g0 = rng(seed)
    A = np.eye(3) + 0.3 * g0.standard_normal((3, 3))
    A /= np.cbrt(abs(np.linalg.det(A)))
    Amap = AffineMap(A, 0.2 * g0.standard_normal(3))
    K = gallery("ellipsoid", semi_axes=(1.0, 1.0, 2.0))
    g = AffineMap.linear_map(_rot_z(g0.uniform(0, 2 * np.pi)))
    r0 = invariance_residual(K, g, seed=seed)
    r1 = invariance_residual(K.transformed(Amap), Amap.conjugate(g), seed=seed)
    assert abs(r0 - r1) < 1e-8


# ---------------------------------------------------------------- moment normalization


def test_moment_normalize_ellipsoid_is_ball():
    E = Ellipsoid.from_factor(np.array([[2.0, 0.3, 0], [0, 1.0, 0], [0.1, 0, 0.5]]), [0.5, -1, 0.2])
    N, K = moment_normalize(E, samples=200_000, seed=0)
    U = random_unit_vectors(rng(1), 200, 3)
    assert np.max(np.abs(K.support(U) - 1.0)) < 0.03


def test_moment_normalize_stretched_box():
    V = np.array(np.meshgrid([-2, 2], [-1, 1], [-1, 1], indexing="ij")).reshape(3, -1).T
    N, _ = moment_normalize(Polytope(V), samples=200_000, seed=0)
    G = N.linear.T @ N.linear
    G /= G[1, 1]
    assert np.allclose(G, np.diag([0.25, 1, 1]), atol=0.02)


# ---------------------------------------------------------------- detectors


def test_detect_central_examples():
    r = detect_central(gallery("ball"), seed=0)
    assert r.passed and np.linalg.norm(r.parameters["center"]) < 1e-6
    t = np.array([0.3, -0.2, 0.1])
    cube = gallery("cube")
    r = detect_central(Polytope(cube.vertices + t), seed=0)
    assert r.passed and np.allclose(r.parameters["center"], t, atol=1e-9)


def test_detect_central_on_double_disk_sections():
    K = gallery("double_disk")
    through = section(K, AffineHyperplane([0.3, 0.5, 1.0], 0.0))
    off = section(K, AffineHyperplane([0.3, 0.5, 1.0], 0.4))
    assert detect_central(through.body, dirs=64, seed=0, samples=2000).residual < 1e-6
    assert detect_central(off.body, dirs=64, seed=0, samples=2000).residual > 1e-3


def test_aligned_reflection_disk():
    S = section(gallery("ball"), AffineHyperplane([0.2, 0.1, 1.0], 0.0))
    for ang in (0.1, 1.0, 2.5):
        W = np.array([[np.cos(ang)], [np.sin(ang)]])
        r = detect_aligned_reflection(S, np.zeros(2), W)
        assert r.residual < 1e-8 and abs(r.parameters["axis"] @ W[:, 0]) < 1e-12


def test_aligned_reflection_cube_section_affine():
    S = section(gallery("cube"), AffineHyperplane([0.3, 0.0, 1.0], 0.0))
    F = S.chart.frame
    W = F.T @ subspace_meet(np.eye(3)[:, :2], F)
    assert detect_aligned_reflection(S, np.zeros(2), W, mode="affine").residual < 1e-6


def test_aligned_reflection_negative_control():
    S = section(gallery("perturbed_ball", eps=0.05), AffineHyperplane([0.2, 0.3, 1.0], 0.0))
    r = detect_aligned_reflection(S, np.zeros(2), np.array([[1.0], [0.0]]), mode="affine")
    assert r.verdict == "fail" and r.residual > 1e-3


@given(seed=seeds)
@settings(max_examples=8)
def test_affine_reflection_verdict_is_linear_invariant(seed):
    g0 = rng(seed)
    S = section(gallery("cube"), AffineHyperplane([0.3, 0.0, 1.0], 0.0))
    F = S.chart.frame
    W = F.T @ subspace_meet(np.eye(3)[:, :2], F)
    L = np.eye(2) + 0.4 * g0.standard_normal((2, 2))
    if abs(np.linalg.det(L)) < 0.2:
        L = L + np.eye(2)
    base = detect_aligned_reflection(S, np.zeros(2), W, mode="affine").verdict
    moved = detect_aligned_reflection(S.body.transformed(AffineMap.linear_map(L)), np.zeros(2), L @ W,
                                      mode="affine").verdict
    assert base == moved == "pass"
    other = np.array([[1.0], [1.3]])
    b2 = detect_aligned_reflection(S, np.zeros(2), other, mode="affine").verdict
    m2 = detect_aligned_reflection(S.body.transformed(AffineMap.linear_map(L)), np.zeros(2), L @ other,
                                   mode="affine").verdict
    assert b2 == m2


def test_revolution_axis_examples():
    r = detect_revolution_axis(gallery("spherocylinder"), np.zeros(3), seed=0)
    assert r.residual < 1e-8 and np.arccos(min(1.0, abs(r.parameters["axis"][2]))) < 1e-6
    b = detect_revolution_axis(gallery("ball"), np.zeros(3), seed=0)
    assert b.residual < 1e-8 and b.multiplicity_flag
    c = detect_revolution_axis(gallery("cube"), np.zeros(3), seed=0)
    assert c.verdict == "fail" and c.residual > 1e-2
