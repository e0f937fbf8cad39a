import numpy as np
import pytest
from hypothesis import given, strategies as st

from symtomo.bodies import (
    GALLERY,
    Ellipsoid,
    ImplicitBody,
    NotInteriorError,
    Polytope,
    body_from_json,
    centroid_mc,
    gallery,
)
from symtomo.geom_core import AffineMap, GeometryError, random_unit_vectors, rng, sphere_grid

seeds = st.integers(0, 2**31 - 1)


def _spd(g, n):
    A = g.standard_normal((n, n))
    return A @ A.T + 0.5 * np.eye(n)


def _dense_support(K, U, count=20000):
    """Brute-force support from boundary points seen from the interior point."""
    q = K.interior_point()
    D = sphere_grid(K.n, count)
    X = K.boundary_points(q, D)
    return (X @ U.T).max(axis=0)


# ---------------------------------------------------------------- ellipsoids


@given(seed=seeds, n=st.integers(2, 5))
def test_ellipsoid_support_boundary_is_maximizer(seed, n):
    g = rng(seed)
    E = Ellipsoid(_spd(g, n), g.standard_normal(n))
    u = random_unit_vectors(g, 1, n)[0]
    h = E.support(u)
    # the maximizer c + Q^{-1}u / sqrt(u^T Q^{-1} u) lies on the boundary
    x = E.c + E.Qinv @ u / np.sqrt(u @ E.Qinv @ u)
    assert abs(E.level(x)[0] - 1) < 1e-9
    assert abs(x @ u - h) < 1e-9


@given(seed=seeds, n=st.integers(2, 5))
def test_radial_lands_on_boundary(seed, n):
    g = rng(seed)
    E = Ellipsoid(_spd(g, n), np.zeros(n))
    p = 0.3 * random_unit_vectors(g, 1, n)[0] / np.sqrt(np.linalg.eigvalsh(E.Q).max())
    U = random_unit_vectors(g, 10, n)
    X = E.boundary_points(p, U)
    assert np.allclose(E.level(X), 1, atol=1e-9)


@given(seed=seeds, n=st.integers(2, 4))
def test_transformed_support_covariance(seed, n):
    g = rng(seed)
    E = Ellipsoid(_spd(g, n))
    L = np.eye(n) + 0.3 * g.standard_normal((n, n))
    t = g.standard_normal(n)
    F = E.transformed(AffineMap(L, t))
    U = random_unit_vectors(g, 6, n)
    assert np.allclose(F.support(U), E.support(U @ L) + U @ t, atol=1e-9)


def test_radial_requires_interior():
    with pytest.raises(NotInteriorError):
        gallery("ball", n=3).radial([2.0, 0, 0], [1.0, 0, 0])


def test_ellipsoid_rejects_indefinite():
    with pytest.raises(GeometryError):
        Ellipsoid(np.diag([1.0, -1.0]))


# ---------------------------------------------------------------- polytopes


def test_cube_support_and_chords():
    C = gallery("cube", n=3)
    U = random_unit_vectors(rng(1), 20, 3)
    assert np.allclose(C.support(U), np.abs(U).sum(axis=1))
    lo, hi = C.chords(np.zeros((1, 3)), np.array([[1.0, 0, 0]]))
    assert np.allclose([lo[0], hi[0]], [-1, 1])


@given(seed=seeds)
def test_polytope_support_matches_vertices(seed):
    g = rng(seed)
    V = g.standard_normal((12, 3))
    P = Polytope.hull_of(V)
    U = random_unit_vectors(g, 5, 3)
    assert np.allclose(P.support(U), (V @ U.T).max(axis=0), atol=1e-12)


# ---------------------------------------------------------------- implicit bodies


@pytest.mark.parametrize("name,params", [("spherocylinder", {"n": 3}), ("lens", {"n": 3}),
                                         ("double_disk", {"scale": 1.0})])
def test_closed_support_against_brute_force(name, params):
    K = gallery(name, **params)
    U = random_unit_vectors(rng(2), 8, 3)
    h = K.support(U)
    ref = _dense_support(K, U)
    assert np.all(h >= ref - 1e-9)
    assert np.max(h - ref) < 5e-3


def test_spherocylinder_support_formula():
    K = gallery("spherocylinder", n=3, d=1.0, r=0.5)
    U = random_unit_vectors(rng(3), 10, 3)
    assert np.allclose(K.support(U), np.abs(U[:, 2]) + 0.5)


def test_numeric_support_perturbed_ball():
    K = gallery("perturbed_ball", n=3, eps=0.05)
    assert isinstance(K, ImplicitBody)
    U = random_unit_vectors(rng(4), 3, 3)
    h = K.support(U)
    ref = _dense_support(K, U, 40000)
    assert np.all(h >= ref - 1e-9) and np.max(h - ref) < 5e-3


def test_perturbed_ball_eps_limit():
    with pytest.raises(GeometryError):
        gallery("perturbed_ball", n=3, eps=0.2)


def test_gallery_names_complete():
    assert set(GALLERY) >= {"ball", "ellipsoid", "cube", "lens", "double_disk", "spherocylinder",
                            "perturbed_ball"}
    with pytest.raises(GeometryError):
        gallery("dodecahedron")


@pytest.mark.parametrize("name,params", [("ball", {"n": 3}), ("ellipsoid", {"semi_axes": [1, 2, 3]}),
                                         ("cube", {"n": 3}), ("spherocylinder", {"n": 3}),
                                         ("perturbed_ball", {"n": 3})])
def test_json_round_trip(name, params):
    K = gallery(name, **params)
    K2 = body_from_json(K.to_json())
    X = rng(5).uniform(-1.5, 1.5, (50, K.n))
    assert np.array_equal(K.contains(X), K2.contains(X))


# ---------------------------------------------------------------- Monte Carlo centroid


def test_centroid_mc_within_stderr():
    E = Ellipsoid(np.diag([1.0, 0.25, 4.0]), np.array([0.3, -0.2, 0.1]))
    mean, se = centroid_mc(E, 20000, seed=9)
    assert np.all(np.abs(mean - E.c) <= 4 * se)


def test_centroid_mc_reproducible():
    K = gallery("spherocylinder", n=3)
    a, _ = centroid_mc(K, 5000, seed=1)
    b, _ = centroid_mc(K, 5000, seed=1)
    assert np.array_equal(a, b)
