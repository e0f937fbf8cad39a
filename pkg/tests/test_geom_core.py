import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import subspace_angles

from symtomo.geom_core import (
    AffineHyperplane,
    AffineMap,
    GeometryError,
    chart_of,
    grassmann_distance,
    oblique_reflection,
    orth_complement,
    random_unit_vectors,
    reflection_matrix,
    rng,
    sample_hyperplanes_through,
    sphere_grid,
    subspace_meet,
    substream,
)

dims = st.integers(min_value=2, max_value=7)
seeds = st.integers(min_value=0, max_value=2**31 - 1)


def _normal(seed, n):
    return random_unit_vectors(rng(seed), 1, n)[0]


# ---------------------------------------------------------------- hyperplanes


def test_canonical_normal_first_nonzero_positive():
    H = AffineHyperplane([0.0, -2.0, 1.0], 3.0)
    assert H.normal[1] > 0 and np.isclose(np.linalg.norm(H.normal), 1)
    assert np.isclose(H.offset, -3.0 / np.sqrt(5))


def test_zero_normal_rejected():
    with pytest.raises(GeometryError):
        AffineHyperplane([0.0, 0.0], 1.0)


@given(seed=seeds, n=dims, t=st.floats(-3, 3))
def test_chart_round_trip(seed, n, t):
    H = AffineHyperplane(_normal(seed, n), t)
    ch = chart_of(H)
    F = ch.frame
    assert np.allclose(F.T @ F, np.eye(n - 1), atol=1e-12)
    assert np.allclose(F.T @ H.normal, 0, atol=1e-12)
    y = rng(seed + 1).standard_normal(n - 1)
    x = ch.embed(y)
    assert abs(H.signed_distance(x)) < 1e-12
    assert np.allclose(ch.project(x), y, atol=1e-12)


@given(seed=seeds, n=dims)
def test_chart_is_deterministic_under_sign_flip(seed, n):
    xi = _normal(seed, n)
    a, b = chart_of(AffineHyperplane(xi, 0.4)), chart_of(AffineHyperplane(-xi, -0.4))
    assert np.array_equal(a.frame, b.frame) and np.array_equal(a.origin, b.origin)


# ---------------------------------------------------------------- subspaces


@given(seed=seeds, n=dims)
def test_grassmann_hyperplanes_match_scipy(seed, n):
    H1 = AffineHyperplane(_normal(seed, n))
    H2 = AffineHyperplane(_normal(seed + 7, n))
    d = grassmann_distance(H1, H2)
    ref = np.max(subspace_angles(chart_of(H1).frame, chart_of(H2).frame))
    assert abs(d - ref) < 1e-7
    assert grassmann_distance(H1, H1) < 1e-7


def test_grassmann_requires_linear():
    with pytest.raises(GeometryError):
        grassmann_distance(AffineHyperplane([1.0, 0.0], 1.0), AffineHyperplane([0.0, 1.0]))


@given(seed=seeds, n=st.integers(3, 7))
def test_subspace_meet_dimension_and_membership(seed, n):
    g = rng(seed)
    k1 = int(g.integers(1, n))
    k2 = int(g.integers(n - k1 + 1, n + 1)) if k1 < n else n
    k2 = min(k2, n)
    S1 = np.linalg.qr(g.standard_normal((n, k1)))[0]
    S2 = np.linalg.qr(g.standard_normal((n, k2)))[0]
    M = subspace_meet(S1, S2)
    assert M.shape[1] == max(0, k1 + k2 - n)
    for B in (S1, S2):
        assert np.allclose(B @ (B.T @ M), M, atol=1e-9)


def test_orth_complement():
    B = np.array([[1.0], [1.0], [0.0]]) / np.sqrt(2)
    C = orth_complement(B)
    assert C.shape == (3, 2) and np.allclose(B.T @ C, 0)


def test_sample_hyperplanes_through_point():
    p = np.array([0.1, -0.2, 0.3])
    Hs = sample_hyperplanes_through(p, 20, seed=3)
    assert all(abs(H.signed_distance(p)) < 1e-14 for H in Hs)
    again = sample_hyperplanes_through(p, 20, seed=3)
    assert all(np.array_equal(a.normal, b.normal) for a, b in zip(Hs, again))


def test_sphere_grid_unit_rows():
    for n in (2, 3, 5):
        G = sphere_grid(n, 50, hemisphere=True)
        assert np.allclose(np.linalg.norm(G, axis=1), 1)
        assert np.all(G[:, -1] >= 0)


def test_substreams_differ_and_repeat():
    a = substream(5, 0).random(4)
    b = substream(5, 1).random(4)
    assert not np.allclose(a, b)
    assert np.array_equal(a, substream(5, 0).random(4))


def test_rng_requires_seed():
    with pytest.raises(GeometryError):
        rng(None)


# ---------------------------------------------------------------- affine maps


@given(seed=seeds, n=dims)
def test_affine_map_inverse_compose(seed, n):
    g = rng(seed)
    L = np.eye(n) + 0.3 * g.standard_normal((n, n))
    A = AffineMap(L, g.standard_normal(n))
    x = g.standard_normal(n)
    assert np.allclose(A.inverse()(A(x)), x, atol=1e-9)
    B = AffineMap(np.eye(n) * 2, np.ones(n))
    assert np.allclose(A.compose(B)(x), A(B(x)))


@given(seed=seeds, n=dims)
def test_fixing_map_fixes_point(seed, n):
    g = rng(seed)
    p = g.standard_normal(n)
    M = AffineMap.fixing(reflection_matrix(g.standard_normal(n)), p)
    assert np.allclose(M(p), p)
    x = g.standard_normal(n)
    assert np.allclose(M(M(x)), x, atol=1e-12)


@given(seed=seeds, n=st.integers(2, 6))
def test_oblique_reflection_involution(seed, n):
    g = rng(seed)
    W = np.linalg.qr(g.standard_normal((n, n - 1)))[0]
    a = g.standard_normal(n)
    R = oblique_reflection(a, W)
    assert np.allclose(R @ R, np.eye(n), atol=1e-8)
    assert np.allclose(R @ a, a, atol=1e-9)
    assert np.allclose(R @ W, -W, atol=1e-9)
