import numpy as np
import pytest
from hypothesis import given, strategies as st

from symtomo.bodies import Ellipsoid
from symtomo.ellipsoid_exact import (
    Polynomial,
    common_root_multiplicity,
    convex_combination_root_oracle,
    eigen_clusters,
    eq16_axis,
    eq17_membership,
    factor_polys,
    section_centroid,
    section_quadratic_form,
    wa_charpoly,
)
from symtomo.geom_core import AffineHyperplane, EmptySectionError, chart_of, random_unit_vectors, rng

seeds = st.integers(0, 2**31 - 1)


def _direct_charpoly(a, u):
    """det(B - λ) of the central section computed from the section matrix itself."""
    E = Ellipsoid(np.diag(a))
    B, _ = section_quadratic_form(E, AffineHyperplane(u, 0.0))
    m = B.shape[0]
    # np.poly gives det(λ - B), highest degree first
    return Polynomial((-1) ** m * np.poly(B)[::-1])


@given(seed=seeds, n=st.integers(2, 8))
def test_weinstein_aronszajn_identity(seed, n):
    g = rng(seed)
    a = g.uniform(0.5, 5.0, n)
    u = random_unit_vectors(g, 1, n)[0]
    assert wa_charpoly(a, u).allclose(_direct_charpoly(a, u), rtol=1e-9)


def test_wa_coordinate_slice_and_diagonal():
    a = [1.0, 2.0, 3.0]
    assert np.allclose(np.sort(wa_charpoly(a, [0, 0, 1.0]).roots().real), [1, 2])
    r = wa_charpoly([1.0, 4.0], [np.cos(np.pi / 4), np.sin(np.pi / 4)]).roots()
    assert np.allclose(r, [2.5])


def test_wa_leading_coefficient_sign():
    for n in range(2, 7):
        f = wa_charpoly(np.arange(1, n + 1.0), np.ones(n) / np.sqrt(n))
        assert f.degree == n - 1 and np.sign(f.coeffs[-1]) == (-1) ** (n - 1)


# ---------------------------------------------------------------- sections


def test_section_centroid_example():
    c = section_centroid([[2.0, 1.0], [0.0, 1.0]], [0.0, 0.0], [1.0, 0.0], 1.0)
    assert np.allclose(c, [1.0, 0.2])


@given(seed=seeds, n=st.integers(2, 5))
def test_section_centroid_equals_section_centre(seed, n):
    g = rng(seed)
    A = np.eye(n) + 0.4 * g.standard_normal((n, n))
    b = 0.3 * g.standard_normal(n)
    E = Ellipsoid.from_factor(A, b)
    xi = random_unit_vectors(g, 1, n)[0]
    lo, hi = -E.support(-xi), E.support(xi)
    t = float(lo + (hi - lo) * g.uniform(0.05, 0.95))
    c = section_centroid(A, b, xi, t)
    H = AffineHyperplane(xi, t)
    _, y0 = section_quadratic_form(E, H)
    assert np.allclose(chart_of(H).embed(y0), c, atol=1e-9)


def test_section_centroid_miss_raises():
    with pytest.raises(EmptySectionError):
        section_centroid(np.eye(3), np.zeros(3), [0, 0, 1.0], 1.5)


# ---------------------------------------------------------------- eigen clusters


def test_eigen_cluster_examples():
    assert eigen_clusters(np.eye(3)).multiplicities == [3]
    assert eigen_clusters(np.diag([1, 1 + 1e-12, 5]), 1e-8).multiplicities == [2, 1]


@given(seed=seeds, n=st.integers(2, 6))
def test_eigen_clusters_match_recluster(seed, n):
    g = rng(seed)
    M = g.standard_normal((n, n))
    M = M + M.T
    ec = eigen_clusters(M, 1e-3)
    w = np.sort(np.linalg.eigvalsh(M))
    breaks = int(np.sum(np.diff(w) > 1e-3))
    assert len(ec.clusters) == breaks + 1


# ---------------------------------------------------------------- common roots


def test_common_root_examples():
    f1 = Polynomial.from_roots([2, 2, 5])
    f2 = Polynomial.from_roots([2, 2, -1])
    assert abs(common_root_multiplicity([f1, f2], 2) - 2) < 1e-6
    assert common_root_multiplicity([Polynomial.from_roots([1]), Polynomial.from_roots([2])], 1) is None


def test_revolution_spectrum_shares_root_three():
    polys = factor_polys([3, 3, 3, 7])
    z = common_root_multiplicity(polys, 2)
    assert z is not None and abs(z - 3) < 1e-6
    assert convex_combination_root_oracle(polys, 2, 1000, seed=0).verdict == "pass"


def test_two_double_axes_have_no_common_double_root():
    polys = factor_polys([2, 2, 5, 5])
    assert common_root_multiplicity(polys, 2) is None
    assert convex_combination_root_oracle(polys, 2, 1000, seed=0).verdict == "fail"


def test_oracle_simple_fail():
    polys = [Polynomial.from_roots([1, 2]), Polynomial.from_roots([3, 4])]
    assert convex_combination_root_oracle(polys, 2, 200, seed=1).verdict == "fail"


@given(seed=seeds)
def test_root_finder_agrees_with_oracle(seed):
    g = rng(seed)
    shared = bool(g.integers(0, 2))
    z0 = float(g.uniform(-2, 2))
    polys = []
    for _ in range(3):
        other = g.uniform(-3, 3, 2)
        roots = [z0, z0] if shared else [z0 + g.uniform(0.2, 1), z0 - g.uniform(0.2, 1)]
        polys.append(Polynomial.from_roots(list(roots) + list(other)))
    found = common_root_multiplicity(polys, 2) is not None
    oracle = convex_combination_root_oracle(polys, 2, 100, seed=seed).verdict == "pass"
    assert found == shared
    assert oracle == shared


# ---------------------------------------------------------------- axis and span predicates


@given(seed=seeds, n=st.integers(2, 5))
def test_axis_test_orthogonal_always_parallel(seed, n):
    g = rng(seed)
    Q = np.linalg.qr(g.standard_normal((n, n)))[0]
    l, h = random_unit_vectors(g, 2, n)
    assert eq16_axis(Q, l, h).parallel


def test_axis_test_identity_and_eigenvector():
    l = np.array([1.0, 0, 0])
    h = np.array([0.6, 0.8, 0])
    r = eq16_axis(np.eye(3), l, h)
    assert r.parallel and np.allclose(r.w1, l - (l @ h) * h)
    d = eq16_axis(np.diag([1.0, 2, 3]), l, l)
    assert d.parallel and d.degenerate


@given(seed=seeds)
def test_axis_test_matches_rank_oracle(seed):
    g = rng(seed)
    A = np.diag([1.0, 2.0, 3.0])
    l = np.array([1.0, 0, 0])
    h = random_unit_vectors(g, 1, 3)[0]
    r = eq16_axis(A, l, h)
    s = np.linalg.svd(np.vstack([r.w1 / np.linalg.norm(r.w1), r.w2 / np.linalg.norm(r.w2)]), compute_uv=False)
    assert r.parallel == bool(s[1] < 1e-9)


def test_span_membership_examples():
    assert eq17_membership(np.eye(3), np.zeros(3)).verdict == "pass"
    r = eq17_membership(np.eye(3), np.array([1.0, 0, 0]))
    assert r.verdict == "fail" and abs(r.witness @ [1.0, 0, 0]) < 1 - 1e-6
    r = eq17_membership(np.diag([1.0, 2, 3]), np.array([1.0, 0, 0]))
    assert r.verdict == "fail" and abs(abs(r.witness[1]) - 1) < 1e-12
