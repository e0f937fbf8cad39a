"""Exact ellipsoid algebra: section forms and centroids, the
Weinstein-Aronszajn characteristic polynomial of a central section, eigenvalue
multiplicity clustering, the common-root lemma for convex combinations of
polynomials, and the axis and span predicates used in the ellipsoid arguments.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .bodies import Ellipsoid
from .geom_core import (
    AffineHyperplane,
    DegenerateSectionError,
    EmptySectionError,
    GeometryError,
    chart_of,
    random_unit_vectors,
    rng,
)

TRIM_TOL = 1e-12


class Polynomial:
    """Dense real polynomial, coefficients in ascending degree."""

    def __init__(self, coeffs: Sequence[float]):
        c = np.asarray(coeffs, dtype=float).reshape(-1)
        if c.size == 0:
            c = np.zeros(1)
        scale = np.max(np.abs(c)) if c.size else 0.0
        k = c.size
        while k > 1 and abs(c[k - 1]) <= TRIM_TOL * scale:
            k -= 1
        self.coeffs = c[:k].copy()

    @classmethod
    def from_roots(cls, roots, lead: float = 1.0) -> "Polynomial":
        return cls(lead * np.real_if_close(P.polyfromroots(roots)))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def scale(self) -> float:
        s = float(np.max(np.abs(self.coeffs)))
        return s if s > 0 else 1.0

    def __call__(self, z):
        return P.polyval(z, self.coeffs)

    def deriv(self, j: int = 1) -> "Polynomial":
        if j == 0:
            return self
        if j > self.degree:
            return Polynomial([0.0])
        return Polynomial(P.polyder(self.coeffs, j))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(P.polyadd(self.coeffs, other.coeffs))

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(P.polymul(self.coeffs, other.coeffs))
        return Polynomial(self.coeffs * float(other))

    __rmul__ = __mul__

    def roots(self) -> np.ndarray:
        """Companion-matrix roots followed by a few Newton steps."""
        if self.degree < 1:
            return np.zeros(0, dtype=complex)
        z = P.polyroots(self.coeffs).astype(complex)
        d1 = P.polyder(self.coeffs)
        for _ in range(3):
            f = P.polyval(z, self.coeffs)
            df = P.polyval(z, d1)
            ok = np.abs(df) > 1e-8 * self.scale
            step = np.where(ok, f / np.where(ok, df, 1.0), 0.0)
            # only accept steps that reduce |f|; multiple roots stay put
            cand = z - step
            better = np.abs(P.polyval(cand, self.coeffs)) < np.abs(f)
            z = np.where(better, cand, z)
        return z

    def allclose(self, other: "Polynomial", rtol: float = 1e-9) -> bool:
        a, b = self.coeffs, other.coeffs
        k = max(a.size, b.size)
        a = np.pad(a, (0, k - a.size))
        b = np.pad(b, (0, k - b.size))
        return bool(np.max(np.abs(a - b)) <= rtol * max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300))

    def to_list(self) -> list[float]:
        return self.coeffs.tolist()

    def __repr__(self):
        return f"Polynomial({np.round(self.coeffs, 10).tolist()})"


# ----------------------------------------------------------------------------
# sections of ellipsoids


def section_quadratic_form(E: Ellipsoid, H: AffineHyperplane, tol: float = 1e-10):
    """(B, y0) with E ∩ H = {y : (y - y0)^T B (y - y0) <= 1} in the chart of H."""
    ch = chart_of(H)
    F, o = ch.frame, ch.origin
    QF = E.Q @ F
    B0 = F.T @ QF
    B0 = 0.5 * (B0 + B0.T)
    d = o - E.c
    rhs = QF.T @ d
    y0 = -np.linalg.solve(B0, rhs)
    kappa = float(d @ E.Q @ d + y0 @ rhs)
    slack = 1.0 - kappa
    if slack < -tol:
        raise EmptySectionError("hyperplane misses the ellipsoid")
    if slack <= tol:
        raise DegenerateSectionError("hyperplane is tangent to the ellipsoid")
    B = B0 / slack
    return 0.5 * (B + B.T), y0


def section_centroid(A, b, xi, t: float) -> np.ndarray:
    """Centroid of (A·ball + b) ∩ {<xi, x> = t}."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    xi = np.asarray(xi, dtype=float)
    nrm = np.linalg.norm(xi)
    xi, t = xi / nrm, t / nrm
    M = A @ A.T
    Mxi = M @ xi
    q = float(xi @ Mxi)
    s = t - float(xi @ b)
    if s * s >= q:
        raise EmptySectionError("hyperplane misses the ellipsoid interior")
    return s / q * Mxi + b


def wa_charpoly(a, u) -> Polynomial:
    """det(B - λI) for the central section of {x^T diag(a) x <= 1} by u^⊥.

    Equals sum_i u_i^2 prod_{j≠i} (a_j - λ); leading coefficient (-1)^{n-1}.
    """
    a = np.asarray(a, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(a <= 0):
        raise GeometryError("entries of a must be positive")
    u = u / np.linalg.norm(u)
    total = np.zeros(a.size)
    for i in range(a.size):
        c = np.ones(1)
        for j in range(a.size):
            if j != i:
                c = P.polymul(c, [a[j], -1.0])
        total[: c.size] += u[i] ** 2 * c
    return Polynomial(total)


def factor_polys(a) -> list[Polynomial]:
    """p_i(λ) = prod_{j≠i} (a_j - λ)."""
    a = np.asarray(a, dtype=float)
    out = []
    for i in range(a.size):
        c = np.ones(1)
        for j in range(a.size):
            if j != i:
                c = P.polymul(c, [a[j], -1.0])
        out.append(Polynomial(c))
    return out


@dataclass
class EigenClusters:
    values: np.ndarray
    clusters: list = field(default_factory=list)
    cluster_tol: float = 1e-7

    @property
    def multiplicities(self) -> list[int]:
        return [len(c) for c in self.clusters]

    @property
    def max_multiplicity(self) -> int:
        return max(self.multiplicities) if self.clusters else 0

    @property
    def min_gap(self) -> float:
        v = self.values
        return float(np.min(np.diff(v))) if v.size > 1 else float("inf")

    def to_dict(self):
        return {"values": self.values.tolist(), "multiplicities": self.multiplicities,
                "max_multiplicity": self.max_multiplicity, "cluster_tol": self.cluster_tol}


def _gap_clusters(values: np.ndarray, tol: float) -> list[list[float]]:
    clusters: list[list[float]] = []
    for v in values:
        if clusters and v - clusters[-1][-1] <= tol:
            clusters[-1].append(float(v))
        else:
            clusters.append([float(v)])
    return clusters


def eigen_clusters(M, cluster_tol: float = 1e-7) -> EigenClusters:
    """Single-linkage clustering of the sorted eigenvalues of symmetric M."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.allclose(M, M.T, atol=1e-10 * max(1.0, np.abs(M).max()), rtol=0):
        raise GeometryError("matrix is not symmetric")
    w = np.linalg.eigvalsh(0.5 * (M + M.T))
    return EigenClusters(w, _gap_clusters(w, cluster_tol), cluster_tol)


# ----------------------------------------------------------------------------
# common roots of convex combinations


def _root_clusters(roots: np.ndarray, rad: float) -> list[np.ndarray]:
    """Greedy complex clustering of roots within ``rad`` of a seed root."""
    left = list(range(roots.size))
    out = []
    while left:
        i = left.pop(0)
        grp = [i] + [j for j in left if abs(roots[j] - roots[i]) <= rad]
        left = [j for j in left if j not in grp]
        out.append(roots[grp])
    return out


def _scores(polys: Sequence[Polynomial], Z: np.ndarray, m: int) -> np.ndarray:
    s = np.zeros(Z.shape, dtype=float)
    for f in polys:
        c = f.coeffs
        for j in range(m):
            s = np.maximum(s, np.abs(P.polyval(Z, c)) / f.scale)
            c = P.polyder(c) if c.size > 1 else np.zeros(1)
    return s


def multiplicity_score(polys: Sequence[Polynomial], z, m: int) -> float:
    """max over f and j < m of |f^{(j)}(z)| / scale(f)."""
    return float(_scores(polys, np.array([z], dtype=complex), m)[0])


def _candidates(polys: Sequence[Polynomial], m: int, rad: float) -> list:
    cands = []
    for f in polys:
        r = f.roots()
        if r.size == 0:
            continue
        scale = max(1.0, float(np.max(np.abs(r))))
        for grp in _root_clusters(r, rad * scale):
            if grp.size >= m:
                cands.append(complex(np.mean(grp)))
        cands.extend(complex(x) for x in r)
    return cands


def _clean(z: complex, tol: float = 1e-9):
    return float(z.real) if abs(z.imag) <= tol * max(1.0, abs(z)) else z


def common_root_multiplicity(polys: Sequence[Polynomial], m: int, root_tol: float = 1e-6,
                             cluster_rad: float = 1e-3):
    """A common root of multiplicity >= m of all polys, or None."""
    if m < 1 or not polys:
        raise GeometryError("need m >= 1 and at least one polynomial")
    Z = np.array(_candidates(polys, m, cluster_rad), dtype=complex)
    if Z.size == 0:
        return None
    S = _scores(polys, Z, m)
    i = int(np.argmin(S))
    if S[i] >= root_tol:
        return None
    return _clean(complex(Z[i]))


def has_multiple_root(f: Polynomial, m: int, root_tol: float = 1e-6, cluster_rad: float = 1e-3):
    return common_root_multiplicity([f], m, root_tol, cluster_rad)


@dataclass
class OracleResult:
    verdict: str
    samples: int
    failures: int
    witness_weights: list | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self):
        return {"verdict": self.verdict, "samples": self.samples, "failures": self.failures,
                "witness_weights": self.witness_weights}


def convex_combination_root_oracle(polys: Sequence[Polynomial], m: int, grid: int = 1000,
                                   seed: int = 0, root_tol: float = 1e-6) -> OracleResult:
    """Brute force: does every sampled convex combination have an m-fold root?"""
    if grid < 100:
        raise GeometryError("grid must be >= 100")
    gen = rng(seed)
    W = gen.dirichlet(np.ones(len(polys)), size=grid)
    k = max(f.coeffs.size for f in polys)
    C = np.zeros((len(polys), k))
    for i, f in enumerate(polys):
        C[i, : f.coeffs.size] = f.coeffs
    failures, witness = 0, None
    for w in W:
        f = Polynomial(w @ C)
        if has_multiple_root(f, m, root_tol) is None:
            failures += 1
            if witness is None:
                witness = w.tolist()
    return OracleResult("pass" if failures == 0 else "fail", grid, failures, witness)


# ----------------------------------------------------------------------------
# axis and span predicates


def _angle_mod_pi(w1: np.ndarray, w2: np.ndarray) -> float:
    u1 = w1 / np.linalg.norm(w1)
    u2 = w2 / np.linalg.norm(w2)
    s = min(np.linalg.norm(u1 - u2), np.linalg.norm(u1 + u2))
    return float(2 * np.arcsin(min(1.0, s / 2)))


@dataclass
class AxisTest:
    w1: np.ndarray
    w2: np.ndarray
    parallel: bool
    degenerate: bool
    angle: float

    def to_dict(self):
        return {"w1": self.w1.tolist(), "w2": self.w2.tolist(), "parallel": self.parallel,
                "degenerate": self.degenerate, "angle": self.angle}


def eq16_axis(A, l, h, deg_tol: float = 1e-12, ang_tol: float = 1e-9) -> AxisTest:
    """Affine-axis compatibility vectors for the direction pair (l, h).

    w1 = ((A^T A)^{-1} h · h) l - (l · h)(A^T A)^{-1} h and
    w2 = A^T A l - (A^T A l · h) h; the axis condition holds when they are parallel.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    l = np.asarray(l, dtype=float)
    h = np.asarray(h, dtype=float)
    G = A.T @ A
    Gih = np.linalg.solve(G, h)
    w1 = (Gih @ h) * l - (l @ h) * Gih
    Gl = G @ l
    w2 = Gl - (Gl @ h) * h
    n1, n2 = np.linalg.norm(w1), np.linalg.norm(w2)
    degenerate = bool(n1 < deg_tol or n2 < deg_tol)
    if n1 * n2 < deg_tol:
        return AxisTest(w1, w2, True, degenerate, 0.0)
    ang = _angle_mod_pi(w1, w2)
    return AxisTest(w1, w2, bool(ang < ang_tol), degenerate, ang)


@dataclass
class SpanTest:
    verdict: str
    witness: np.ndarray | None
    max_residual: float
    tested: int

    def to_dict(self):
        return {"verdict": self.verdict, "witness": None if self.witness is None else self.witness.tolist(),
                "max_residual": self.max_residual, "tested": self.tested}


def span_residual(A, b, xi) -> float:
    """Distance from b to span{xi, A A^T xi}."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    xi = np.asarray(xi, dtype=float)
    S = np.column_stack([xi, A @ (A.T @ xi)])
    u, s, _ = np.linalg.svd(S, full_matrices=False)
    U = u[:, s > 1e-12 * s[0]]
    return float(np.linalg.norm(b - U @ (U.T @ b)))


def eq17_membership(A, b, dirs: int = 100, seed: int = 0, rel_tol: float = 1e-9) -> SpanTest:
    """Is b in span{xi, A A^T xi} for all sampled unit xi?

    Eigenvectors of A A^T are tried first (they collapse the span to a line),
    then seeded random directions.
    """
    if dirs < 100:
        raise GeometryError("dirs must be >= 100")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    nb = float(np.linalg.norm(b))
    if nb == 0:
        return SpanTest("pass", None, 0.0, 0)
    _, V = np.linalg.eigh(A @ A.T)
    X = np.vstack([V.T, random_unit_vectors(rng(seed), dirs, b.size)])
    worst = 0.0
    for i, xi in enumerate(X):
        r = span_residual(A, b, xi)
        worst = max(worst, r)
        if r >= rel_tol * nb:
            return SpanTest("fail", xi, worst, i + 1)
    return SpanTest("pass", None, worst, X.shape[0])
