"""Linear and affine geometry shared by every other module.

Hyperplanes carry a canonical orientation so they can be used as keys, charts
give a reproducible orthonormal frame on a hyperplane, and all randomness goes
through seeded counter-based generators.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import subspace_angles

RANK_TOL = 1e-9
UNIT_TOL = 1e-12


class GeometryError(ValueError):
    """Invalid geometric input (bad dimensions, degenerate data)."""


class EmptySectionError(GeometryError):
    """A hyperplane misses the body."""


class DegenerateSectionError(GeometryError):
    """A hyperplane only touches the body (supporting hyperplane)."""


class NotInteriorError(GeometryError):
    """A point expected to be interior is not."""


def rng(seed: int | np.random.Generator) -> np.random.Generator:
    """Counter-based generator for ``seed``; generators pass through untouched."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise GeometryError("an explicit seed is required")
    return np.random.Generator(np.random.Philox(int(seed)))


def substream(seed: int, index: int) -> np.random.Generator:
    """Disjoint stream number ``index`` derived from ``seed``."""
    return np.random.Generator(np.random.Philox(int(seed)).jumped(int(index) + 1))


def random_unit_vectors(gen: np.random.Generator, count: int, n: int) -> np.ndarray:
    """Rows uniformly distributed on the unit sphere S^{n-1}."""
    v = gen.standard_normal((count, n))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    # a Gaussian vector of norm exactly zero has probability zero, guard anyway
    norms[norms == 0] = 1.0
    return v / norms


def fibonacci_sphere(count: int) -> np.ndarray:
    """Nearly uniform deterministic points on S^2."""
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def sphere_grid(n: int, count: int, seed: int = 0, hemisphere: bool = False) -> np.ndarray:
    """Deterministic direction grid on S^{n-1}.

    n=2 uses equally spaced angles, n=3 a Fibonacci lattice, larger n seeded
    random points. With ``hemisphere`` the antipodal duplicates are folded so
    that the last nonzero coordinate is nonnegative.
    """
    if n == 1:
        pts = np.array([[1.0]]) if hemisphere else np.array([[1.0], [-1.0]])
        return pts
    if n == 2:
        span = np.pi if hemisphere else 2 * np.pi
        ang = (np.arange(count) + 0.5) * span / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if n == 3:
        pts = fibonacci_sphere(2 * count if hemisphere else count)
    else:
        pts = random_unit_vectors(rng(seed), 2 * count if hemisphere else count, n)
    if hemisphere:
        pts = pts[pts[:, -1] >= 0][:count]
    return pts


def canonical_sign(v: np.ndarray, tol: float = 0.0) -> float:
    """+1 or -1 so that the first coordinate with |v_i| > tol becomes positive."""
    for x in v:
        if abs(x) > tol:
            return 1.0 if x > 0 else -1.0
    return 1.0


@dataclass(frozen=True, eq=False)
class AffineHyperplane:
    """The hyperplane {x : <normal, x> = offset}, stored in canonical form."""

    normal: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        xi = np.asarray(self.normal, dtype=float).reshape(-1)
        nrm = np.linalg.norm(xi)
        if nrm == 0 or not np.isfinite(nrm):
            raise GeometryError("hyperplane normal must be a nonzero finite vector")
        t = float(self.offset) / nrm
        xi = xi / nrm
        s = canonical_sign(xi)
        xi = s * xi
        xi.setflags(write=False)
        object.__setattr__(self, "normal", xi)
        object.__setattr__(self, "offset", s * t)

    @classmethod
    def through(cls, point: Sequence[float], normal: Sequence[float]) -> "AffineHyperplane":
        xi = np.asarray(normal, dtype=float)
        xi = xi / np.linalg.norm(xi)
        return cls(xi, float(xi @ np.asarray(point, dtype=float)))

    @property
    def n(self) -> int:
        return self.normal.shape[0]

    @property
    def is_linear(self) -> bool:
        return abs(self.offset) <= UNIT_TOL

    def signed_distance(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.normal - self.offset

    def linear_part(self) -> "AffineHyperplane":
        return AffineHyperplane(self.normal, 0.0)

    def shifted(self, t: float) -> "AffineHyperplane":
        return AffineHyperplane(self.normal, t)

    def same_as(self, other: "AffineHyperplane", tol: float = 1e-12) -> bool:
        return (np.allclose(self.normal, other.normal, atol=tol, rtol=0)
                and abs(self.offset - other.offset) <= tol)

    def to_dict(self) -> dict:
        return {"normal": self.normal.tolist(), "offset": self.offset}

    def __repr__(self):
        return f"AffineHyperplane(normal={np.round(self.normal, 6).tolist()}, offset={self.offset:.6g})"


@dataclass(frozen=True, eq=False)
class Chart:
    """Orthonormal coordinates on a hyperplane: x = origin + frame @ y."""

    origin: np.ndarray
    frame: np.ndarray
    hyperplane: AffineHyperplane | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    def project(self, x) -> np.ndarray:
        """Chart coordinates of the orthogonal projection of x onto the hyperplane."""
        x = np.asarray(x, dtype=float)
        return (x - self.origin) @ self.frame

    def embed(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return self.origin + y @ self.frame.T

    def embed_direction(self, v) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.frame.T

    def project_direction(self, v) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.frame


def _complement_frame(xi: np.ndarray) -> np.ndarray:
    """Gram-Schmidt on xi followed by the n-1 basis vectors least aligned with xi."""
    n = xi.shape[0]
    order = np.argsort(np.abs(xi), kind="stable")[: n - 1]
    idx = np.sort(order)
    basis = [xi / np.linalg.norm(xi)]
    cols = []
    for i in idx:
        v = np.zeros(n)
        v[i] = 1.0
        for _ in range(2):  # reorthogonalize once for stability
            for b in basis:
                v = v - (b @ v) * b
        v = v / np.linalg.norm(v)
        basis.append(v)
        cols.append(v)
    return np.column_stack(cols) if cols else np.zeros((n, 0))


def chart_of(H: AffineHyperplane) -> Chart:
    """Deterministic chart on H with origin t*xi."""
    frame = _complement_frame(H.normal)
    frame.setflags(write=False)
    origin = H.offset * H.normal
    origin.setflags(write=False)
    return Chart(origin, frame, H)


def orth_complement(basis: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of span(basis)."""
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    n = basis.shape[0]
    if basis.shape[1] == 0:
        return np.eye(n)
    u, s, _ = np.linalg.svd(basis, full_matrices=True)
    r = int(np.sum(s > RANK_TOL))
    return u[:, r:]


def orthonormalize(basis: np.ndarray) -> np.ndarray:
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    if basis.shape[1] == 0:
        return basis
    u, s, _ = np.linalg.svd(basis, full_matrices=False)
    return u[:, s > RANK_TOL]


def _as_basis(S) -> np.ndarray:
    if isinstance(S, AffineHyperplane):
        if not S.is_linear:
            raise GeometryError("expected a linear hyperplane (offset 0)")
        return chart_of(S).frame
    S = np.asarray(S, dtype=float)
    if S.ndim == 1:
        return S.reshape(-1, 1) / np.linalg.norm(S)
    return S


def grassmann_distance(S1, S2) -> float:
    """Angle between two linear subspaces.

    Two hyperplanes give the dihedral angle arccos|<xi1, xi2>|. Basis matrices
    (columns orthonormal; a 1-d array is a line) give the largest principal
    angle, which for a line against a subspace is the line-subspace angle.
    """
    if isinstance(S1, AffineHyperplane) and isinstance(S2, AffineHyperplane):
        if S1.n != S2.n:
            raise GeometryError("ambient dimension mismatch")
        if not (S1.is_linear and S2.is_linear):
            raise GeometryError("grassmann_distance needs linear hyperplanes")
        c = min(1.0, abs(float(S1.normal @ S2.normal)))
        return float(np.arccos(c))
    B1, B2 = _as_basis(S1), _as_basis(S2)
    if B1.shape[0] != B2.shape[0]:
        raise GeometryError("ambient dimension mismatch")
    if B1.shape[1] == 0 or B2.shape[1] == 0:
        raise GeometryError("empty subspace has no angle")
    return float(np.max(subspace_angles(B1, B2)))


def subspace_meet(S1: np.ndarray, S2: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of span(S1) ∩ span(S2).

    Null vectors (x, y) of [S1, -S2] give the common vectors S1 x.
    """
    S1 = np.atleast_2d(np.asarray(S1, dtype=float))
    S2 = np.atleast_2d(np.asarray(S2, dtype=float))
    if S1.shape[0] != S2.shape[0]:
        raise GeometryError("ambient dimension mismatch")
    n, k1 = S1.shape
    k2 = S2.shape[1]
    if k1 == 0 or k2 == 0:
        return np.zeros((n, 0))
    M = np.hstack([S1, -S2])
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(s > tol))
    null = vt[rank:].T
    if null.shape[1] == 0:
        return np.zeros((n, 0))
    common = S1 @ null[:k1]
    q, _ = np.linalg.qr(common)
    # fix column signs for reproducibility
    for j in range(q.shape[1]):
        q[:, j] *= canonical_sign(q[:, j], 1e-12)
    return q


def sample_hyperplanes_through(p, count: int, seed: int) -> list[AffineHyperplane]:
    """``count`` hyperplanes through p with uniformly distributed normals."""
    if count < 1:
        raise GeometryError("count must be >= 1")
    p = np.asarray(p, dtype=float)
    normals = random_unit_vectors(rng(seed), count, p.shape[0])
    return [AffineHyperplane(xi, float(xi @ p)) for xi in normals]


@dataclass(frozen=True, eq=False)
class AffineMap:
    """x -> linear @ x + translation."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        L = np.atleast_2d(np.asarray(self.linear, dtype=float))
        v = np.asarray(self.translation, dtype=float).reshape(-1)
        if L.shape[0] != L.shape[1] or L.shape[0] != v.shape[0]:
            raise GeometryError("affine map dimensions do not match")
        object.__setattr__(self, "linear", L)
        object.__setattr__(self, "translation", v)

    @classmethod
    def identity(cls, n: int) -> "AffineMap":
        return cls(np.eye(n), np.zeros(n))

    @classmethod
    def linear_map(cls, L) -> "AffineMap":
        L = np.asarray(L, dtype=float)
        return cls(L, np.zeros(L.shape[0]))

    @classmethod
    def fixing(cls, L, p) -> "AffineMap":
        """The map x -> p + L(x - p)."""
        L = np.asarray(L, dtype=float)
        p = np.asarray(p, dtype=float)
        return cls(L, p - L @ p)

    @property
    def n(self) -> int:
        return self.linear.shape[0]

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x @ self.linear.T + self.translation

    __call__ = apply

    def apply_direction(self, v) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.linear.T

    def det(self) -> float:
        return float(np.linalg.det(self.linear))

    def is_invertible(self, tol: float = 1e-14) -> bool:
        s = np.linalg.svd(self.linear, compute_uv=False)
        return bool(s[-1] > tol * max(1.0, s[0]))

    def inverse(self) -> "AffineMap":
        if not self.is_invertible():
            raise GeometryError("affine map is singular")
        Li = np.linalg.inv(self.linear)
        return AffineMap(Li, -Li @ self.translation)

    def compose(self, other: "AffineMap") -> "AffineMap":
        """self ∘ other."""
        return AffineMap(self.linear @ other.linear, self.linear @ other.translation + self.translation)

    def conjugate(self, g: "AffineMap") -> "AffineMap":
        """self ∘ g ∘ self^{-1}."""
        return self.compose(g).compose(self.inverse())

    def to_dict(self) -> dict:
        return {"linear": self.linear.tolist(), "translation": self.translation.tolist()}


def reflection_matrix(normal) -> np.ndarray:
    """Orthogonal reflection in the linear hyperplane normal^⊥."""
    u = np.asarray(normal, dtype=float)
    u = u / np.linalg.norm(u)
    return np.eye(u.shape[0]) - 2.0 * np.outer(u, u)


def oblique_reflection(a, W: np.ndarray) -> np.ndarray:
    """Linear involution fixing the line <a> and negating span(W).

    Writes x = s a + w with w in span(W) and sends it to s a - w.
    """
    a = np.asarray(a, dtype=float).reshape(-1, 1)
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.shape[0] != a.shape[0]:
        W = W.T
    B = np.hstack([a, W])
    D = np.diag([1.0] + [-1.0] * W.shape[1])
    return B @ D @ np.linalg.inv(B)
