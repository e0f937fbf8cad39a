"""Convex bodies with membership, support, radial and chord oracles.

Three representations: exact ellipsoids, polytopes given by their vertices and
implicit bodies {g <= 1} built from a small set of named convex gauges. Implicit
bodies are closed under affine images and hyperplane sections, which is what
lets sections of sections stay cheap.
"""
from __future__ import annotations

import abc
import json
import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, QhullError

from .geom_core import (
    AffineMap,
    GeometryError,
    NotInteriorError,
    random_unit_vectors,
    rng,
    sphere_grid,
    substream,
)
from . import _parallel

log = logging.getLogger(__name__)

INTERIOR_MARGIN = 1e-9
BISECT_MAX_ITER = 60
_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def _rows(u) -> tuple[np.ndarray, bool]:
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        return u[None, :], True
    return u, False


def _out(vals: np.ndarray, single: bool):
    return float(vals[0]) if single else vals


class ConvexBody(abc.ABC):
    """Common oracle interface. Directions may be a single vector or rows."""

    n: int

    @abc.abstractmethod
    def level(self, x) -> np.ndarray:
        """Convex function that is < 1 inside, 1 on the boundary, > 1 outside."""

    @abc.abstractmethod
    def support(self, u):
        """h_K(u) = max <x, u> over K; positively homogeneous in u."""

    @abc.abstractmethod
    def transformed(self, g: AffineMap) -> "ConvexBody":
        """The image g(K)."""

    @abc.abstractmethod
    def interior_point(self) -> np.ndarray:
        ...

    @abc.abstractmethod
    def to_dict(self) -> dict:
        ...

    def contains(self, x, tol: float = 0.0):
        x, single = _rows(x)
        inside = self.level(x) <= 1.0 + tol
        return bool(inside[0]) if single else inside

    def is_interior(self, p, margin: float = INTERIOR_MARGIN) -> bool:
        return bool(self.level(np.asarray(p, dtype=float)[None, :])[0] < 1.0 - margin)

    def _require_interior(self, p):
        if not self.is_interior(p):
            raise NotInteriorError(f"point {np.round(p, 6).tolist()} is not interior")

    def radial(self, p, u):
        """Distance from interior p to the boundary along each direction u."""
        p = np.asarray(p, dtype=float)
        self._require_interior(p)
        U, single = _rows(u)
        U = U / np.linalg.norm(U, axis=1, keepdims=True)
        return _out(self._radial(p, U), single)

    def boundary_points(self, p, U) -> np.ndarray:
        U = np.atleast_2d(np.asarray(U, dtype=float))
        U = U / np.linalg.norm(U, axis=1, keepdims=True)
        r = self.radial(p, U)
        return np.asarray(p, dtype=float) + np.asarray(r).reshape(-1, 1) * U

    def _radial(self, p: np.ndarray, U: np.ndarray) -> np.ndarray:
        # generic: bisection on the level function along each ray
        hi = np.full(U.shape[0], self._ray_bound(p))
        lo = np.zeros(U.shape[0])
        return _bisect_rays(self.level, p[None, :], U, lo, hi)

    def _ray_bound(self, p) -> float:
        c, r = self.bounding_ball()
        return float(np.linalg.norm(p - c) + r) * 1.01 + 1e-9

    def chord(self, o, d):
        """Parameter interval [s0, s1] with o + s d in K, or None."""
        res = self.chords(np.asarray(o, dtype=float)[None, :], np.asarray(d, dtype=float)[None, :])
        lo, hi = res[0][0], res[1][0]
        if not np.isfinite(lo):
            return None
        return float(lo), float(hi)

    def chords(self, O, D) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized chords; rows that miss the body get NaN."""
        return _generic_chords(self, np.atleast_2d(O), np.atleast_2d(D))

    def bounding_ball(self) -> tuple[np.ndarray, float]:
        lo, hi = self.bounding_box()
        return (lo + hi) / 2, float(np.linalg.norm(hi - lo) / 2)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        E = np.eye(self.n)
        hi = np.asarray(self.support(E))
        lo = -np.asarray(self.support(-E))
        return lo, hi

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def width(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(self.support(u) + self.support(-u))


def _bisect_rays(level: Callable, P: np.ndarray, U: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                 rtol: float = 1e-14) -> np.ndarray:
    """Boundary crossing s in [lo, hi] of level(P + s U) = 1; inside at lo, outside at hi."""
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    scale = np.maximum(np.abs(hi), 1.0)
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        inside = level(P + mid[:, None] * U) <= 1.0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
        if np.all(hi - lo <= rtol * scale):
            break
    return 0.5 * (lo + hi)


def _golden_min(f: Callable, a: np.ndarray, b: np.ndarray, iters: int = 80) -> np.ndarray:
    """Batched golden-section minimization of unimodal f on [a, b]."""
    a = a.astype(float).copy()
    b = b.astype(float).copy()
    for _ in range(iters):
        c = b - _GOLD * (b - a)
        d = a + _GOLD * (b - a)
        left = f(c) < f(d)
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        if np.all(np.abs(b - a) <= 1e-15 * np.maximum(1.0, np.abs(a))):
            break
    return 0.5 * (a + b)


def _generic_chords(K: ConvexBody, O: np.ndarray, D: np.ndarray):
    c, r = K.bounding_ball()
    r = r * 1.01 + 1e-9
    # entry/exit of the bounding ball bracket the chord
    oc = O - c
    a = np.einsum("ij,ij->i", D, D)
    b = 2 * np.einsum("ij,ij->i", D, oc)
    cc = np.einsum("ij,ij->i", oc, oc) - r * r
    disc = b * b - 4 * a * cc
    lo_out = np.full(O.shape[0], np.nan)
    hi_out = np.full(O.shape[0], np.nan)
    ok = disc > 0
    if not np.any(ok):
        return lo_out, hi_out
    sq = np.sqrt(np.where(ok, disc, 0.0))
    s0 = (-b - sq) / (2 * a)
    s1 = (-b + sq) / (2 * a)
    idx = np.nonzero(ok)[0]
    Oi, Di, s0, s1 = O[idx], D[idx], s0[idx], s1[idx]

    def phi(s):
        return K.level(Oi + s[:, None] * Di)

    smin = _golden_min(phi, s0, s1)
    fmin = phi(smin)
    hit = fmin < 1.0
    if not np.any(hit):
        return lo_out, hi_out
    j = np.nonzero(hit)[0]
    Oj, Dj = Oi[j], Di[j]
    lvl = K.level
    # bisection from the minimizer outward on both sides
    up = _bisect_rays(lvl, Oj + smin[j, None] * Dj, Dj, np.zeros(j.size), s1[j] - smin[j])
    dn = _bisect_rays(lvl, Oj + smin[j, None] * Dj, -Dj, np.zeros(j.size), smin[j] - s0[j])
    lo_out[idx[j]] = smin[j] - dn
    hi_out[idx[j]] = smin[j] + up
    return lo_out, hi_out


# ----------------------------------------------------------------------------
# Ellipsoid


class Ellipsoid(ConvexBody):
    """{x : (x - c)^T Q (x - c) <= 1}; optional factor form x = A y + b, |y| <= 1."""

    def __init__(self, Q, c=None, A=None):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape[0] != Q.shape[1]:
            raise GeometryError("Q must be square")
        if not np.allclose(Q, Q.T, atol=1e-12 * max(1.0, np.abs(Q).max())):
            raise GeometryError("Q must be symmetric")
        Q = 0.5 * (Q + Q.T)
        w = np.linalg.eigvalsh(Q)
        if w[0] <= 0:
            raise GeometryError("Q must be positive definite")
        self.n = Q.shape[0]
        self.Q = Q
        self.c = np.zeros(self.n) if c is None else np.asarray(c, dtype=float).reshape(-1)
        self.Qinv = np.linalg.inv(Q)
        self.Qinv = 0.5 * (self.Qinv + self.Qinv.T)
        self.A = None if A is None else np.asarray(A, dtype=float)
        if self.A is not None:
            Qf = np.linalg.inv(self.A @ self.A.T)
            if not np.allclose(Qf, Q, atol=1e-9 * max(1.0, np.abs(Q).max()), rtol=0):
                raise GeometryError("factor form inconsistent with Q")

    @classmethod
    def from_factor(cls, A, b=None) -> "Ellipsoid":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
        Q = np.linalg.inv(A @ A.T)
        return cls(0.5 * (Q + Q.T), b, A)

    @classmethod
    def ball(cls, n: int, radius: float = 1.0, center=None) -> "Ellipsoid":
        return cls(np.eye(n) / radius ** 2, center, np.eye(n) * radius)

    @property
    def factor(self) -> np.ndarray:
        """Some A with A A^T = Q^{-1} (Cholesky when not given)."""
        if self.A is not None:
            return self.A
        return np.linalg.cholesky(self.Qinv)

    def level(self, x):
        d = np.atleast_2d(x) - self.c
        return np.einsum("ij,jk,ik->i", d, self.Q, d)

    def support(self, u):
        U, single = _rows(u)
        vals = U @ self.c + np.sqrt(np.einsum("ij,jk,ik->i", U, self.Qinv, U))
        return _out(vals, single)

    def _quad(self, O, D):
        d = O - self.c
        a = np.einsum("ij,jk,ik->i", D, self.Q, D)
        b = 2 * np.einsum("ij,jk,ik->i", D, self.Q, d)
        cc = np.einsum("ij,jk,ik->i", d, self.Q, d) - 1.0
        return a, b, cc

    def _radial(self, p, U):
        a, b, cc = self._quad(np.broadcast_to(p, U.shape), U)
        sq = np.sqrt(b * b - 4 * a * cc)
        # numerically stable positive root
        pos_b = b >= 0
        q = np.where(pos_b, -(b + sq) / 2, (sq - b) / 2)
        return np.where(pos_b, cc / q, q / a)

    def chords(self, O, D):
        O, D = np.atleast_2d(O), np.atleast_2d(D)
        a, b, cc = self._quad(O, D)
        disc = b * b - 4 * a * cc
        ok = disc > 0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        q = -0.5 * (b + np.where(b >= 0, sq, -sq))
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = q / a
            r2 = np.where(q != 0, cc / q, r1)
        lo = np.where(ok, np.minimum(r1, r2), np.nan)
        hi = np.where(ok, np.maximum(r1, r2), np.nan)
        return lo, hi

    def transformed(self, g: AffineMap) -> "Ellipsoid":
        Li = np.linalg.inv(g.linear)
        Q = Li.T @ self.Q @ Li
        A = None if self.A is None else g.linear @ self.A
        if A is not None:
            Qf = np.linalg.inv(A @ A.T)
            Q = 0.5 * (Qf + Qf.T)
        return Ellipsoid(0.5 * (Q + Q.T), g.apply(self.c), A)

    def interior_point(self):
        return self.c.copy()

    def bounding_ball(self):
        return self.c.copy(), float(np.sqrt(np.linalg.eigvalsh(self.Qinv)[-1]))

    def semi_axes(self) -> np.ndarray:
        return 1.0 / np.sqrt(np.linalg.eigvalsh(self.Q))[::-1]

    def to_dict(self):
        return {"kind": "ellipsoid", "n": self.n,
                "payload": {"Q": self.Q.reshape(-1).tolist(), "c": self.c.tolist()}}

    def __repr__(self):
        return f"Ellipsoid(n={self.n}, semi_axes={np.round(self.semi_axes(), 6).tolist()})"


# ----------------------------------------------------------------------------
# Polytope


class Polytope(ConvexBody):
    """Convex hull of an exact extreme-point set."""

    def __init__(self, vertices, check: bool = True):
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        if V.ndim != 2:
            raise GeometryError("vertices must be a 2-d array")
        self.n = V.shape[1]
        self.vertices = V
        if self.n == 1:
            lo, hi = float(V.min()), float(V.max())
            if not hi > lo:
                raise GeometryError("degenerate 1-d polytope")
            if check and V.shape[0] != 2:
                raise GeometryError("vertex list must be the extreme-point set")
            self.eq_A = np.array([[1.0], [-1.0]])
            self.eq_b = np.array([-hi, lo])
        else:
            try:
                hull = ConvexHull(V)
            except QhullError as exc:
                raise GeometryError(f"polytope is not full-dimensional: {exc}") from None
            if check and len(hull.vertices) != V.shape[0]:
                raise GeometryError("vertex list must be the exact extreme-point set")
            self.eq_A = hull.equations[:, :-1]
            self.eq_b = hull.equations[:, -1]
        self._center = V.mean(axis=0)
        slack = -(self.eq_A @ self._center + self.eq_b)
        if np.any(slack <= 0):
            raise GeometryError("polytope has empty interior")
        self._slack = slack

    @classmethod
    def hull_of(cls, points) -> "Polytope":
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if P.shape[1] == 1:
            return cls(np.array([[P.min()], [P.max()]]))
        # merge facets bent by rounding so points lying on a facet are dropped
        scale = max(1.0, float(np.max(np.abs(P))))
        try:
            hull = ConvexHull(P, qhull_options=f"C-{1e-12 * scale:.3e}")
        except QhullError as exc:
            raise GeometryError(f"points do not span a full-dimensional hull: {exc}") from None
        return cls(P[np.sort(hull.vertices)])

    def level(self, x):
        # Minkowski gauge about the vertex mean
        d = np.atleast_2d(x) - self._center
        return np.max((d @ self.eq_A.T) / self._slack, axis=1)

    def contains(self, x, tol: float = 0.0):
        x, single = _rows(x)
        inside = np.all(x @ self.eq_A.T + self.eq_b <= tol, axis=1)
        return bool(inside[0]) if single else inside

    def support(self, u):
        U, single = _rows(u)
        return _out(np.max(U @ self.vertices.T, axis=1), single)

    def _radial(self, p, U):
        rate = U @ self.eq_A.T
        gap = -(self.eq_A @ p + self.eq_b)
        with np.errstate(divide="ignore"):
            s = np.where(rate > 0, gap / np.where(rate > 0, rate, 1.0), np.inf)
        return s.min(axis=1)

    def chords(self, O, D):
        O, D = np.atleast_2d(O), np.atleast_2d(D)
        rate = D @ self.eq_A.T
        gap = -(O @ self.eq_A.T + self.eq_b)
        tiny = 1e-15
        lo = np.full(O.shape[0], -np.inf)
        hi = np.full(O.shape[0], np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = gap / rate
        hi = np.minimum(hi, np.where(rate > tiny, t, np.inf).min(axis=1))
        lo = np.maximum(lo, np.where(rate < -tiny, t, -np.inf).max(axis=1))
        parallel_out = np.any((np.abs(rate) <= tiny) & (gap < 0), axis=1)
        bad = parallel_out | ~(lo < hi)
        lo[bad] = np.nan
        hi[bad] = np.nan
        return lo, hi

    def transformed(self, g: AffineMap) -> "Polytope":
        return Polytope(g.apply(self.vertices), check=False)

    def interior_point(self):
        return self._center.copy()

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def to_dict(self):
        return {"kind": "polytope", "n": self.n, "payload": {"vertices": self.vertices.tolist()}}

    def __repr__(self):
        return f"Polytope(n={self.n}, vertices={self.vertices.shape[0]})"


# ----------------------------------------------------------------------------
# Implicit bodies built from named gauges


@dataclass(frozen=True)
class BaseGauge:
    """A named convex gauge g0 on R^n0 with its body {g0 <= 1}."""

    name: str
    params: dict
    n0: int
    g: Callable[[np.ndarray], np.ndarray]
    radius: float
    h: Callable[[np.ndarray], np.ndarray] | None = None


def _lens(n, d, r):
    if not (0 <= d < r):
        raise GeometryError("lens needs 0 <= d < r")
    c = np.zeros(n)
    c[-1] = d

    def g(x):
        x = np.atleast_2d(x)
        return np.maximum(np.sum((x - c) ** 2, axis=1), np.sum((x + c) ** 2, axis=1)) / r ** 2

    rim = math.sqrt(r * r - d * d)

    def h(U):
        un = np.abs(U[:, -1])
        nu = np.linalg.norm(U, axis=1)
        perp = np.sqrt(np.clip(nu ** 2 - un ** 2, 0, None))
        cap = un >= (d / r) * nu
        return np.where(cap, r * nu - d * un, rim * perp)

    return g, float(r - d if d < r else r), h


def _double_disk(s):
    def g(x):
        x = np.atleast_2d(x)
        return ((np.abs(x[:, 0]) + np.abs(x[:, 1])) ** 2 + x[:, 2] ** 2) / s ** 2

    def h(U):
        m = np.maximum(np.abs(U[:, 0]), np.abs(U[:, 1]))
        return s * np.sqrt(m ** 2 + U[:, 2] ** 2)

    return g, float(s), h


def _spherocylinder(n, d, r):
    def g(x):
        x = np.atleast_2d(x)
        z = np.clip(x[:, -1], -d, d)
        y = x.copy()
        y[:, -1] = x[:, -1] - z
        return np.sum(y * y, axis=1) / r ** 2

    def h(U):
        return d * np.abs(U[:, -1]) + r * np.linalg.norm(U, axis=1)

    return g, float(d + r), h


def _perturbed_ball(n, eps):
    if abs(eps) > 0.1:
        raise GeometryError("perturbed_ball needs |eps| <= 0.1 to stay convex")

    def g(x):
        x = np.atleast_2d(x)
        r2 = np.sum(x * x, axis=1)
        return r2 + eps * x[:, 0] ** 3 / (1.0 + r2)

    return g, 1.2, None


def make_base(name: str, params: dict) -> BaseGauge:
    p = dict(params)
    n = int(p.pop("n", 3))
    if name == "lens":
        d, r = float(p.pop("d", 0.5)), float(p.pop("r", 1.0))
        g, R, h = _lens(n, d, r)
        # the lens lies in the ball of radius r about either center; rim radius <= r
        R = math.sqrt(max(r * r - d * d, (r - d) ** 2))
        prm = {"n": n, "d": d, "r": r}
    elif name == "double_disk":
        if n != 3:
            raise GeometryError("double_disk lives in R^3")
        s = float(p.pop("scale", 1.0))
        g, R, h = _double_disk(s)
        prm = {"n": 3, "scale": s}
    elif name == "spherocylinder":
        d, r = float(p.pop("d", 1.0)), float(p.pop("r", 1.0))
        if d < 0 or r <= 0:
            raise GeometryError("spherocylinder needs d >= 0, r > 0")
        g, R, h = _spherocylinder(n, d, r)
        prm = {"n": n, "d": d, "r": r}
    elif name == "perturbed_ball":
        eps = float(p.pop("eps", 0.05))
        g, R, h = _perturbed_ball(n, eps)
        prm = {"n": n, "eps": eps}
    else:
        raise GeometryError(f"no implicit gauge named {name!r}")
    if p:
        raise GeometryError(f"unknown parameters for {name}: {sorted(p)}")
    return BaseGauge(name, prm, n, g, R, h)


class ImplicitBody(ConvexBody):
    """{y in R^m : g0(E y + e) <= 1} for a named base gauge g0."""

    def __init__(self, base: BaseGauge, E=None, e=None, hint=None):
        self.base = base
        self.E = np.eye(base.n0) if E is None else np.atleast_2d(np.asarray(E, dtype=float))
        self.e = np.zeros(base.n0) if e is None else np.asarray(e, dtype=float).reshape(-1)
        if self.E.shape[0] != base.n0 or self.e.shape[0] != base.n0:
            raise GeometryError("implicit body map has wrong shape")
        self.n = self.E.shape[1]
        sv = np.linalg.svd(self.E, compute_uv=False)
        if sv[-1] <= 1e-12 * sv[0]:
            raise GeometryError("implicit body map is not injective")
        self._square = self.E.shape[0] == self.E.shape[1]
        # bounding ball: |E (y - y*)| <= R0 + |E y* + e|
        ystar = np.linalg.lstsq(self.E, -self.e, rcond=None)[0]
        resid = np.linalg.norm(self.E @ ystar + self.e)
        if resid > base.radius:
            raise GeometryError("implicit body is empty")
        self._ball = (ystar, float((base.radius + resid) / sv[-1]))
        self._hint = None if hint is None else np.asarray(hint, dtype=float)
        self._q = None

    @classmethod
    def named(cls, name: str, **params) -> "ImplicitBody":
        return cls(make_base(name, params))

    def level(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.base.g(x @ self.E.T + self.e)

    def gauge(self, x):
        return self.level(x)

    def interior_point(self):
        if self._q is not None:
            return self._q.copy()
        cand = []
        if self._hint is not None:
            cand.append(self._hint)
        if self._square:
            cand.append(np.linalg.solve(self.E, -self.e))
        cand.append(self._ball[0])
        best = min(cand, key=lambda y: float(self.level(y)[0]))
        if self.level(best)[0] > 0.5:
            f = lambda y: float(self.level(y)[0])
            res = minimize(f, best, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
            if res.fun < self.level(best)[0]:
                best = res.x
        if not self.level(best)[0] < 1 - 1e-6:
            raise GeometryError("implicit body has (numerically) empty interior")
        self._q = np.asarray(best, dtype=float)
        return self._q.copy()

    def bounding_ball(self):
        return self._ball[0].copy(), self._ball[1]

    def bounding_box(self):
        if self._closed_support():
            return ConvexBody.bounding_box(self)
        c, r = self._ball
        return c - r, c + r

    def _closed_support(self) -> bool:
        return self._square and self.base.h is not None

    def support(self, u):
        U, single = _rows(u)
        if self._closed_support():
            Ei = np.linalg.inv(self.E)
            vals = self.base.h(U @ Ei) - U @ (Ei @ self.e)
            return _out(vals, single)
        return _out(self._numeric_support(U), single)

    def _numeric_support(self, U: np.ndarray) -> np.ndarray:
        m = self.n
        q = self.interior_point()
        if m == 1:
            lo, hi = self.chords(q[None, :], np.ones((1, 1)))
            a, b = q[0] + lo[0], q[0] + hi[0]
            return np.maximum(U[:, 0] * a, U[:, 0] * b)
        if m == 2:
            return self._support_2d(U, q)
        return self._support_nd(U, q)

    def _support_2d(self, U, q, grid: int = 1440):
        ang = np.arange(grid) * (2 * np.pi / grid)
        V = np.column_stack([np.cos(ang), np.sin(ang)])
        rho = self._radial(q, V)
        pts = q + rho[:, None] * V
        vals = U @ pts.T
        k = np.argmax(vals, axis=1)
        step = 2 * np.pi / grid

        def neg(theta, rows=np.arange(U.shape[0])):
            W = np.column_stack([np.cos(theta), np.sin(theta)])
            r = self._radial_many(np.broadcast_to(q, W.shape), W)
            return -np.einsum("ij,ij->i", U, q + r[:, None] * W)

        theta = _golden_min(neg, ang[k] - step, ang[k] + step, iters=60)
        return np.maximum(-neg(theta), vals[np.arange(U.shape[0]), k])

    def _support_nd(self, U, q, grid: int = 2000):
        m = self.n
        V = random_unit_vectors(rng(12345), grid, m)
        rho = self._radial(q, V)
        pts = q + rho[:, None] * V
        vals = U @ pts.T
        k = np.argmax(vals, axis=1)
        cur = V[k].copy()
        best = vals[np.arange(U.shape[0]), k]
        step = np.full(U.shape[0], 0.1)
        eye = np.eye(m)
        while np.any(step > 1e-9):
            improved = np.zeros(U.shape[0], dtype=bool)
            for j in range(m):
                for sgn in (1.0, -1.0):
                    W = cur + sgn * step[:, None] * eye[j]
                    W /= np.linalg.norm(W, axis=1, keepdims=True)
                    r = self._radial_many(np.broadcast_to(q, W.shape), W)
                    f = np.einsum("ij,ij->i", U, q + r[:, None] * W)
                    better = f > best
                    cur = np.where(better[:, None], W, cur)
                    best = np.where(better, f, best)
                    improved |= better
            step = np.where(improved, step, step * 0.5)
        return best

    def _radial(self, p, U):
        return self._radial_many(np.broadcast_to(p, U.shape), U)

    def _radial_many(self, P, U):
        c, r = self._ball
        hi = np.linalg.norm(P - c, axis=1) + r * 1.01 + 1e-9
        return _bisect_rays(self.level, P, U, np.zeros(U.shape[0]), hi)

    def transformed(self, g: AffineMap) -> "ImplicitBody":
        gi = g.inverse()
        E = self.E @ gi.linear
        e = self.E @ gi.translation + self.e
        hint = None if self._q is None and self._hint is None else g.apply(self.interior_point())
        return ImplicitBody(self.base, E, e, hint)

    def restricted(self, origin, frame, hint=None) -> "ImplicitBody":
        """The body pulled back along z -> origin + frame z."""
        E = self.E @ frame
        e = self.E @ origin + self.e
        return ImplicitBody(self.base, E, e, hint)

    def to_dict(self):
        return {"kind": "implicit", "n": self.n,
                "payload": {"gallery": self.base.name, "params": self.base.params,
                            "E": self.E.tolist(), "e": self.e.tolist()}}

    def __repr__(self):
        return f"ImplicitBody({self.base.name}, n={self.n})"


def body_from_dict(d: dict) -> ConvexBody:
    kind = d.get("kind")
    pl = d.get("payload", {})
    n = int(d.get("n", 0))
    if kind == "ellipsoid":
        Q = np.asarray(pl["Q"], dtype=float).reshape(n, n)
        return Ellipsoid(Q, pl.get("c"))
    if kind == "polytope":
        return Polytope(pl["vertices"])
    if kind == "implicit":
        base = make_base(pl["gallery"], dict(pl.get("params", {})))
        return ImplicitBody(base, pl.get("E"), pl.get("e"))
    raise GeometryError(f"unknown body kind {kind!r}")


def body_from_json(text: str) -> ConvexBody:
    return body_from_dict(json.loads(text))


# ----------------------------------------------------------------------------
# Monte Carlo centroid


def centroid_mc(K: ConvexBody, samples: int, seed: int, chunk: int = 1 << 15):
    """Hit-or-miss centroid in the bounding box: (estimate, per-coordinate stderr).

    Chunk i always uses stream i of ``seed``, so the answer does not depend on
    how many threads run the chunks.
    """
    if samples < 1000:
        raise GeometryError("centroid_mc needs at least 10^3 samples")
    lo, hi = K.bounding_box()
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    pad = 1e-9 * np.maximum(1.0, hi - lo)
    lo, hi = lo - pad, hi + pad
    sizes = [chunk] * (samples // chunk)
    if samples % chunk:
        sizes.append(samples % chunk)

    def work(i):
        gen = substream(seed, i)
        X = lo + (hi - lo) * gen.random((sizes[i], K.n))
        H = X[K.contains(X)]
        return H.shape[0], H.sum(axis=0), (H * H).sum(axis=0)

    parts = _parallel.pmap(work, range(len(sizes)))
    hits = sum(p[0] for p in parts)
    if hits == 0:
        raise GeometryError("no Monte Carlo sample hit the body")
    s1 = np.sum([p[1] for p in parts], axis=0)
    s2 = np.sum([p[2] for p in parts], axis=0)
    mean = s1 / hits
    var = np.maximum(s2 / hits - mean ** 2, 0.0) * hits / max(hits - 1, 1)
    return mean, np.sqrt(var / hits)


# ----------------------------------------------------------------------------
# Gallery

GALLERY = {
    "ball": "Euclidean ball (params: n, radius)",
    "ellipsoid": "axis-aligned ellipsoid (params: semi_axes or Q, center)",
    "cube": "cube with vertices {±half}^n (params: n, half)",
    "lens": "intersection of two balls of radius r centred at ±d e_n (params: n, d, r)",
    "double_disk": "implicit body (|x|+|y|)^2 + z^2 <= scale^2 in R^3 (params: scale)",
    "spherocylinder": "convex hull of two balls of radius r centred at ±d e_n (params: n, d, r)",
    "perturbed_ball": "|x|^2 + eps x1^3/(1+|x|^2) <= 1, |eps| <= 0.1 (params: n, eps)",
}


def gallery(name: str, **params) -> ConvexBody:
    """Named example body."""
    p = dict(params)
    if name == "ball":
        n = int(p.pop("n", 3))
        r = float(p.pop("radius", 1.0))
        c = p.pop("center", None)
        body = Ellipsoid.ball(n, r, c)
    elif name == "ellipsoid":
        c = p.pop("center", None)
        if "Q" in p:
            body = Ellipsoid(p.pop("Q"), c)
        else:
            ax = np.asarray(p.pop("semi_axes", (1.0, 2.0, 3.0)), dtype=float)
            if np.any(ax <= 0):
                raise GeometryError("semi-axes must be positive")
            body = Ellipsoid.from_factor(np.diag(ax), c)
    elif name == "cube":
        n = int(p.pop("n", 3))
        half = float(p.pop("half", 1.0))
        if half <= 0:
            raise GeometryError("cube half-width must be positive")
        V = np.array(np.meshgrid(*[[-half, half]] * n, indexing="ij")).reshape(n, -1).T
        body = Polytope(V)
    elif name in ("lens", "double_disk", "spherocylinder", "perturbed_ball"):
        return ImplicitBody(make_base(name, p))
    else:
        raise GeometryError(f"unknown gallery body {name!r}; choose from {sorted(GALLERY)}")
    if p:
        raise GeometryError(f"unknown parameters for {name}: {sorted(p)}")
    return body
