"""Reflection and rotation group actions, invariance residuals and detectors.

pi_k negates the complement of a k-dimensional fixed subspace, rho_k rotates
that complement by an arbitrary orthogonal block. Detectors report a residual
in length units together with the tolerance that decided the verdict.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import ortho_group

from .bodies import ConvexBody, centroid_mc
from .geom_core import (
    AffineMap,
    GeometryError,
    _complement_frame,
    canonical_sign,
    oblique_reflection,
    orth_complement,
    random_unit_vectors,
    rng,
    sphere_grid,
    substream,
)
from .sections import SectionBody
from . import _parallel

log = logging.getLogger(__name__)

REFLECTION_KINDS = ("reflection", "pi")
ROTATION_KINDS = ("rotation", "rho")


def quaternion_matrix(a) -> np.ndarray:
    """Left multiplication by the quaternion a1 + a2 i + a3 j + a4 k on R^4."""
    a1, a2, a3, a4 = (float(x) for x in a)
    return np.array([
        [a1, -a2, -a3, -a4],
        [a2, a1, -a4, a3],
        [a3, a4, a1, -a2],
        [a4, -a3, a2, a1],
    ])


def _random_orthogonal(m: int, gen: np.random.Generator) -> np.ndarray:
    if m == 1:
        return np.array([[1.0 if gen.random() < 0.5 else -1.0]])
    return ortho_group.rvs(m, random_state=gen)


def rep_matrix(kind: str, n: int, k: int = 0, params=None, seed=None) -> np.ndarray:
    """Block-form representative of pi_k, rho_k or the quaternion action.

    reflection: diag(-I_{n-k}, I_k). rotation: blockdiag(O, I_k) with O from
    ``params`` (an orthogonal matrix, or an angle when n-k = 2) or seeded random.
    quaternion: n = 4 and params a unit 4-vector.
    """
    if kind == "quaternion":
        if n != 4:
            raise GeometryError("the quaternion action lives in R^4")
        a = np.asarray(params, dtype=float)
        if a.shape != (4,) or abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise GeometryError("quaternion parameter must be a unit vector in R^4")
        return quaternion_matrix(a)
    if not (0 <= k < n):
        raise GeometryError(f"k must satisfy 0 <= k < n (got k={k}, n={n})")
    m = n - k
    if kind in REFLECTION_KINDS:
        return np.diag([-1.0] * m + [1.0] * k)
    if kind in ROTATION_KINDS:
        if params is None:
            if seed is None:
                raise GeometryError("random rotation needs a seed")
            O = _random_orthogonal(m, rng(seed))
        elif np.ndim(params) == 0:
            if m != 2:
                raise GeometryError("an angle parameter needs n - k = 2")
            c, s = np.cos(float(params)), np.sin(float(params))
            O = np.array([[c, -s], [s, c]])
        else:
            O = np.asarray(params, dtype=float)
            if O.shape != (m, m) or not np.allclose(O.T @ O, np.eye(m), atol=1e-12):
                raise GeometryError("rotation block must be an orthogonal (n-k)x(n-k) matrix")
        R = np.eye(n)
        R[:m, :m] = O
        return R
    raise GeometryError(f"unknown representation kind {kind!r}")


@dataclass(frozen=True, eq=False)
class GroupAction:
    """pi_k or rho_k acting about the affine subspace point + span(basis)."""

    kind: str
    k: int
    point: np.ndarray
    basis: np.ndarray
    conjugation: AffineMap | None = None

    def __post_init__(self):
        if self.kind not in ("reflection", "rotation"):
            raise GeometryError("kind must be 'reflection' or 'rotation'")
        B = np.asarray(self.basis, dtype=float).reshape(np.asarray(self.point).size, -1)
        if B.shape[1] != self.k:
            raise GeometryError("basis must have k columns")
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))

    @property
    def n(self) -> int:
        return self.point.size

    def complement(self) -> np.ndarray:
        return orth_complement(self.basis)

    def _wrap(self, R: np.ndarray) -> AffineMap:
        g = AffineMap.fixing(R, self.point)
        if self.conjugation is not None:
            g = self.conjugation.conjugate(g)
        return g

    def generator(self) -> AffineMap:
        if self.kind != "reflection":
            raise GeometryError("only reflections have a single generator")
        B = self.basis
        R = 2 * B @ B.T - np.eye(self.n)
        return self._wrap(R)

    def sample(self, count: int, seed: int) -> list[AffineMap]:
        if self.kind == "reflection":
            return [self.generator()] * count
        C = self.complement()
        B = self.basis
        out = []
        for i in range(count):
            O = _random_orthogonal(C.shape[1], substream(seed, i))
            R = B @ B.T + C @ O @ C.T
            out.append(self._wrap(R))
        return out

    def fixed_subspace(self) -> dict:
        return {"point": self.point.tolist(), "basis": self.basis.tolist()}


def rho_k_sample(n: int, k: int, seed: int, count: int = 1, point=None, basis=None) -> list[AffineMap]:
    """Random rho_k elements; default fixed subspace is the last k coordinates."""
    if not (0 <= k < n):
        raise GeometryError("need 0 <= k < n")
    point = np.zeros(n) if point is None else point
    if basis is None:
        basis = np.eye(n)[:, n - k:]
    return GroupAction("rotation", k, point, basis).sample(count, seed)


def fixed_dimension(mats, tol: float = 1e-9) -> int:
    """Dimension of the common fixed subspace of the given matrices."""
    n = mats[0].shape[0]
    M = np.vstack([m - np.eye(n) for m in mats])
    s = np.linalg.svd(M, compute_uv=False)
    return int(n - np.sum(s > tol))


# ----------------------------------------------------------------------------
# reports


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


@dataclass
class SymmetryReport:
    claim: str
    parameters: dict
    residual: float
    tol: float
    multiplicity_flag: bool = False
    candidates: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "pass" if self.residual <= self.tol else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return _jsonable({"claim": self.claim, "parameters": self.parameters,
                          "residual": float(self.residual), "tol": float(self.tol),
                          "verdict": self.verdict, "multiplicity_flag": bool(self.multiplicity_flag),
                          "candidates": self.candidates})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# ----------------------------------------------------------------------------
# residuals


def invariance_residual(K: ConvexBody, g: AffineMap, dirs: int = 256, seed: int = 0) -> float:
    """max_u |h_K(u) - h_{gK}(u)| over seeded unit directions."""
    if not g.is_invertible():
        raise GeometryError("g must be invertible")
    U = random_unit_vectors(rng(seed), dirs, K.n)
    h = np.asarray(K.support(U))
    hg = np.asarray(K.support(U @ g.linear)) + U @ g.translation
    return float(np.max(np.abs(h - hg)))


def radial_invariance_residual(K: ConvexBody, p, M: np.ndarray, U: np.ndarray) -> float:
    """max_u |rho(u) |M u| - rho(M u / |M u|)| for the linear map M fixing p.

    Zero exactly when x -> p + M(x - p) maps the boundary into itself along
    the sampled rays.
    """
    return float(np.max(_radial_residuals(K, p, [M], U)))


def _radial_residuals(K: ConvexBody, p, Ms, U: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    rho = np.asarray(K.radial(p, U)).reshape(-1)
    imgs = np.vstack([U @ M.T for M in Ms])
    nrm = np.linalg.norm(imgs, axis=1)
    rho_img = np.asarray(K.radial(p, imgs / nrm[:, None])).reshape(-1)
    diff = np.abs(np.tile(rho, len(Ms)) * nrm - rho_img).reshape(len(Ms), -1)
    return diff.max(axis=1)


# ----------------------------------------------------------------------------
# moment normalization


def moment_stats(K: ConvexBody, samples: int, seed: int, chunk: int = 1 << 15):
    """Monte Carlo mean, covariance and stderr of the mean of the uniform measure on K."""
    lo, hi = K.bounding_box()
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    sizes = [chunk] * (samples // chunk) + ([samples % chunk] if samples % chunk else [])

    def work(i):
        X = lo + (hi - lo) * substream(seed, i).random((sizes[i], K.n))
        H = X[K.contains(X)]
        return H.shape[0], H.sum(axis=0), H.T @ H

    parts = _parallel.pmap(work, range(len(sizes)))
    N = sum(p[0] for p in parts)
    if N < K.n + 2:
        raise GeometryError("too few Monte Carlo hits for moments")
    s1 = np.sum([p[1] for p in parts], axis=0)
    s2 = np.sum([p[2] for p in parts], axis=0)
    mean = s1 / N
    cov = (s2 - N * np.outer(mean, mean)) / (N - 1)
    return mean, 0.5 * (cov + cov.T), np.sqrt(np.diag(cov) / N)


def whitening_map(mean, cov) -> AffineMap:
    """Affine map sending the moment ellipsoid to that of the unit ball (cov I/(n+2))."""
    n = mean.size
    w, V = np.linalg.eigh(cov)
    if w[0] <= 0 or w[-1] / w[0] > 1e12:
        raise GeometryError("moment matrix is degenerate (condition number > 1e12)")
    L = V @ np.diag(1.0 / np.sqrt(w * (n + 2))) @ V.T
    return AffineMap(L, -L @ mean)


def moment_normalize(K: ConvexBody, samples: int = 200_000, seed: int = 0):
    """(N, N·K) with the Monte Carlo centroid at 0 and isotropic second moments."""
    mean, cov, _ = moment_stats(K, samples, seed)
    N = whitening_map(mean, cov)
    return N, K.transformed(N)


# ----------------------------------------------------------------------------
# detectors


def detect_central(K: ConvexBody, tol: float = 1e-6, dirs: int = 256, seed: int = 0,
                   samples: int = 20_000) -> SymmetryReport:
    """Central symmetry about a centre estimated from the odd part of h_K.

    The Monte Carlo centroid is reported; the centre used for the residual is
    the least-squares solution of h(u) - h(-u) = 2<c, u>, exact for centrally
    symmetric bodies.
    """
    mc, se = centroid_mc(K, samples, seed)
    U = random_unit_vectors(substream(seed, 1 << 20), dirs, K.n)
    hp = np.asarray(K.support(U))
    hm = np.asarray(K.support(-U))
    c = np.linalg.lstsq(2 * U, hp - hm, rcond=None)[0]
    res = float(np.max(np.abs((hp - U @ c) - (hm + U @ c))))
    return SymmetryReport("central", {"center": c, "mc_centroid": mc, "mc_stderr": se}, res, tol)


def _ray_grid(m: int, dirs: int) -> np.ndarray:
    if m == 1:
        return np.array([[1.0], [-1.0]])
    if m == 2:
        ang = (np.arange(dirs) + 0.2360679) * (2 * np.pi / dirs)
        return np.column_stack([np.cos(ang), np.sin(ang)])
    return sphere_grid(m, dirs, seed=7)


def _axis_basis(W: np.ndarray) -> np.ndarray:
    """Unit normal nu of span(W) inside the section's ambient space."""
    C = orth_complement(W)
    if C.shape[1] != 1:
        raise GeometryError("W must span a hyperplane of the section")
    nu = C[:, 0]
    return nu * canonical_sign(nu)


def detect_aligned_reflection(S, p, W, mode: str = "orthogonal", tol: float = 1e-6,
                              dirs: int = 90, grid_deg: float = 1.0, max_candidates: int = 5
                              ) -> SymmetryReport:
    """Search for an axis a so that fixing p + <a> and negating W maps S to itself.

    orthogonal mode takes a normal to W; affine mode scans admissible a on a
    1-degree grid and refines local minima by bounded Brent search (planar
    sections) or Nelder-Mead (higher-dimensional sections).
    """
    body = S.body if isinstance(S, SectionBody) else S
    m = body.n
    p = np.asarray(p, dtype=float)
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.shape[0] != m:
        W = W.T
    if W.shape != (m, m - 1):
        raise GeometryError("W must be an m x (m-1) basis inside the section")
    W = np.linalg.qr(W)[0]
    nu = _axis_basis(W)
    U = _ray_grid(m, dirs)

    def axis_of(par):
        par = np.atleast_1d(par)
        if m == 2:
            return np.cos(par[0]) * nu + np.sin(par[0]) * W[:, 0]
        a = nu + W @ par
        return a / np.linalg.norm(a)

    def res_many(pars):
        Ms = [oblique_reflection(axis_of(q), W) for q in pars]
        return _radial_residuals(body, p, Ms, U)

    params = {"mode": mode, "p": p, "W": W}
    if mode == "orthogonal" or m == 1:
        r = float(res_many([np.zeros(1 if m == 2 else max(m - 1, 1))])[0]) if m > 1 else \
            radial_invariance_residual(body, p, -np.eye(1), U)
        params["axis"] = nu
        return SymmetryReport("reflection axis", params, r, tol, False, [{"axis": nu, "residual": r}])
    if mode != "affine":
        raise GeometryError("mode must be 'orthogonal' or 'affine'")

    step = np.deg2rad(grid_deg)
    if m == 2:
        psi = np.arange(-90 + grid_deg, 90, grid_deg) * (np.pi / 180)
        coarse = res_many([[x] for x in psi])
        # local minima of the coarse profile on the open interval
        loc = [i for i in range(psi.size)
               if (i == 0 or coarse[i] <= coarse[i - 1]) and (i == psi.size - 1 or coarse[i] <= coarse[i + 1])]
        loc = sorted(loc, key=lambda i: (coarse[i], psi[i]))[:max_candidates]
        found = []
        for i in loc:
            out = minimize_scalar(lambda x: float(res_many([[x]])[0]), method="bounded",
                                  bounds=(psi[i] - step, psi[i] + step), options={"xatol": 1e-10})
            x = float(out.x)
            r = float(res_many([[x]])[0])
            found.append((r, float(x)))
        found.sort()
        pars_found = [[x] for _, x in found]
        frac_pass = float(np.mean(coarse <= tol))
    else:
        G = sphere_grid(m, 400 if m == 3 else 800, seed=3, hemisphere=True)
        # rotate the grid so that its pole is nu: coordinates (W-part, nu-part)
        G = G[G[:, -1] > np.cos(np.deg2rad(89.0))]
        pars = [g[:-1] / g[-1] for g in G]
        coarse = res_many(pars)
        order = np.argsort(coarse, kind="stable")[:max_candidates]
        found = []
        for i in order:
            f = lambda c: float(res_many([c])[0])
            out = minimize(f, pars[i], method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
            found.append((float(out.fun), out.x.tolist()))
        found.sort(key=lambda t: t[0])
        pars_found = [x for _, x in found]
        frac_pass = float(np.mean(coarse <= tol))
    cands = []
    for (r, _), par in zip(found, pars_found):
        a = axis_of(par)
        a = a * canonical_sign(a)
        if r <= tol and not any(min(np.linalg.norm(a - c["axis"]), np.linalg.norm(a + c["axis"])) < 1e-6
                                for c in cands):
            cands.append({"axis": a, "residual": r})
    best_r = found[0][0]
    best_a = axis_of(pars_found[0])
    best_a = best_a * canonical_sign(best_a)
    params["axis"] = best_a
    params["grid_pass_fraction"] = frac_pass
    multi = len(cands) > 1 or frac_pass > 0.05
    return SymmetryReport("reflection axis", params, best_r, tol, multi, cands)


def _rings(n: int, n_lat: int, n_ring: int):
    lat = (np.arange(n_lat) + 0.5) * (np.pi / n_lat)
    if n == 2:
        ring = np.array([[1.0], [-1.0]])
    elif n == 3:
        ang = np.arange(n_ring) * (2 * np.pi / n_ring)
        ring = np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        ring = sphere_grid(n - 1, n_ring, seed=11)
    return lat, ring


def _revolution_rays(d: np.ndarray, lat, ring) -> np.ndarray:
    C = _complement_frame(d)
    circ = ring @ C.T
    return (np.cos(lat)[:, None, None] * d[None, None, :]
            + np.sin(lat)[:, None, None] * circ[None, :, :]).reshape(-1, d.size)


def revolution_residual(K: ConvexBody, p, d, n_lat: int = 9, n_ring: int = 24) -> float:
    """max over latitudes of the spread of the radial function on the ring."""
    return float(_revolution_residuals(K, p, np.atleast_2d(d), n_lat, n_ring)[0])


def _revolution_residuals(K, p, D, n_lat=9, n_ring=24):
    lat, ring = _rings(K.n, n_lat, n_ring)
    D = D / np.linalg.norm(D, axis=1, keepdims=True)
    rays = np.vstack([_revolution_rays(d, lat, ring) for d in D])
    rho = np.asarray(K.radial(p, rays)).reshape(D.shape[0], n_lat, -1)
    return (rho.max(axis=2) - rho.min(axis=2)).max(axis=1)


def detect_revolution_axis(K: ConvexBody, p, tol: float = 1e-8, grid: int = 1000, seed: int = 0,
                           n_lat: int = 9, n_ring: int = 24) -> SymmetryReport:
    """Axis through p minimizing the revolution residual; coarse grid then Nelder-Mead."""
    p = np.asarray(p, dtype=float)
    n = K.n
    G = sphere_grid(n, max(grid, 1000), seed=seed, hemisphere=True)
    chunks = np.array_split(np.arange(G.shape[0]), max(1, G.shape[0] // 100))
    parts = _parallel.pmap(lambda idx: _revolution_residuals(K, p, G[idx], n_lat, n_ring), chunks)
    coarse = np.concatenate(parts)
    frac = float(np.mean(coarse <= tol))
    # order-independent choice: smallest residual, ties broken lexicographically
    order = np.lexsort(tuple(G[:, ::-1].T) + (coarse,))
    d0 = G[order[0]]
    C0 = _complement_frame(d0)

    def axis(c):
        d = d0 + C0 @ c
        return d / np.linalg.norm(d)

    f = lambda c: float(_revolution_residuals(K, p, axis(c)[None, :], n_lat, n_ring)[0])
    best_c, best_f = np.zeros(n - 1), float(coarse[order[0]])
    if n > 2:
        for scale in (0.05, 1e-3, 1e-5):
            out = minimize(f, best_c, method="Nelder-Mead",
                           options={"xatol": 1e-11, "fatol": 1e-15, "maxiter": 3000,
                                    "initial_simplex": np.vstack([best_c, best_c + scale * np.eye(n - 1)])})
            if out.fun <= best_f:
                best_c, best_f = out.x, float(out.fun)
    d = axis(best_c)
    d = d * canonical_sign(d)
    params = {"p": p, "axis": d, "grid_pass_fraction": frac, "grid_size": int(G.shape[0])}
    return SymmetryReport("revolution axis", params, best_f, tol, frac > 0.05)
