"""Hyperplane sections, chord midpoints and the central-projection family.

The family K_tau slices K by hyperplanes parallel to T at level <n, p> + tau and
maps every slice onto the screen {<n, x> = <n, p> + s} by the central
projection from p, which restricted to one slice is the homothety
x -> p + (s / tau)(x - p).
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .bodies import ConvexBody, Ellipsoid, ImplicitBody, Polytope
from .ellipsoid_exact import section_quadratic_form
from .geom_core import (
    AffineHyperplane,
    AffineMap,
    Chart,
    DegenerateSectionError,
    EmptySectionError,
    GeometryError,
    chart_of,
    sphere_grid,
)
from . import _parallel

log = logging.getLogger(__name__)

EMPTY_MARGIN = 1e-10
MIN_SLICE_WIDTH = 1e-6


@dataclass(frozen=True, eq=False)
class SectionBody:
    """K ∩ H expressed as a body in the chart coordinates of H."""

    chart: Chart
    body: ConvexBody

    @property
    def dim(self) -> int:
        return self.body.n

    @property
    def hyperplane(self) -> AffineHyperplane | None:
        return self.chart.hyperplane

    def embed(self, y) -> np.ndarray:
        return self.chart.embed(y)

    def project(self, x) -> np.ndarray:
        return self.chart.project(x)


def _extent(K: ConvexBody, xi: np.ndarray) -> tuple[float, float]:
    return -float(K.support(-xi)), float(K.support(xi))


def section(K: ConvexBody, H: AffineHyperplane, interior_hint=None) -> SectionBody | None:
    """K ∩ H in the chart of H; None when empty, DegenerateSectionError when tangent."""
    if H.n != K.n:
        raise GeometryError("hyperplane and body live in different dimensions")
    if K.n < 2:
        raise GeometryError("sections need n >= 2")
    ch = chart_of(H)
    hint_ok = False
    if interior_hint is not None:
        q = np.asarray(interior_hint, dtype=float)
        hint_ok = abs(H.signed_distance(q)) <= 1e-9 and K.is_interior(q, 1e-7)
    if not hint_ok:
        if isinstance(K, ImplicitBody) and not K._closed_support():
            pass  # emptiness is decided from the level minimum below
        else:
            lo, hi = _extent(K, H.normal)
            t = H.offset
            if hi < t - EMPTY_MARGIN or lo > t + EMPTY_MARGIN:
                return None
            if abs(hi - t) <= EMPTY_MARGIN or abs(lo - t) <= EMPTY_MARGIN:
                raise DegenerateSectionError("hyperplane supports the body")
    if isinstance(K, Ellipsoid):
        try:
            B, y0 = section_quadratic_form(K, H)
        except EmptySectionError:
            return None
        return SectionBody(ch, Ellipsoid(B, y0))
    if isinstance(K, Polytope):
        return _polytope_section(K, H, ch)
    if isinstance(K, ImplicitBody):
        hint = ch.project(interior_hint) if hint_ok else None
        try:
            S = K.restricted(ch.origin, ch.frame, hint)
        except GeometryError:
            return None
        try:
            q = S.interior_point()
        except GeometryError:
            if float(S.level(S._ball[0])[0]) > 1 + EMPTY_MARGIN:
                return None
            raise DegenerateSectionError("hyperplane supports the body") from None
        if float(S.level(q)[0]) > 1 - EMPTY_MARGIN:
            raise DegenerateSectionError("hyperplane supports the body")
        return SectionBody(ch, S)
    raise GeometryError(f"unsupported body type {type(K).__name__}")


def _polytope_section(K: Polytope, H: AffineHyperplane, ch: Chart) -> SectionBody | None:
    V = K.vertices
    s = V @ H.normal - H.offset
    scale = max(1.0, float(np.max(np.abs(V))))
    on = np.abs(s) <= 1e-12 * scale
    pts = [V[on]]
    neg = np.nonzero(s < -1e-12 * scale)[0]
    pos = np.nonzero(s > 1e-12 * scale)[0]
    if neg.size:
        for i in neg:
            lam = s[i] / (s[i] - s[pos])
            pts.append(V[i] + lam[:, None] * (V[pos] - V[i]))
    X = np.vstack(pts)
    if X.shape[0] == 0:
        return None
    Y = ch.project(X)
    if neg.size == 0 or pos.size == 0:
        raise DegenerateSectionError("hyperplane supports the polytope")
    try:
        body = Polytope.hull_of(np.unique(np.round(Y, 13), axis=0))
    except GeometryError:
        raise DegenerateSectionError("section of the polytope is lower-dimensional") from None
    return SectionBody(ch, body)


def chord_midpoint(K2d: ConvexBody, line: AffineHyperplane):
    """Midpoint of the chord K ∩ line for a planar body; None when the line misses."""
    if K2d.n != 2 or line.n != 2:
        raise GeometryError("chord_midpoint needs a planar body and a line in the plane")
    ch = chart_of(line)
    d = ch.frame[:, 0]
    res = K2d.chord(ch.origin, d)
    if res is None or res[1] - res[0] <= 0:
        return None
    return ch.origin + 0.5 * (res[0] + res[1]) * d


def chord_midpoints(K: ConvexBody, origins: np.ndarray, direction) -> tuple[np.ndarray, np.ndarray]:
    """Midpoints and lengths of chords o + s d; NaN rows for misses."""
    d = np.asarray(direction, dtype=float)
    D = np.broadcast_to(d, origins.shape)
    lo, hi = K.chords(origins, np.ascontiguousarray(D))
    mid = origins + (0.5 * (lo + hi))[:, None] * d
    return mid, (hi - lo) * np.linalg.norm(d)


# ----------------------------------------------------------------------------
# central projection family


@dataclass
class ProjectionFamily:
    p: np.ndarray
    T_star: AffineHyperplane
    screen_offset: float
    taus: list
    slices: list
    skipped: list = field(default_factory=list)

    @property
    def chart(self) -> Chart:
        return chart_of(self.T_star)

    @property
    def ratios(self) -> list[float]:
        return [self.screen_offset / t for t in self.taus]

    @property
    def p_screen(self) -> np.ndarray:
        """Foot of p on the screen, in screen chart coordinates."""
        return self.chart.project(self.p)

    def phi(self, tau: float) -> AffineMap:
        """The central projection restricted to the slice at level tau."""
        lam = self.screen_offset / tau
        return AffineMap(lam * np.eye(self.p.size), (1 - lam) * self.p)

    def slice_hyperplane(self, tau: float) -> AffineHyperplane:
        return AffineHyperplane(self.T_star.normal, float(self.T_star.normal @ self.p) + tau)

    def __len__(self):
        return len(self.slices)


def default_taus(K: ConvexBody, p, normal, count: int = 21, fraction: float = 0.8) -> list[float]:
    """``count`` levels over the central ``fraction`` of K's extent along normal, tau=0 dropped."""
    xi = np.asarray(normal, dtype=float)
    xi = xi / np.linalg.norm(xi)
    lo, hi = _extent(K, xi)
    lvl = float(xi @ np.asarray(p, dtype=float))
    a, b = lo - lvl, hi - lvl
    pad = 0.5 * (1 - fraction) * (b - a)
    taus = np.linspace(a + pad, b - pad, count)
    tiny = 1e-9 * max(1.0, b - a)
    return [float(t) for t in taus if abs(t) > tiny]


def _slice_width(S: SectionBody) -> float:
    body = S.body
    q = body.interior_point()
    m = body.n
    U = sphere_grid(m, 16 if m <= 2 else 64, seed=0, hemisphere=True)
    lo, hi = body.chords(np.broadcast_to(q, U.shape).copy(), U)
    w = hi - lo
    return float(np.nanmin(w)) if np.any(np.isfinite(w)) else 0.0


def central_projection_family(K: ConvexBody, p, T, taus=None, screen_offset: float = 1.0,
                              count: int = 21) -> ProjectionFamily:
    """The slices of K parallel to T, centrally projected from p onto the screen."""
    p = np.asarray(p, dtype=float)
    normal = T.normal if isinstance(T, AffineHyperplane) else np.asarray(T, dtype=float)
    if isinstance(T, AffineHyperplane) and not T.is_linear:
        raise GeometryError("T must be a linear hyperplane")
    if screen_offset == 0:
        raise GeometryError("screen_offset must be nonzero")
    lvl = float(normal @ p) / float(np.linalg.norm(normal))
    T_star = AffineHyperplane(normal, lvl + screen_offset)
    # canonicalization may flip the normal; keep tau measured along the stored normal
    sign = 1.0 if np.allclose(T_star.normal, normal / np.linalg.norm(normal)) else -1.0
    explicit = taus is not None
    if taus is None:
        taus = default_taus(K, p, T_star.normal, count)
    else:
        taus = [float(t) for t in taus]
        if any(t == 0 for t in taus):
            raise GeometryError("tau = 0 is the level of p; no projection is defined")
    s_off = sign * screen_offset
    ch = chart_of(T_star)
    F = ch.frame
    pF = F.T @ p
    lvl = float(T_star.normal @ p)

    def build(tau):
        H = AffineHyperplane(T_star.normal, lvl + tau)
        S = section(K, H)
        if S is None:
            if explicit:
                raise EmptySectionError(f"slice at tau={tau} is empty")
            return None
        lam = s_off / tau
        body = S.body.transformed(AffineMap(lam * np.eye(F.shape[1]), (1 - lam) * pF))
        return SectionBody(ch, body)

    def safe_build(tau):
        try:
            S = build(tau)
        except DegenerateSectionError:
            return None
        if S is None:
            return None
        # width measured before the homothety so the threshold is in body units
        if _slice_width(S) * abs(tau / s_off) < MIN_SLICE_WIDTH:
            return None
        return S

    built = _parallel.pmap(safe_build, taus)
    kept, slices, skipped = [], [], []
    for tau, S in zip(taus, built):
        if S is None:
            log.warning("skipping degenerate slice at tau=%.6g", tau)
            skipped.append(tau)
        else:
            kept.append(tau)
            slices.append(S)
    return ProjectionFamily(p, T_star, s_off, kept, slices, skipped)


# ----------------------------------------------------------------------------
# export


def boundary_polyline(body: ConvexBody, count: int = 128) -> np.ndarray:
    """Boundary points of a planar (or higher-dimensional) body seen from its interior point."""
    q = body.interior_point()
    if body.n == 1:
        lo, hi = body.bounding_box()
        return np.array([lo, hi])
    U = sphere_grid(body.n, count, seed=0)
    return body.boundary_points(q, U)


def family_to_csv(fam: ProjectionFamily, path, count: int = 128) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        m = fam.slices[0].dim if fam.slices else 0
        w.writerow(["tau", "vertex"] + [f"y{i + 1}" for i in range(m)])
        for tau, S in zip(fam.taus, fam.slices):
            for j, y in enumerate(boundary_polyline(S.body, count)):
                w.writerow([repr(float(tau)), j] + [repr(float(v)) for v in y])


def polylines_to_svg(polylines, path, size: int = 480, labels=None) -> None:
    """Plain SVG of closed planar polylines, scaled to a common box."""
    pts = np.vstack([np.asarray(pl)[:, :2] for pl in polylines]) if polylines else np.zeros((1, 2))
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 0.05 * size

    def tr(P):
        Q = (np.asarray(P)[:, :2] - lo) / span * (size - 2 * pad) + pad
        Q[:, 1] = size - Q[:, 1]
        return Q

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">', '<rect width="100%" height="100%" fill="white"/>']
    for i, pl in enumerate(polylines):
        Q = tr(pl)
        d = " ".join(f"{x:.3f},{y:.3f}" for x, y in Q)
        hue = int(300 * i / max(1, len(polylines) - 1))
        title = f"<title>{labels[i]}</title>" if labels else ""
        out.append(f'<polygon points="{d}" fill="none" stroke="hsl({hue},70%,40%)" '
                   f'stroke-width="1">{title}</polygon>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def family_to_svg(fam: ProjectionFamily, path, count: int = 256) -> None:
    if fam.slices and fam.slices[0].dim != 2:
        raise GeometryError("SVG export needs planar slices")
    lines = [boundary_polyline(S.body, count) for S in fam.slices]
    polylines_to_svg(lines, path, labels=[f"tau={t:.4g}" for t in fam.taus])
