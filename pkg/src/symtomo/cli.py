"""Command-line front end: ``symtomo <command> ...``.

Exit codes: 0 verdict pass, 2 fail, 3 inconclusive, 1 usage or runtime error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bodies import GALLERY, body_from_json, gallery
from .geom_core import AffineHyperplane, AffineMap, GeometryError, chart_of, orth_complement, orthonormalize, subspace_meet
from .sections import boundary_polyline, central_projection_family, family_to_csv, family_to_svg, polylines_to_svg, section
from .symmetry import _jsonable, detect_aligned_reflection, detect_central, detect_revolution_axis
from . import verify as V

EXIT = {"pass": 0, "fail": 2, "inconclusive": 3}
log = logging.getLogger("symtomo")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


# ----------------------------------------------------------------------------
# argument helpers


def vec(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated vector: {text!r}") from None


def vecs(text: str) -> np.ndarray:
    """Semicolon separated vectors as columns."""
    return np.column_stack([vec(part) for part in text.split(";") if part.strip()])


def hyperplane(text: str) -> AffineHyperplane:
    """``nx,ny,..:offset``"""
    normal, _, off = text.partition(":")
    return AffineHyperplane(vec(normal), float(off or 0.0))


def load_body(args, which: str = ""):
    path = getattr(args, f"body_json{which}", None)
    if path:
        return body_from_json(Path(path).read_text())
    name = getattr(args, f"body{which}", None)
    if name is None:
        raise UsageError("a body is required (--body or --body-json)")
    if name not in GALLERY:
        raise UsageError(f"unknown body {name!r}; see `symtomo gallery list`")
    params = json.loads(getattr(args, f"params{which}", None) or "{}")
    return gallery(name, **params)


def _check_dim(K, *vectors):
    for v in vectors:
        if v is not None and np.asarray(v).shape[0] != K.n:
            raise UsageError(f"vector of length {np.asarray(v).shape[0]} for a body in R^{K.n}")


def _default_T(K, args):
    return args.T if args.T is not None else np.eye(K.n)[-1]


# ----------------------------------------------------------------------------
# commands; each returns (verdict, report dict, extras)


def cmd_section(args):
    K = load_body(args)
    H = args.H
    _check_dim(K, H.normal)
    S = section(K, H)
    if S is None:
        return "inconclusive", {"command": "section", "empty": True, "hyperplane": H.to_dict()}
    rep = {"command": "section", "empty": False, "hyperplane": H.to_dict(),
           "chart": {"origin": S.chart.origin, "frame": S.chart.frame}, "section": S.body.to_dict()}
    if S.dim == 2:
        P = boundary_polyline(S.body, 256)
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["vertex", "y1", "y2"])
                for i, y in enumerate(P):
                    w.writerow([i, repr(float(y[0])), repr(float(y[1]))])
        if args.svg:
            polylines_to_svg([P], args.svg)
    return "pass", rep


def cmd_detect(args):
    K = load_body(args)
    if args.what == "central":
        r = detect_central(K, tol=args.tol or 1e-6, seed=args.seed)
    elif args.what == "revolution":
        _check_dim(K, args.p)
        r = detect_revolution_axis(K, args.p, tol=args.tol or 1e-8, seed=args.seed)
    else:
        if args.H is None:
            raise UsageError("detect reflection needs --H")
        p = args.p
        _check_dim(K, p, args.H.normal)
        if abs(args.H.signed_distance(p)) > 1e-9:
            raise UsageError("--p must lie on --H")
        S = section(K, args.H, interior_hint=p)
        if S is None:
            raise UsageError("the hyperplane misses the body")
        T = _default_T(K, args)
        Wa = subspace_meet(orth_complement(np.asarray(T, float)[:, None] / np.linalg.norm(T)), S.chart.frame)
        W = S.chart.frame.T @ Wa
        r = detect_aligned_reflection(S, S.chart.project(p), W, args.mode, tol=args.tol or 1e-6)
    d = r.to_dict()
    d["command"] = f"detect {args.what}"
    return r.verdict, d


def _write_per_hyperplane(rep, path):
    rows = rep.artifacts.get("per_hyperplane") or []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "offset", "residual"] + [f"normal{i + 1}" for i in range(len(rows[0]["normal"]) if rows else 0)])
        for i, r in enumerate(rows):
            w.writerow([i, repr(float(r["offset"])), repr(float(r["residual"]))] + [repr(float(x)) for x in r["normal"]])


def cmd_verify(args):
    th = args.theorem
    rep = None
    if th in ("thm14", "thm18"):
        K = load_body(args)
        _check_dim(K, args.p, args.T)
        fn = V.recover_axis_thm14 if th == "thm14" else V.verify_thm18
        kw = dict(mode=args.mode, taus=args.taus, seed=args.seed, n_H=args.n_H, count=args.count)
        rep = fn(K, args.p, _default_T(K, args), **kw)
        if args.svg and K.n == 3 and rep.verdict != "inconclusive":
            family_to_svg(central_projection_family(K, args.p, _default_T(K, args), args.taus, count=args.count),
                          args.svg)
    elif th in ("thm21", "thm22"):
        K = load_body(args)
        _check_dim(K, args.p)
        normals = args.T_normals if args.T_normals is not None else np.eye(K.n)[:, -1:]
        Tb = orth_complement(orthonormalize(normals))
        if th == "thm21":
            rep = V.verify_thm21(K, args.p, args.P_dirs, Tb, args.n_H, args.seed)
        else:
            rep = V.verify_thm22(K, args.p, Tb, args.n_H, args.seed)
    elif th == "lem03":
        K1 = load_body(args)
        K2 = load_body(args, "2") if (args.body2 or args.body_json2) else None
        if K2 is None:
            q = K1.interior_point()
            K2 = K1.transformed(AffineMap(args.ratio * np.eye(K1.n), (1 - args.ratio) * q))
        rep = V.midpoint_coincidence(K1, K2, args.lines, args.seed)
    elif th == "lem05":
        E1, E2, F = V.offset_ellipsoid_family(args.n, args.lam, args.delta, args.count_H, args.seed)
        rep = V.centroid_family_test(E1, E2, F)
    elif th == "lem07":
        if args.a is None:
            raise UsageError("verify lem07 needs --a")
        rep = V.verify_lem07(args.a, args.k, seed=args.seed)
    elif th == "lem08":
        sf = V.SigmaField.smooth(args.table, args.seed)
        rep = V.cone_bound(sf, grid_pairs=args.pairs, seed=args.seed)
        rep.artifacts["sigma_field"] = sf.to_dict()
    elif th == "con07":
        rep = V.falsify_con07(args.gen, args.trials, args.seed)
    if args.csv and rep.artifacts.get("per_hyperplane"):
        _write_per_hyperplane(rep, args.csv)
    d = rep.to_dict()
    d["command"] = f"verify {th}"
    return rep.verdict, d


def cmd_family(args):
    K = load_body(args)
    _check_dim(K, args.p, args.T)
    fam = central_projection_family(K, args.p, _default_T(K, args), args.taus, args.screen_offset, args.count)
    if args.csv:
        family_to_csv(fam, args.csv)
    if args.svg:
        family_to_svg(fam, args.svg)
    rep = {"command": "family", "p": fam.p, "screen": fam.T_star.to_dict(), "taus": fam.taus,
           "skipped": fam.skipped, "ratios": fam.ratios, "slices": len(fam)}
    return ("pass" if len(fam) else "inconclusive"), rep


def cmd_gallery(args):
    for name, desc in GALLERY.items():
        print(f"{name:16s} {desc}")
    return "pass", None


# ----------------------------------------------------------------------------
# parser


def _body_args(p, suffix=""):
    p.add_argument(f"--body{suffix}", help="gallery body name")
    p.add_argument(f"--params{suffix}", help="gallery parameters as a JSON object")
    p.add_argument(f"--body-json{suffix}", help="path to a serialized body")


def _out_args(p):
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    p.add_argument("--csv")
    p.add_argument("--svg")
    p.add_argument("--deterministic", action="store_true",
                   help="omit timestamps so identical argv gives identical bytes")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="symtomo", description="Symmetries of sections of convex bodies.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("section", help="section of a body by a hyperplane")
    _body_args(s)
    s.add_argument("--H", type=hyperplane, required=True, help="normal:offset, e.g. 0,0,1:0.2")
    _out_args(s)
    s.set_defaults(func=cmd_section)

    d = sub.add_parser("detect", help="symmetry detectors")
    d.add_argument("what", choices=["central", "reflection", "revolution"])
    _body_args(d)
    d.add_argument("--p", type=vec)
    d.add_argument("--H", type=hyperplane)
    d.add_argument("--T", type=vec, help="normal of the aligned hyperplane (default e_n)")
    d.add_argument("--mode", choices=["orthogonal", "affine"], default="orthogonal")
    d.add_argument("--tol", type=float)
    d.add_argument("--seed", type=int, required=True)
    _out_args(d)
    d.set_defaults(func=cmd_detect)

    v = sub.add_parser("verify", help="theorem harnesses")
    v.add_argument("theorem", choices=["thm14", "thm18", "thm21", "thm22", "lem03", "lem05", "lem07", "lem08", "con07"])
    _body_args(v)
    _body_args(v, "2")
    v.add_argument("--p", type=vec)
    v.add_argument("--T", type=vec, help="normal of T (default e_n)")
    v.add_argument("--T-normals", type=vecs, help="normals cutting out T, separated by ';'")
    v.add_argument("--P-dirs", type=vecs, help="directions spanning P, separated by ';'")
    v.add_argument("--mode", choices=["orthogonal", "affine"], default="orthogonal")
    v.add_argument("--taus", type=lambda t: [float(x) for x in t.split(",")])
    v.add_argument("--count", type=int, default=21, help="number of slice levels")
    v.add_argument("--n-H", dest="n_H", type=int, default=64)
    v.add_argument("--ratio", type=float, default=2.0, help="homothety ratio of the second planar body")
    v.add_argument("--lines", type=int, default=200)
    v.add_argument("--n", type=int, default=3)
    v.add_argument("--lam", type=float, default=0.5)
    v.add_argument("--delta", type=float, default=0.1)
    v.add_argument("--count-H", dest="count_H", type=int, default=2000)
    v.add_argument("--a", type=vec)
    v.add_argument("--k", type=int, default=1)
    v.add_argument("--table", type=int, default=200)
    v.add_argument("--pairs", type=int, default=1000)
    v.add_argument("--gen", default="ball_cube", choices=sorted(V.CENTROID_PAIR_PRESETS))
    v.add_argument("--trials", type=int, default=1)
    v.add_argument("--seed", type=int, required=True)
    _out_args(v)
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("family", help="central projection family of slices")
    _body_args(f)
    f.add_argument("--p", type=vec, required=True)
    f.add_argument("--T", type=vec)
    f.add_argument("--taus", type=lambda t: [float(x) for x in t.split(",")])
    f.add_argument("--count", type=int, default=21)
    f.add_argument("--screen-offset", type=float, default=1.0)
    _out_args(f)
    f.set_defaults(func=cmd_family)

    g = sub.add_parser("gallery", help="example bodies")
    g.add_argument("action", choices=["list"])
    g.set_defaults(func=cmd_gallery, out=None, deterministic=True)
    return ap


def _needs_p(args):
    if getattr(args, "p", None) is None:
        if args.command == "verify" and args.theorem in ("thm14", "thm18", "thm21", "thm22"):
            raise UsageError("--p is required")
        if args.command == "detect" and args.what in ("reflection", "revolution"):
            raise UsageError("--p is required")


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help, --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _needs_p(args)
        out = args.func(args)
    except (UsageError, GeometryError, ValueError, OSError) as exc:
        sys.stderr.write(f"symtomo: error: {exc}\n")
        return 1
    verdict, rep = out[0], out[1]
    if rep is not None:
        rep = _jsonable(rep)
        rep["verdict"] = verdict
        rep["argv"] = list(argv if argv is not None else sys.argv[1:])
        rep["version"] = __version__
        if not args.deterministic:
            rep["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        text = json.dumps(rep, sort_keys=True, indent=1) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
    return EXIT[verdict]


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
