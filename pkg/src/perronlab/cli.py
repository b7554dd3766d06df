"""Command-line entry point: ``perronlab {tau,perron,verify,phase,maxfn,render}``.

Exit codes: 0 success, 1 evidence or invariant failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Optional

from gmpy2 import mpq

from . import persist
from .bases import BasisError, IndexedSequence, build_triangle_family, tau_truncated
from .experiments import (
    PHASE_CSV_COLUMNS, ExperimentConfig, _sequence, phase_rows, run_phase_diagram, verify_suite,
)
from .geometry import Point, as_scalar, fmt, triangle
from .maximal import Enumeration, brute_force_maxfn, level_set_from_perron
from .perron import PerronFailure, PerronScale, build_perron_tree, choose_N, doubling_candidates, optimize_alpha
from .svg import SvgStyle, render_svg

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _rational(text: str):
    try:
        return as_scalar(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an exact rational: {text!r}") from None


def _point(text: str) -> Point:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected x,y: {text!r}")
    return Point(_rational(parts[0]), _rational(parts[1]))


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from None


def _emit(text: str, out_dir: Optional[Path], name: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
    else:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / name).write_text(text, encoding="utf-8")


def _load_config(args) -> ExperimentConfig:
    if args.config:
        _, data = persist.load(args.config, "config")
        cfg = persist.config_from_dict(data)
    else:
        cfg = ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "n_schedule", None):
        changes["n_schedule"] = args.n_schedule
    if getattr(args, "alpha_policy", None):
        changes["alpha_policy"] = args.alpha_policy
    if changes:
        try:
            cfg = dataclasses.replace(cfg, **changes)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    return cfg


def _out_dir(args, cfg: Optional[ExperimentConfig] = None) -> Optional[Path]:
    if args.out:
        return Path(args.out)
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return None


def _sequence_values(args, k_max: int) -> IndexedSequence:
    if args.values:
        vals = [_rational(v) for v in args.values.split(",") if v]
        return IndexedSequence(1, tuple(vals))
    return _sequence(args.sequence, k_max)


# --- subcommands ---------------------------------------------------------------------

def cmd_tau(args) -> int:
    t = _sequence_values(args, args.K)
    est = tau_truncated(list(t.values), args.K)
    data = {"K": est.K, "value": fmt(est.value), "value_decimal": f"{float(est.value):.12g}",
            "argmax": list(est.argmax), "sequence": args.sequence if not args.values else "explicit"}
    _emit(persist.dumps("tau", data), _out_dir(args), "tau.json")
    return EXIT_OK


def cmd_perron(args) -> int:
    t = _sequence_values(args, args.N_cap + 2 ** args.n + 2)
    e = IndexedSequence(t.k_min, tuple((t[k] - t[k + 1]) / 2 for k in range(t.k_min, t.k_max)))
    fam = build_triangle_family(t, e)
    if args.alpha == "optimized":
        tau = tau_truncated(list(t.values), min(len(t), 2 ** args.n + 1 + args.N_cap)).value
        alpha = optimize_alpha(args.n, tau).alpha
    else:
        alpha = _rational(args.alpha)
    if args.N == "auto":
        search = choose_N(fam, alpha, args.n, doubling_candidates(args.N_cap))
        if not search.succeeded:
            sys.stderr.write("no candidate N produced a verified tree\n")
            _emit(persist.dumps("verify", {"transcript": list(search.transcript)}), _out_dir(args), "failure.json")
            return EXIT_FAIL
        tree = search.tree
    else:
        try:
            tree = build_perron_tree(fam, PerronScale(alpha, args.n, int(args.N)))
        except PerronFailure as exc:
            sys.stderr.write(f"{exc}\n")
            _emit(persist.dumps("verify", {"failure": exc.diagnostics}), _out_dir(args), "failure.json")
            return EXIT_FAIL
    out = _out_dir(args)
    _emit(persist.dumps("tree", persist.tree_to_dict(tree)), out, "tree.json")
    if out is not None:
        (out / "tree.svg").write_text(render_svg(tree), encoding="utf-8")
        if args.certify:
            cert = level_set_from_perron(tree, fam, 1)
            persist.save(out / "certificate.json", "certificate", persist.certificate_to_dict(cert))
            (out / "certificate.svg").write_text(render_svg(cert), encoding="utf-8")
    sys.stderr.write(f"n={tree.scale.n} N={tree.scale.N} ratio={float(tree.ratio):.12g} "
                     f"bound={float(tree.epsilon_bound):.12g}\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    report = verify_suite(cfg)
    _emit(persist.dumps("verify", report.to_dict()), _out_dir(args, cfg), "verify.json")
    for r in report.results:
        sys.stderr.write(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.checked} checks)\n")
    return EXIT_FAIL if report.failed else EXIT_OK


def cmd_phase(args) -> int:
    cfg = _load_config(args)
    report = run_phase_diagram(cfg)
    out = _out_dir(args, cfg)
    _emit(persist.dumps("phase", report.to_dict()), out, "phase.json")
    if out is not None:
        (out / "phase.csv").write_text(persist.to_csv(phase_rows(report), PHASE_CSV_COLUMNS), encoding="utf-8")
    for c in report.cells:
        cl = c.classification
        sys.stderr.write(f"({c.a}, {c.b}) {cl['verdict']} {cl['regime']} {c.status}\n")
    return EXIT_FAIL if report.failed else EXIT_OK


def cmd_maxfn(args) -> int:
    if args.tree:
        _, data = persist.load(args.tree, "tree")
        tree = persist.tree_from_dict(data)
        X = list(tree.X)
        fam = tree.family
        gens = dict(fam.basis_triangles) or {k: fam.delta(k) for k in fam.indices()}
    else:
        pts = [_point(p) for p in args.triangle.split(";")]
        if len(pts) != 3:
            raise UsageError("--triangle needs three points x,y;x,y;x,y")
        T = triangle(*pts)
        if T.is_empty:
            raise UsageError("degenerate triangle")
        X, gens = [T], {0: T}
    enum = Enumeration(gens, density=args.density, max_dilation=args.max_dilation,
                       barycentric_steps=args.barycentric_steps)
    w = brute_force_maxfn(args.x, X, enum)
    data = {"x": [fmt(w.point.x), fmt(w.point.y)], "value": fmt(w.value),
            "value_decimal": f"{float(w.value):.12g}",
            "element": {"index": w.element.index, "dilation": fmt(w.element.h),
                        "translation": [fmt(w.element.v.x), fmt(w.element.v.y)],
                        "polygon": w.element.polygon.to_strings()}}
    _emit(persist.dumps("verify", {"maxfn": data}), _out_dir(args), "maxfn.json")
    return EXIT_OK


def cmd_render(args) -> int:
    style = SvgStyle(precision=args.precision)
    if args.input:
        kind, data = persist.load(args.input)
        if kind == "tree":
            obj = persist.tree_from_dict(data)
        elif kind == "certificate":
            obj = persist.certificate_from_dict(data)
        else:
            raise UsageError(f"cannot render a {kind} document")
    else:
        t = _sequence(args.sequence, args.k_max + 1)
        obj = build_triangle_family(t, None, 1, args.k_max)
    text = render_svg(obj, style)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="perronlab", description="Perron-tree and maximal-operator laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    def seq_opts(sp):
        sp.add_argument("--sequence", choices=("harmonic", "arithmetic", "geometric"), default="harmonic")
        sp.add_argument("--values", help="explicit decreasing sequence t_1,t_2,... as p/q values")

    sp = sub.add_parser("tau", help="truncated comparability functional of a sequence")
    seq_opts(sp)
    sp.add_argument("--K", type=int, default=64)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_tau)

    sp = sub.add_parser("perron", help="build and verify one Perron tree")
    seq_opts(sp)
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--alpha", default="optimized", help="'optimized' or a rational in (0,1)")
    sp.add_argument("--N", default="auto", help="'auto' or a nonnegative integer")
    sp.add_argument("--N-cap", dest="N_cap", type=int, default=16)
    sp.add_argument("--certify", action="store_true", help="also write a level-set certificate (e_k = gap/2)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_perron)

    for name, func, text in (("verify", cmd_verify, "run every invariant campaign"),
                             ("phase", cmd_phase, "classify the (a,b) grid with evidence")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        if name == "phase":
            sp.add_argument("--n-schedule", dest="n_schedule", type=_int_list)
            sp.add_argument("--alpha-policy", dest="alpha_policy")
        sp.set_defaults(func=func)

    sp = sub.add_parser("maxfn", help="brute-force lower bound for the maximal function at a point")
    sp.add_argument("--x", type=_point, required=True)
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--tree")
    src.add_argument("--triangle", help="x,y;x,y;x,y")
    sp.add_argument("--density", type=int, default=4)
    sp.add_argument("--max-dilation", dest="max_dilation", type=_rational, default=mpq(2))
    sp.add_argument("--barycentric-steps", dest="barycentric_steps", type=int, default=2)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_maxfn)

    sp = sub.add_parser("render", help="SVG of a saved tree/certificate or of a triangle fan")
    sp.add_argument("--input")
    sp.add_argument("--sequence", choices=("harmonic", "arithmetic", "geometric"), default="harmonic")
    sp.add_argument("--k-max", dest="k_max", type=int, default=8)
    sp.add_argument("--precision", type=int, default=6)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, persist.PersistError, BasisError, argparse.ArgumentTypeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
