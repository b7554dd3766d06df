"""Phase-diagram sweeps over (a, b) and seeded verification campaigns."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, asdict
from typing import Optional

from gmpy2 import mpq

from .bases import (
    BasisError, Classification, Rectangle, SequenceSpec, ab_basis, axis_cover, build_triangle_family,
    check_domination, check_gap_hypothesis, classify_ab, eval_sequence, rect_triangle_sandwich,
    tau_truncated,
)
from .geometry import (
    ConvexPolygon, Point, area, as_scalar, fmt, homothety, intersect, translate, union_measure,
)
from .maximal import (
    eta_of, overlap_check, stretched_overlap_check, overlap_samples, level_set_from_perron, pnorm_lower_bound,
    region_minimum, tree_norm_bound, worst_point,
)
from .perron import (
    PerronFailure, choose_N, doubling_candidates, epsilon,
    geometric_counterexample_check, optimize_alpha, random_shifts, verify_tree,
)

DEFAULT_P_GRID = ("3/2", "2", "4")


@dataclass(frozen=True)
class ExperimentConfig:
    ab_grid: tuple = (("1/2", "1/2"), ("1/2", "1"), ("1/2", "2"), ("1", "1/2"), ("1", "1"),
                      ("1", "2"), ("2", "1/2"), ("2", "1"), ("2", "2"))
    n_schedule: tuple = (2, 3, 4, 5)
    alpha_policy: str = "optimized"          # or "fixed:<rational>"
    K_tau: int = 64
    snap_bound: int = 2 ** 64
    seed: int = 20240601
    output_dir: Optional[str] = None
    p_grid: tuple = DEFAULT_P_GRID
    max_generator: int = 64
    N_cap: int = 16
    # verification budgets
    overlap_triangles: int = 200
    overlap_sample_count: int = 50
    stretch_factors: tuple = ("1/4", "1/2", "1", "2", "5")
    perron_n: tuple = (1, 2, 3, 4)
    shift_trials: int = 200
    kernel_trials: int = 200
    corrupt_shifts: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ab_grid", tuple((fmt(a), fmt(b)) for a, b in self.ab_grid))
        object.__setattr__(self, "n_schedule", tuple(int(n) for n in self.n_schedule))
        object.__setattr__(self, "p_grid", tuple(fmt(p) for p in self.p_grid))
        object.__setattr__(self, "stretch_factors", tuple(fmt(e) for e in self.stretch_factors))
        object.__setattr__(self, "perron_n", tuple(int(n) for n in self.perron_n))
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if any(n < 1 or n > 12 for n in self.n_schedule):
            raise ValueError("n_schedule entries must lie in [1, 12]")
        self.alpha_for(1, mpq(2))  # validates the policy string

    def alpha_for(self, n: int, tau):
        if self.alpha_policy == "optimized":
            return optimize_alpha(n, tau).alpha
        if self.alpha_policy.startswith("fixed:"):
            a = as_scalar(self.alpha_policy[6:])
            if not 0 < a < 1:
                raise ValueError("fixed alpha must lie in (0, 1)")
            return a
        raise ValueError(f"unknown alpha policy {self.alpha_policy!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ab_grid"] = [list(c) for c in self.ab_grid]
        for key in ("n_schedule", "p_grid", "stretch_factors", "perron_n"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "ab_grid" in d:
            d["ab_grid"] = tuple(tuple(c) for c in d["ab_grid"])
        for key in ("n_schedule", "p_grid", "stretch_factors", "perron_n"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


# --- phase diagram -------------------------------------------------------------------

@dataclass
class CellReport:
    a: str
    b: str
    classification: dict
    status: str = "OK"                  # or "FAILED"
    evidence: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "classification": self.classification, "status": self.status,
                "evidence": self.evidence, "diagnostics": self.diagnostics}


@dataclass
class PhaseReport:
    config: ExperimentConfig
    cells: list

    @property
    def failed(self) -> list:
        return [c for c in self.cells if c.status != "OK"]

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "cells": [c.to_dict() for c in self.cells]}


def cover_evidence(a, b, cls: Classification, cfg: ExperimentConfig) -> dict:
    t, e = ab_basis(a, b, k_max=cfg.max_generator, snap_bound=cfg.snap_bound).evaluate()
    C = max(t[n] / e[n] for n in t.indices())
    if C > cls.C:
        raise AssertionError(f"observed C = {C} exceeds the analytic constant {cls.C}")
    check_domination(t, e, C)
    worst = mpq(0)
    for n in t.indices():
        cover = axis_cover(Rectangle(n, t[n], e[n]), C)
        worst = max(worst, cover.ratio)
    return {"kind": "cover", "generators": len(t), "C": fmt(C), "bound": fmt(8 * (1 + C)),
            "max_ratio": fmt(worst), "max_ratio_decimal": f"{float(worst):.12g}"}


def perron_evidence(a, b, mu0, cfg: ExperimentConfig) -> dict:
    """Trees, certificates and norm bounds on B_{a,b} for each n in the schedule."""
    top_n = max(cfg.n_schedule)
    k_max = max(cfg.K_tau, cfg.N_cap + 2 ** top_n + 2)
    t, e = ab_basis(a, b, k_max=k_max, snap_bound=cfg.snap_bound).evaluate()
    tau = tau_truncated(list(t.values), cfg.K_tau)
    fam = build_triangle_family(t, e, 1, k_max - 1)
    eta = eta_of(mu0)
    rows = []
    for n in cfg.n_schedule:
        alpha = cfg.alpha_for(n, tau.value)
        eps_star = epsilon(alpha, n, tau.value)
        search = choose_N(fam, alpha, n, doubling_candidates(cfg.N_cap))
        if not search.succeeded:
            raise PerronFailure(f"no N up to {cfg.N_cap} works at n={n}", {"transcript": list(search.transcript)})
        tree = search.tree
        check_gap_hypothesis(t, e, mu0, tree.indices)
        cert = level_set_from_perron(tree, fam, mu0)
        row = {"n": n, "alpha": fmt(alpha), "epsilon_star": fmt(eps_star),
               "epsilon_star_decimal": f"{float(eps_star):.12g}", "N": search.N,
               "area_X": fmt(tree.area_X), "area_sum": fmt(tree.area_sum),
               "tree_ratio_decimal": f"{float(tree.ratio):.12g}",
               "slice_bound": fmt(tree.epsilon_bound), "threshold": fmt(cert.threshold),
               "certified_measure": fmt(cert.certified_measure),
               "certificate_bounds": {}, "epsilon_bounds": {}}
        for p in cfg.p_grid:
            row["certificate_bounds"][p] = pnorm_lower_bound(cert, tree.area_X, p).to_dict()
            row["epsilon_bounds"][p] = tree_norm_bound(eta, eps_star, p).to_dict()
        rows.append(row)
    eps_seq = [as_scalar(r["epsilon_star"]) for r in rows]
    decreasing = all(y < x for x, y in zip(eps_seq, eps_seq[1:]))
    if not decreasing:
        raise AssertionError("epsilon_star is not strictly decreasing along the schedule")
    return {"kind": "perron", "basis": f"B_{{{fmt(a)},{fmt(b)}}}", "mu0": fmt(mu0), "eta": fmt(eta),
            "tau": fmt(tau.value), "tau_K": tau.K, "tau_argmax": list(tau.argmax),
            "epsilon_star_decreasing": decreasing, "trees": rows}


def run_cell(a, b, cfg: ExperimentConfig) -> CellReport:
    cls = classify_ab(a, b)
    cell = CellReport(fmt(a), fmt(b), cls.to_dict())
    try:
        if cls.verdict == "Good":
            cell.evidence = cover_evidence(a, b, cls, cfg)
        elif cls.regime == "direct":
            cell.evidence = perron_evidence(cls.a, cls.b, cls.mu0, cfg)
        else:
            la, lb = cls.ell0 * cls.a, cls.ell0 * cls.b
            if classify_ab(la, lb).regime != "direct":
                raise AssertionError("subsequence exponents do not reach the direct regime")
            cell.evidence = perron_evidence(la, lb, cls.mu0, cfg)
            cell.evidence["subsequence"] = {"ell0": cls.ell0, "exponents": [fmt(la), fmt(lb)]}
    except (PerronFailure, BasisError, AssertionError, ValueError) as exc:
        cell.status = "FAILED"
        cell.diagnostics.append({"error": type(exc).__name__, "message": str(exc),
                                 **({"details": exc.diagnostics} if isinstance(exc, PerronFailure) else {})})
    return cell


def run_phase_diagram(cfg: ExperimentConfig) -> PhaseReport:
    return PhaseReport(cfg, [run_cell(a, b, cfg) for a, b in cfg.ab_grid])


PHASE_CSV_COLUMNS = ("a", "b", "verdict", "regime", "status", "C", "mu0", "ell0", "tau", "n", "alpha",
                     "epsilon_star", "N", "tree_ratio", "bound_p3/2", "bound_p2", "bound_p4", "cover_max_ratio")


def phase_rows(report: PhaseReport) -> list[dict]:
    """One row per (cell, n); Good cells get a single row."""
    rows = []
    for c in report.cells:
        cl = c.classification
        base = {k: "" for k in PHASE_CSV_COLUMNS}
        base.update(a=c.a, b=c.b, verdict=cl["verdict"], regime=cl["regime"], status=c.status,
                    C=cl.get("C", ""), mu0=cl.get("mu0", ""), ell0=cl.get("ell0", ""))
        ev = c.evidence
        if ev.get("kind") == "perron":
            for tr in ev["trees"]:
                row = dict(base, tau=ev["tau"], n=tr["n"], alpha=tr["alpha"],
                           epsilon_star=tr["epsilon_star_decimal"], N=tr["N"], tree_ratio=tr["tree_ratio_decimal"])
                for p in ("3/2", "2", "4"):
                    if p in tr["epsilon_bounds"]:
                        row[f"bound_p{p}"] = tr["epsilon_bounds"][p]["bound_decimal"]
                rows.append(row)
        else:
            rows.append(dict(base, cover_max_ratio=ev.get("max_ratio_decimal", "")))
    return rows


# --- verification campaigns ---------------------------------------------------------

@dataclass
class InvariantResult:
    name: str
    passed: bool
    checked: int
    counterexample: Optional[dict] = None

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checked": self.checked,
                "counterexample": self.counterexample}


@dataclass
class VerifyReport:
    config: ExperimentConfig
    results: list

    @property
    def failed(self) -> list:
        return [r for r in self.results if not r.passed]

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "results": [r.to_dict() for r in self.results]}


def _rand_q(rng: random.Random, lo=-64, hi=64, den=61):
    return mpq(rng.randint(lo * den, hi * den), den)


def random_triangle(rng: random.Random) -> tuple:
    while True:
        pts = tuple(Point(_rand_q(rng), _rand_q(rng)) for _ in range(3))
        A, B, C = pts
        if (B.x - A.x) * (C.y - A.y) - (B.y - A.y) * (C.x - A.x) != 0:
            return pts


def _pts(tri) -> list:
    return [[fmt(p[0]), fmt(p[1])] for p in tri]


def campaign_overlap(cfg: ExperimentConfig, rng: random.Random) -> InvariantResult:
    checked = 0
    for _ in range(cfg.overlap_triangles):
        tri = random_triangle(rng)
        for w in overlap_check(tri, overlap_samples(tri, rng, cfg.overlap_sample_count)):
            checked += 1
            if w.value < mpq(1, 4):
                return InvariantResult("overlap", False, checked, {"triangle": _pts(tri), "x": _pts([w.point])[0],
                                                                   "value": fmt(w.value)})
        if region_minimum(tri, ConvexPolygon.of(tri)) < mpq(1, 4):
            return InvariantResult("overlap", False, checked, {"triangle": _pts(tri), "region": True})
    return InvariantResult("overlap", True, checked)


def campaign_stretched_overlap(cfg: ExperimentConfig, rng: random.Random) -> InvariantResult:
    checked = 0
    for es in cfg.stretch_factors:
        e = as_scalar(es)
        eta = eta_of(e)
        for _ in range(cfg.overlap_triangles):
            tri = random_triangle(rng)
            for w in stretched_overlap_check(tri, e, overlap_samples(tri, rng, cfg.overlap_sample_count)):
                checked += 1
                if w.value < eta:
                    return InvariantResult("stretched_overlap", False, checked,
                                           {"triangle": _pts(tri), "e": es, "value": fmt(w.value)})
            if e <= 1:
                x0 = stretched_overlap_check(tri, e, [worst_point(tri)])[0]
                if x0.value != mpq(1, 4):
                    return InvariantResult("stretched_overlap", False, checked,
                                           {"triangle": _pts(tri), "e": es, "worst_value": fmt(x0.value)})
    return InvariantResult("stretched_overlap", True, checked)


def _sequence(name: str, k_max: int):
    if name == "harmonic":
        return eval_sequence(SequenceSpec.power_law(1, "1", k_max=k_max))
    if name == "arithmetic":
        return eval_sequence(SequenceSpec.explicit([1 - mpq(k, 4 * k_max) for k in range(1, k_max + 1)]))
    if name == "geometric":
        return eval_sequence(SequenceSpec.geometric(mpq(1, 2), k_max=k_max))
    raise ValueError(f"unknown named sequence {name!r}")


def campaign_perron(cfg: ExperimentConfig) -> InvariantResult:
    checked = 0
    top = max(cfg.perron_n)
    for name, tau in (("harmonic", mpq(10, 3)), ("arithmetic", mpq(2))):
        t = _sequence(name, cfg.N_cap + 2 ** top + 2)
        fam = build_triangle_family(t)
        for n in cfg.perron_n:
            alpha = optimize_alpha(n, tau).alpha
            search = choose_N(fam, alpha, n, doubling_candidates(cfg.N_cap))
            checked += 1
            if not search.succeeded:
                return InvariantResult("tree_bounds", False, checked,
                                       {"sequence": name, "n": n, "transcript": list(search.transcript)})
            tree = search.tree
            if cfg.corrupt_shifts:
                try:
                    verify_tree(fam, tree.scale, {k: mpq(0) for k in tree.indices})
                except PerronFailure as exc:
                    return InvariantResult("tree_bounds", False, checked,
                                           {"sequence": name, "n": n, "corrupted": True, **exc.diagnostics})
    return InvariantResult("tree_bounds", True, checked)


def campaign_geometric(cfg: ExperimentConfig, rng: random.Random) -> InvariantResult:
    t = _sequence("geometric", 2 * cfg.N_cap + 20)
    fam = build_triangle_family(t)
    I = list(range(1, 9))
    for trial in range(cfg.shift_trials):
        shifts = random_shifts(I, rng, scale=mpq(1, 2) ** rng.randint(0, 8))
        r = geometric_counterexample_check(fam, I, shifts)
        if not r.holds:
            return InvariantResult("geometric_obstruction", False, trial + 1,
                                   {"shifts": {str(k): fmt(v) for k, v in shifts.items()}})
    search = choose_N(fam, mpq(9, 10), 3, doubling_candidates(cfg.N_cap), target=mpq(1, 2))
    if search.succeeded:
        return InvariantResult("geometric_obstruction", False, cfg.shift_trials,
                               {"N": search.N, "note": "reached ratio below 1/2"})
    return InvariantResult("geometric_obstruction", True, cfg.shift_trials + 1)


def campaign_kernel(cfg: ExperimentConfig, rng: random.Random) -> InvariantResult:
    for trial in range(cfg.kernel_trials):
        P = ConvexPolygon.of([(_rand_q(rng, -8, 8), _rand_q(rng, -8, 8)) for _ in range(rng.randint(3, 7))])
        Q = ConvexPolygon.of([(_rand_q(rng, -8, 8), _rand_q(rng, -8, 8)) for _ in range(rng.randint(3, 7))])
        v = (_rand_q(rng), _rand_q(rng))
        h = mpq(rng.randint(1, 40), rng.randint(1, 40))
        ok = (area(intersect(P, Q)) + union_measure([P, Q]) == area(P) + area(Q)
              and area(translate(P, v)) == area(P)
              and area(homothety(P, (0, 0), h)) == h * h * area(P)
              and union_measure([P, Q]) <= area(P) + area(Q))
        if not ok:
            return InvariantResult("kernel", False, trial + 1, {"P": P.to_strings(), "Q": Q.to_strings()})
    return InvariantResult("kernel", True, cfg.kernel_trials)


def campaign_tau(cfg: ExperimentConfig) -> InvariantResult:
    K = cfg.K_tau
    harmonic = list(_sequence("harmonic", K).values)
    arithmetic = list(_sequence("arithmetic", K).values)
    prev = None
    for k in range(3, K + 1):
        v = tau_truncated(harmonic, k).value
        if v < 2 or v > mpq(10, 3) or (prev is not None and v < prev):
            return InvariantResult("tau", False, k, {"K": k, "value": fmt(v)})
        if tau_truncated(arithmetic, k).value != 2:
            return InvariantResult("tau", False, k, {"K": k, "sequence": "arithmetic"})
        prev = v
    return InvariantResult("tau", prev == mpq(10, 3), K - 2)


def campaign_rectangles(cfg: ExperimentConfig) -> InvariantResult:
    checked = 0
    for a, b in (("1", "1"), ("1", "2"), ("1/2", "1"), ("2", "3")):
        t, e = ab_basis(a, b, k_max=min(cfg.max_generator, 32), snap_bound=cfg.snap_bound).evaluate()
        for n in t.indices():
            try:
                rect_triangle_sandwich(t[n], e[n], n)
                axis_cover(Rectangle(n, t[n], e[n]), max(t[m] / e[m] for m in t.indices()))
            except (AssertionError, BasisError) as exc:
                return InvariantResult("rectangles", False, checked, {"a": a, "b": b, "n": n, "error": str(exc)})
            checked += 1
    return InvariantResult("rectangles", True, checked)


def verify_suite(cfg: ExperimentConfig) -> VerifyReport:
    """Every invariant campaign, each from its own seeded stream."""
    def stream(tag: int) -> random.Random:
        return random.Random(cfg.seed * 1000 + tag)

    results = [
        campaign_kernel(cfg, stream(1)),
        campaign_tau(cfg),
        campaign_rectangles(cfg),
        campaign_overlap(cfg, stream(2)),
        campaign_stretched_overlap(cfg, stream(3)),
        campaign_perron(cfg),
        campaign_geometric(cfg, stream(4)),
    ]
    return VerifyReport(cfg, results)
