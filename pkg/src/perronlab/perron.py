"""Generalized Perron trees over thin triangles: construction, exact verification
of the area bound and of half-triangle disjointness, and (alpha, n, N) tuning."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

import mpmath
import numpy as np
from gmpy2 import mpq

from .bases import TauEstimate, TriangleFamily, build_triangle_family, tau_truncated, IndexedSequence
from .geometry import (
    ORIGIN, ConvexPolygon, Point, PolygonUnion, Scalar, area, as_scalar, fmt, homothety,
    intersect, translate, union_measure,
)

ALPHA_BOUNDARY_FALLBACK = 1 - mpq(1, 1000)
ALPHA_SNAP = 2 ** 64


class PerronFailure(RuntimeError):
    """The construction could not certify both tree bounds; ``diagnostics`` says why."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class PerronScale:
    alpha: Scalar
    n: int
    N: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_scalar(self.alpha))
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.n < 1 or self.N < 0:
            raise ValueError("need n >= 1 and N >= 0")

    @property
    def indices(self) -> range:
        return range(self.N + 1, self.N + 2 ** self.n + 1)


@dataclass(frozen=True)
class ShiftAssignment:
    """Vertical shifts s_k, keyed by triangle index."""

    shifts: dict

    def __getitem__(self, k: int) -> Scalar:
        return self.shifts[k]

    def vector(self, k: int) -> Point:
        return Point(mpq(0), self.shifts[k])

    def items(self):
        return sorted(self.shifts.items())


@dataclass(frozen=True)
class PerronTree:
    scale: PerronScale
    family: TriangleFamily = field(repr=False)
    shifts: ShiftAssignment = field(repr=False)
    X: PolygonUnion = field(repr=False)
    area_X: Scalar
    area_sum: Scalar
    tau: TauEstimate
    epsilon_bound: Scalar
    disjoint_next_anchor: bool
    disjoint_same_anchor: bool
    stage_choices: tuple = ()

    @property
    def ratio(self) -> Scalar:
        return self.area_X / self.area_sum

    @property
    def indices(self) -> range:
        return self.scale.indices


# --- epsilon and alpha -------------------------------------------------------------

def epsilon(alpha, n: int, tau) -> Scalar:
    alpha, tau = as_scalar(alpha), as_scalar(tau)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return alpha ** (2 * n) + tau * (1 - alpha)


@dataclass(frozen=True)
class AlphaChoice:
    n: int
    tau: Scalar
    alpha: Scalar
    epsilon: Scalar
    interior: bool
    search_alpha: Optional[float] = None
    diagnosis: str = ""


def _ternary_min(f, lo, hi, iters=200):
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if f(m1) < f(m2):
            hi = m2
        else:
            lo = m1
    return (lo + hi) / 2


def optimize_alpha(n: int, tau) -> AlphaChoice:
    """Minimize alpha^(2n) + tau (1 - alpha) over (0, 1).

    The stationary point (tau / 2n)^(1/(2n-1)) is rounded to a dyadic rational and
    cross-checked against a ternary search on the (convex) objective.
    """
    tau = as_scalar(tau)
    if n < 1:
        raise ValueError("n must be positive")
    if 2 * n <= tau:
        a = ALPHA_BOUNDARY_FALLBACK
        return AlphaChoice(n, tau, a, epsilon(a, n, tau), False,
                           diagnosis=f"2n = {2 * n} <= tau = {fmt(tau)}: no interior minimum, increase n")
    with mpmath.workprec(160):
        tf = mpmath.mpf(tau.numerator) / tau.denominator
        star = mpmath.power(tf / (2 * n), mpmath.mpf(1) / (2 * n - 1))
        searched = _ternary_min(lambda a: a ** (2 * n) + tf * (1 - a), mpmath.mpf(0), mpmath.mpf(1))
        if abs(searched - star) > mpmath.mpf(10) ** -20:
            raise AssertionError(f"stationary point {star} disagrees with ternary search {searched}")
        alpha = mpq(int(mpmath.nint(star * ALPHA_SNAP)), ALPHA_SNAP)
    return AlphaChoice(n, tau, alpha, epsilon(alpha, n, tau), True, float(searched))


# --- construction --------------------------------------------------------------------

def _union_length_score(lo_coef, hi_coef, shifts, xs) -> float:
    """Midpoint-rule area of the union of triangles {s + x*[lo, hi]} over x in [0, 1]."""
    lo = shifts[None, :] + xs[:, None] * lo_coef[None, :]
    hi = shifts[None, :] + xs[:, None] * hi_coef[None, :]
    order = np.argsort(lo, axis=1, kind="stable")
    lo = np.take_along_axis(lo, order, axis=1)
    hi = np.take_along_axis(hi, order, axis=1)
    reach = np.maximum.accumulate(hi, axis=1)
    prev = np.concatenate([np.full((len(xs), 1), -np.inf), reach[:, :-1]], axis=1)
    covered = np.clip(hi - np.maximum(lo, prev), 0.0, None).sum(axis=1)
    return float(covered.mean())


def greedy_shifts(t: IndexedSequence, indices: Sequence[int], grid: int = 64,
                  samples: int = 256) -> tuple[dict, tuple]:
    """Bisection merge that keeps base points t_{k+1} + s_k non-increasing in k.

    At each stage adjacent groups are merged by moving the lower group down so that
    its first base point sits a distance D below the upper group's last one; D runs
    over ``grid`` equal steps of the merged base span and the smallest float-scored
    union area wins (first minimum on ties). Shifts stay exact rationals.
    """
    ks = list(indices)
    s = {k: mpq(0) for k in ks}
    groups = [[k] for k in ks]
    xs = (np.arange(samples) + 0.5) / samples
    top = {k: float(t[k]) for k in ks}
    bot = {k: float(t[k + 1]) for k in ks}
    choices = []
    while len(groups) > 1:
        merged, stage = [], []
        for i in range(0, len(groups), 2):
            g1, g2 = groups[i], groups[i + 1]
            g = g1 + g2
            base_gap = (t[g1[-1] + 1] + s[g1[-1]]) - (t[g2[0] + 1] + s[g2[0]])
            span = t[g1[0]] - t[g2[-1] + 1]
            lo_c = np.array([bot[k] for k in g])
            hi_c = np.array([top[k] for k in g])
            fixed = np.array([float(s[k]) for k in g1])
            moving = np.array([float(s[k]) for k in g2])
            best_m, best_score = 0, None
            for m in range(grid + 1):
                delta = float(base_gap - span * mpq(m, grid))
                sc = _union_length_score(lo_c, hi_c, np.concatenate([fixed, moving + delta]), xs)
                if best_score is None or sc < best_score - 1e-15:
                    best_m, best_score = m, sc
            delta = base_gap - span * mpq(best_m, grid)
            for k in g2:
                s[k] += delta
            merged.append(g)
            stage.append(best_m)
        groups = merged
        choices.append(tuple(stage))
    return s, tuple(choices)


def half_triangle(family: TriangleFamily, k: int, shift: Scalar, anchor: str = "next") -> ConvexPolygon:
    """(A_{k+1} + s_k) + Delta_k / 2, or the A_k-anchored variant with anchor="same"."""
    j = k + 1 if anchor == "next" else k
    base = Point(mpq(1), family.t[j] + shift)
    return translate(homothety(family.delta(k), ORIGIN, mpq(1, 2)), base)


def half_triangle_witnesses(tree: "PerronTree", anchor: str = "next") -> list[ConvexPolygon]:
    parts = [half_triangle(tree.family, k, tree.shifts[k], anchor) for k in tree.indices]
    ok, pair = pairwise_disjoint(parts)
    if not ok:
        raise AssertionError(f"half-triangles {pair} overlap with anchor {anchor!r}")
    return parts


def pairwise_disjoint(parts: Sequence[ConvexPolygon]) -> tuple[bool, Optional[tuple[int, int]]]:
    """Exact check that every pair meets in measure zero; returns the first offending pair."""
    boxes = [P.bbox() for P in parts]
    order = sorted(range(len(parts)), key=lambda i: boxes[i][1])
    active: list[int] = []
    for i in order:
        y0 = boxes[i][1]
        active = [j for j in active if boxes[j][3] > y0]
        for j in active:
            if boxes[j][0] < boxes[i][2] and boxes[i][0] < boxes[j][2]:
                if area(intersect(parts[i], parts[j])) != 0:
                    return False, (min(i, j), max(i, j))
        active.append(i)
    return True, None


def _slice_tau(t: IndexedSequence, scale: PerronScale) -> TauEstimate:
    K = 2 ** scale.n + 1
    return tau_truncated([t[k] for k in range(scale.N + 1, scale.N + K + 1)], K)


def verify_tree(family: TriangleFamily, scale: PerronScale, shifts: dict,
                stage_choices: tuple = ()) -> PerronTree:
    """Exact check of the area bound and half-triangle disjointness; the A_{k+1} anchor is required."""
    ks = list(scale.indices)
    X = PolygonUnion.of(translate(family.delta(k), (0, shifts[k])) for k in ks)
    area_X = union_measure(X)
    area_sum = sum((area(family.delta(k)) for k in ks), mpq(0))
    tau = _slice_tau(family.t, scale)
    bound = epsilon(scale.alpha, scale.n, tau.value)
    next_ok, next_pair = pairwise_disjoint([half_triangle(family, k, shifts[k], "next") for k in ks])
    same_ok, _ = pairwise_disjoint([half_triangle(family, k, shifts[k], "same") for k in ks])
    diag = {"alpha": fmt(scale.alpha), "n": scale.n, "N": scale.N,
            "area_X": fmt(area_X), "area_sum": fmt(area_sum), "ratio": float(area_X / area_sum),
            "bound": fmt(bound), "bound_float": float(bound), "tau": fmt(tau.value)}
    if area_X > bound * area_sum:
        raise PerronFailure("area bound fails; try a larger N or a different alpha",
                            {**diag, "failed": "area_bound"})
    if not next_ok:
        pair = [ks[next_pair[0]], ks[next_pair[1]]]
        raise PerronFailure(f"half-triangles {pair} overlap", {**diag, "failed": "disjointness", "pair": pair})
    return PerronTree(scale, family, ShiftAssignment(dict(shifts)), X, area_X, area_sum, tau, bound,
                      next_ok, same_ok, stage_choices)


def build_perron_tree(family: TriangleFamily, scale: PerronScale, grid: int = 64,
                      samples: int = 256) -> PerronTree:
    ks = scale.indices
    if ks[0] < family.k_min or ks[-1] > family.k_max:
        raise PerronFailure(
            f"family covers [{family.k_min}, {family.k_max}], scale needs [{ks[0]}, {ks[-1]}]",
            {"failed": "range", "N": scale.N, "n": scale.n})
    shifts, choices = greedy_shifts(family.t, ks, grid, samples)
    return verify_tree(family, scale, shifts, choices)


def doubling_candidates(cap: int) -> list[int]:
    out, N = [0], 1
    while N <= cap:
        out.append(N)
        N *= 2
    return out


@dataclass(frozen=True)
class NSearch:
    N: Optional[int]
    tree: Optional[PerronTree] = field(repr=False)
    transcript: tuple = ()

    @property
    def succeeded(self) -> bool:
        return self.N is not None


def choose_N(family: TriangleFamily, alpha, n: int, candidates: Sequence[int] = (0, 1, 2, 4, 8, 16),
             target=None, **build_kw) -> NSearch:
    """Smallest candidate N whose tree verifies (and, if given, has |X| < target * sum)."""
    candidates = list(candidates)
    if any(b <= a for a, b in zip(candidates, candidates[1:])):
        raise ValueError("candidates must increase")
    target = None if target is None else as_scalar(target)
    transcript = []
    for N in candidates:
        try:
            tree = build_perron_tree(family, PerronScale(alpha, n, N), **build_kw)
        except PerronFailure as exc:
            transcript.append({"N": N, "ok": False, **exc.diagnostics})
            continue
        entry = {"N": N, "ok": True, "ratio": float(tree.ratio), "bound": fmt(tree.epsilon_bound)}
        if target is not None and not tree.area_X < target * tree.area_sum:
            entry.update(ok=False, failed="target", target=fmt(target))
            transcript.append(entry)
            continue
        transcript.append(entry)
        return NSearch(N, tree, tuple(transcript))
    return NSearch(None, None, tuple(transcript))


# --- geometric-sequence obstruction -----------------------------------------------------

@dataclass(frozen=True)
class CounterexampleCheck:
    holds: bool
    area_X: Scalar
    first_area: Scalar
    union_area: Scalar


def geometric_counterexample_check(family: TriangleFamily, index_set: Sequence[int],
                                   shifts: dict) -> CounterexampleCheck:
    """|X_I| >= |Delta_{i0}| >= |union of unshifted Delta_i| / 2, i0 = min I."""
    I = sorted(index_set)
    X = [translate(family.delta(i), (0, as_scalar(shifts.get(i, 0)))) for i in I]
    aX = union_measure(X)
    first = area(family.delta(I[0]))
    whole = union_measure(family.delta(i) for i in I)
    return CounterexampleCheck(aX >= first and 2 * first >= whole, aX, first, whole)


def random_shifts(indices: Sequence[int], rng: random.Random, scale=1, denominator: int = 1 << 20) -> dict:
    scale = as_scalar(scale)
    return {k: scale * mpq(rng.randint(-denominator, denominator), denominator) for k in indices}


def family_for(t_values: IndexedSequence, scale: PerronScale) -> TriangleFamily:
    """Triangle family restricted to the slice a scale needs."""
    ks = scale.indices
    return build_triangle_family(t_values, k_min=ks[0], k_max=ks[-1])
