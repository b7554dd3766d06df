"""Lower bounds for the maximal function of an indicator: overlap witnesses, level-set
certificates built on a Perron tree, p-norm lower bounds and a brute-force oracle."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import gmpy2
import mpmath
from gmpy2 import mpq

from .bases import HypothesisError, TriangleFamily
from .geometry import (
    ORIGIN, ConvexPolygon, Point, Scalar, area, as_scalar, contains_point, fmt,
    homothety, intersect, overlap_area, translate, triangle,
)
from .perron import PerronTree, half_triangle, pairwise_disjoint

BOUND_DENOMINATOR = 2 ** 64


@dataclass(frozen=True)
class BasisElement:
    """v + h * base, where base is the generator T_index."""

    index: int
    h: Scalar
    v: Point
    base: ConvexPolygon = field(repr=False)

    @property
    def polygon(self) -> ConvexPolygon:
        return translate(homothety(self.base, ORIGIN, self.h), self.v)

    def key(self) -> tuple:
        return (self.index, self.h, self.v.x, self.v.y)


@dataclass(frozen=True)
class MaxFnWitness:
    point: Point
    element: BasisElement
    value: Scalar


def average_over(E: BasisElement, X: Iterable[ConvexPolygon]) -> Scalar:
    P = E.polygon
    a = area(P)
    if a == 0:
        raise ValueError("element has zero area")
    return overlap_area(P, X) / a


def eta_of(e) -> Scalar:
    e = as_scalar(e)
    if e <= 0:
        raise ValueError("e must be positive")
    return min(mpq(1, 4), 1 / (4 * e))


# --- overlap witnesses ----------------------------------------------------------------

def _labeled(tri) -> tuple[Point, Point, Point]:
    A, B, C = (Point.of(*p) for p in tri)
    if (B.x - A.x) * (C.y - A.y) - (B.y - A.y) * (C.x - A.x) == 0:
        raise ValueError("degenerate triangle")
    return A, B, C


def half_copy(tri) -> ConvexPolygon:
    """B + (Delta - A) / 2 for the labeled triangle (A, B, C)."""
    A, B, C = _labeled(tri)
    return triangle(B, B + (C - A).scale(mpq(1, 2)), B + (B - A).scale(mpq(1, 2)))


def worst_point(tri) -> Point:
    """x0 = B + AC / 2, the far corner of the half copy."""
    A, B, C = _labeled(tri)
    return B + (C - A).scale(mpq(1, 2))


def stretched(tri, e) -> ConvexPolygon:
    """The triangle A, B, B + e (C - B)."""
    A, B, C = _labeled(tri)
    return triangle(A, B, B + (C - B).scale(as_scalar(e)))


def overlap_samples(tri, rng: random.Random, count: int = 50, denominator: int = 1 << 16) -> list[Point]:
    """Vertices, edge midpoints and centroid of the half copy, x0, then seeded interior points."""
    A, B, C = _labeled(tri)
    P, Q, R = B, B + (B - A).scale(mpq(1, 2)), B + (C - A).scale(mpq(1, 2))
    half = mpq(1, 2)
    pts = [P, Q, R, (P + Q).scale(half), (Q + R).scale(half), (R + P).scale(half),
           Point((P.x + Q.x + R.x) / 3, (P.y + Q.y + R.y) / 3), worst_point(tri)]
    while len(pts) < count:
        u, w = rng.randint(0, denominator), rng.randint(0, denominator)
        if u + w > denominator:
            u, w = denominator - u, denominator - w
        a, b = mpq(u, denominator), mpq(w, denominator)
        pts.append(P + (Q - P).scale(a) + (R - P).scale(b))
    return pts[:max(count, 8)]


def _witnesses(tri, shape: ConvexPolygon, samples, index: int) -> list[MaxFnWitness]:
    A, B, C = _labeled(tri)
    region = half_copy(tri)
    target = triangle(A, B, C)
    size = area(shape)
    out = []
    for x in samples:
        x = Point.of(*x)
        if not contains_point(region, x):
            raise ValueError(f"sample {x} lies outside the half copy")
        v = x - B
        E = BasisElement(index, mpq(1), v, shape)
        P = E.polygon
        if not contains_point(P, x):
            raise AssertionError("witness element misses its point")
        out.append(MaxFnWitness(x, E, area(intersect(P, target)) / size))
    return out


def overlap_check(tri, samples) -> list[MaxFnWitness]:
    """Witness (x - B) + Delta for each sample x of the half copy; values should be >= 1/4."""
    A, B, C = _labeled(tri)
    return _witnesses(tri, triangle(A, B, C), samples, 0)


def stretched_overlap_check(tri, e, samples) -> list[MaxFnWitness]:
    """Witness (x - B) + T with T = A B (B + e BC); values should be >= eta(e)."""
    return _witnesses(tri, stretched(tri, e), samples, 0)


def region_minimum(tri, shape: ConvexPolygon) -> Scalar:
    """Least overlap ratio over the whole half copy.

    The square root of |K ∩ (L + v)| is concave in v where positive, so on the
    triangle of translations it is smallest at a vertex.
    """
    A, B, C = _labeled(tri)
    K = triangle(A, B, C)
    size = area(shape)
    values = []
    for v in (Point(mpq(0), mpq(0)), (B - A).scale(mpq(1, 2)), (C - A).scale(mpq(1, 2))):
        values.append(area(intersect(K, translate(shape, v))) / size)
    return min(values)


# --- level-set certificates -----------------------------------------------------------

@dataclass(frozen=True)
class CertifiedPart:
    index: int
    polygon: ConvexPolygon
    element_index: int
    element_shift: Point
    min_value: Scalar  # least average over the part, from the vertex translations
    strict: bool       # min_value > threshold


@dataclass(frozen=True)
class LevelSetCertificate:
    threshold: Scalar
    parts: tuple[CertifiedPart, ...]
    certified_measure: Scalar
    convention: str = ">="

    @property
    def polygons(self) -> list[ConvexPolygon]:
        return [p.polygon for p in self.parts]

    @classmethod
    def empty(cls, threshold) -> "LevelSetCertificate":
        return cls(as_scalar(threshold), (), mpq(0))


def level_set_from_perron(tree: PerronTree, family: TriangleFamily, mu0) -> LevelSetCertificate:
    """Certify sum |Delta_k|/4 <= |{M 1_X >= eta(mu0)}|.

    The part (A_{k+1} + s_k) + Delta_k/2 is the half copy of s_k + Delta_k labeled
    apex, A_{k+1}, A_k; the stretched triangle for e = e_{k+1}/(t_k - t_{k+1}) is then
    exactly s_k + T_{k+1}, a translate of a generator.
    """
    mu0 = as_scalar(mu0)
    if family.e is None:
        raise ValueError("family carries no eccentricities")
    threshold = eta_of(mu0)
    parts = []
    for k in tree.indices:
        gap = family.gap(k)
        if not family.e[k] < mu0 * gap:
            raise HypothesisError(f"e_k < mu0 (t_k - t_k+1) fails at k={k}", k)
        ratio = family.e[k + 1] / gap
        if not ratio < mu0:
            raise HypothesisError(f"e_k+1 < mu0 (t_k - t_k+1) fails at k={k}", k)
        s = tree.shifts[k]
        A = Point(mpq(0), s)
        B = Point(mpq(1), family.t[k + 1] + s)
        C = Point(mpq(1), family.t[k] + s)
        shape = stretched((A, B, C), ratio)
        generator = family.basis_triangle(k + 1)
        if translate(generator, (0, s)) != shape:
            raise AssertionError(f"witness shape is not a translate of T_{k + 1}")
        m = region_minimum((A, B, C), shape)
        if m < threshold:
            raise AssertionError(f"part {k}: least average {m} below {threshold}")
        poly = half_triangle(family, k, s, "next")
        if poly != half_copy((A, B, C)):
            raise AssertionError("part does not match the half copy")
        parts.append(CertifiedPart(k, poly, k + 1, Point(mpq(0), s), m, m > threshold))
    ok, pair = pairwise_disjoint([p.polygon for p in parts])
    if not ok:
        raise AssertionError(f"certificate parts overlap: {pair}")
    measure = sum((area(p.polygon) for p in parts), mpq(0))
    if measure * 4 != tree.area_sum:
        raise AssertionError("certified measure differs from a quarter of the triangle areas")
    return LevelSetCertificate(threshold, tuple(parts), measure)


# --- norm bounds -----------------------------------------------------------------------

def _rational_root(x: Scalar, p: Scalar) -> Optional[Scalar]:
    # x ** (1/p) when rational
    u, v = int(p.numerator), int(p.denominator)
    num = gmpy2.mpz(x.numerator) ** v
    den = gmpy2.mpz(x.denominator) ** v
    rn, en = gmpy2.iroot(num, u)
    rd, ed = gmpy2.iroot(den, u)
    return mpq(rn, rd) if en and ed else None


@dataclass(frozen=True)
class NormBound:
    p: Scalar
    eta: Scalar
    epsilon: Scalar
    bound: Scalar           # exact when ``exact``, else a rational just below the true value
    exact: bool
    bound_float: float
    printed_form: float     # eta**p * epsilon**(-1/p), the other normalization

    def to_dict(self) -> dict:
        return {"p": fmt(self.p), "eta": fmt(self.eta), "epsilon": fmt(self.epsilon),
                "bound": fmt(self.bound), "exact": self.exact,
                "bound_decimal": f"{self.bound_float:.12g}", "printed_form_decimal": f"{self.printed_form:.12g}"}


def norm_bound(eta, eps, p) -> NormBound:
    """eta * eps**(-1/p)."""
    eta, eps, p = as_scalar(eta), as_scalar(eps), as_scalar(p)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    if p <= 1:
        raise ValueError("p must exceed 1")
    with mpmath.workprec(160):
        root = mpmath.power(mpmath.mpf(eps.numerator) / eps.denominator, mpmath.mpf(p.denominator) / p.numerator)
        etaf = mpmath.mpf(eta.numerator) / eta.denominator
        val = etaf / root
        printed = mpmath.power(etaf, mpmath.mpf(p.numerator) / p.denominator) / root
        r = _rational_root(eps, p)
        if r is not None:
            bound, exact = eta / r, True
        else:
            bound, exact = mpq(int(mpmath.floor(val * BOUND_DENOMINATOR)) - 1, BOUND_DENOMINATOR), False
        return NormBound(p, eta, eps, bound, exact, float(val), float(printed))


def pnorm_lower_bound(cert: LevelSetCertificate, X_area, p) -> NormBound:
    """Bound from |X| <= eps |{M 1_X >= eta}| with eps = |X| / certified measure."""
    if cert.certified_measure == 0:
        raise ValueError("certificate has zero measure")
    return norm_bound(cert.threshold, as_scalar(X_area) / cert.certified_measure, p)


def tree_norm_bound(eta, eps, p) -> NormBound:
    """eta * (4 eps)**(-1/p): the level set carries a quarter of the triangle mass."""
    return norm_bound(eta, 4 * as_scalar(eps), p)


# --- brute-force oracle ------------------------------------------------------------------

@dataclass(frozen=True)
class Enumeration:
    generators: dict           # index -> ConvexPolygon
    density: int = 4           # dilations j / density
    max_dilation: Scalar = mpq(2)
    barycentric_steps: int = 2
    anchors: tuple = ()        # extra anchor points; X's vertices and midpoints are added

    def dilations(self) -> list[Scalar]:
        top = int(as_scalar(self.max_dilation) * self.density)
        return [mpq(j, self.density) for j in range(1, top + 1)]


def _reference_points(P: ConvexPolygon, steps: int) -> list[Point]:
    V = P.vertices
    out = list(V)
    if steps > 0 and len(V) == 3:
        for i in range(steps + 1):
            for j in range(steps + 1 - i):
                a, b = mpq(i, steps), mpq(j, steps)
                c = 1 - a - b
                out.append(Point(a * V[0].x + b * V[1].x + c * V[2].x, a * V[0].y + b * V[1].y + c * V[2].y))
    return sorted(set(out))


def brute_force_maxfn(x, X: Sequence[ConvexPolygon], enum: Enumeration) -> MaxFnWitness:
    """Best average of 1_X over a finite family of elements containing x."""
    x = Point.of(*x)
    parts = [P for P in X if not P.is_empty]
    verts = sorted({p for P in parts for p in P.vertices})
    anchors = set(verts) | {Point((a.x + b.x) / 2, (a.y + b.y) / 2) for P in parts for a, b in P.edges()}
    anchors |= {Point.of(*a) for a in enum.anchors}
    best: Optional[MaxFnWitness] = None
    for k in sorted(enum.generators):
        T = enum.generators[k]
        refs = _reference_points(T, enum.barycentric_steps)
        for h in enum.dilations():
            shifts = {x - c.scale(h) for c in refs}
            shifts |= {w - c.scale(h) for w in anchors for c in T.vertices}
            for v in sorted(shifts):
                E = BasisElement(k, h, v, T)
                P = E.polygon
                if not contains_point(P, x):
                    continue
                val = overlap_area(P, parts) / area(P)
                if best is None or val > best.value or (val == best.value and E.key() < best.element.key()):
                    best = MaxFnWitness(x, E, val)
    if best is None:
        raise ValueError("enumeration produced no element containing x")
    return best
