"""Exact rational plane geometry: points, convex polygons, unions and their measures.

Every coordinate is a ``gmpy2.mpq``; no floating point enters any measure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from gmpy2 import mpq

Scalar = type(mpq(0))

ZERO = mpq(0)
ONE = mpq(1)
HALF = mpq(1, 2)


def as_scalar(value) -> Scalar:
    """Coerce ints, Fractions, mpq and "p/q" strings to an exact rational.

    Floats are accepted only if they are exactly representable, which they always
    are; their binary expansion is kept verbatim.
    """
    if isinstance(value, Scalar):
        return value
    if isinstance(value, str):
        try:
            return mpq(value.strip())
        except ValueError as exc:
            raise ValueError(f"not an exact rational: {value!r}") from exc
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    return mpq(value)


def fmt(value) -> str:
    """Render an exact rational as "p/q" (or "p" for integers)."""
    return str(as_scalar(value))


class Point(NamedTuple):
    x: Scalar
    y: Scalar

    @classmethod
    def of(cls, x, y) -> "Point":
        return cls(as_scalar(x), as_scalar(y))

    def __add__(self, other):  # type: ignore[override]
        return Point(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Point(self.x - other[0], self.y - other[1])

    def scale(self, h) -> "Point":
        return Point(self.x * h, self.y * h)


ORIGIN = Point(ZERO, ZERO)


def cross(o, a, b) -> Scalar:
    """Twice the signed area of triangle o, a, b (positive when counter-clockwise)."""
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull(points: Iterable[Sequence]) -> list[Point]:
    # Andrew's monotone chain; strict turns only, so collinear points are dropped.
    pts = sorted({Point(as_scalar(p[0]), as_scalar(p[1])) for p in points})
    if len(pts) < 3:
        return []
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return hull if len(hull) >= 3 else []


@dataclass(frozen=True)
class ConvexPolygon:
    """A convex polygon stored counter-clockwise from its lexicographically least vertex.

    Construct through :meth:`of`, which takes the convex hull of the given points,
    merges collinear chains and maps degenerate input to the empty polygon.
    """

    vertices: tuple[Point, ...]

    @classmethod
    def of(cls, points: Iterable[Sequence]) -> "ConvexPolygon":
        return cls(tuple(_hull(points)))

    @classmethod
    def empty(cls) -> "ConvexPolygon":
        return cls(())

    @classmethod
    def _trusted(cls, vertices: Sequence[Point]) -> "ConvexPolygon":
        # caller guarantees canonical order (e.g. image of a canonical polygon under
        # a translation or positive homothety, both of which keep the lexicographic minimum)
        return cls(tuple(vertices))

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    def __len__(self) -> int:
        return len(self.vertices)

    def edges(self):
        v = self.vertices
        return zip(v, v[1:] + v[:1])

    def bbox(self) -> tuple[Scalar, Scalar, Scalar, Scalar]:
        xs = [p.x for p in self.vertices]
        ys = [p.y for p in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def centroid(self) -> Point:
        """Vertex average; always an interior point of a nonempty polygon."""
        n = len(self.vertices)
        return Point(sum((p.x for p in self.vertices), ZERO) / n,
                     sum((p.y for p in self.vertices), ZERO) / n)

    def to_strings(self) -> list[list[str]]:
        return [[fmt(p.x), fmt(p.y)] for p in self.vertices]

    @classmethod
    def from_strings(cls, rows) -> "ConvexPolygon":
        return cls.of([(as_scalar(x), as_scalar(y)) for x, y in rows])


def polygon(*points) -> ConvexPolygon:
    return ConvexPolygon.of(points)


def triangle(a, b, c) -> ConvexPolygon:
    return ConvexPolygon.of((a, b, c))


def area(P: ConvexPolygon) -> Scalar:
    v = P.vertices
    if not v:
        return ZERO
    s = ZERO
    for (x0, y0), (x1, y1) in P.edges():
        s += x0 * y1 - x1 * y0
    return s / 2


def translate(P: ConvexPolygon, v) -> ConvexPolygon:
    dx, dy = as_scalar(v[0]), as_scalar(v[1])
    return ConvexPolygon._trusted([Point(p.x + dx, p.y + dy) for p in P.vertices])


def homothety(P: ConvexPolygon, center, ratio) -> ConvexPolygon:
    h = as_scalar(ratio)
    if h <= 0:
        raise ValueError(f"homothety ratio must be positive, got {h}")
    cx, cy = as_scalar(center[0]), as_scalar(center[1])
    return ConvexPolygon._trusted(
        [Point(cx + h * (p.x - cx), cy + h * (p.y - cy)) for p in P.vertices])


def contains_point(P: ConvexPolygon, x) -> bool:
    """Closed containment."""
    if P.is_empty:
        return False
    return all(cross(a, b, x) >= 0 for a, b in P.edges())


def contains_polygon(outer: ConvexPolygon, inner: ConvexPolygon) -> bool:
    """True when ``inner`` lies in the closed region of ``outer`` (vertex test, exact)."""
    return all(contains_point(outer, p) for p in inner.vertices)


def intersect(P: ConvexPolygon, Q: ConvexPolygon) -> ConvexPolygon:
    """Exact convex intersection by Sutherland-Hodgman clipping."""
    if P.is_empty or Q.is_empty:
        return ConvexPolygon.empty()
    px0, py0, px1, py1 = P.bbox()
    qx0, qy0, qx1, qy1 = Q.bbox()
    if px1 <= qx0 or qx1 <= px0 or py1 <= qy0 or qy1 <= py0:
        return ConvexPolygon.empty()
    out = list(P.vertices)
    for a, b in Q.edges():
        if not out:
            break
        src, out = out, []
        prev = src[-1]
        sp = cross(a, b, prev)
        for cur in src:
            sc = cross(a, b, cur)
            if sc >= 0:
                if sp < 0:
                    out.append(_cut(prev, cur, sp, sc))
                out.append(cur)
            elif sp >= 0:
                if sp > 0:
                    out.append(_cut(prev, cur, sp, sc))
            prev, sp = cur, sc
    return ConvexPolygon.of(out)


def _cut(p, q, sp, sq) -> Point:
    u = sp / (sp - sq)
    return Point(p[0] + u * (q[0] - p[0]), p[1] + u * (q[1] - p[1]))


@dataclass(frozen=True)
class PolygonUnion:
    """A finite union of convex polygons; overlaps are allowed."""

    parts: tuple[ConvexPolygon, ...]

    @classmethod
    def of(cls, parts: Iterable[ConvexPolygon]) -> "PolygonUnion":
        return cls(tuple(parts))

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)


def _edge_lines(P: ConvexPolygon):
    # side(p) = A*x + B*y + C equals cross(a, b, p) for the directed edge a -> b
    lines = []
    for a, b in P.edges():
        A = a.y - b.y
        B = b.x - a.x
        lines.append((A, B, -(A * a.x + B * a.y), B, -A))
    return lines


def union_measure(U: Iterable[ConvexPolygon]) -> Scalar:
    """Exact Lebesgue measure of a union of convex polygons.

    Uses the boundary form of the area: each edge contributes the part of it that
    lies on the boundary of the union. An edge piece inside another polygon's
    interior is dropped; a piece running along another polygon's edge is dropped
    when the two edges point in opposite directions (the interface is interior to
    the union) and kept only once when they coincide in direction.
    """
    polys = [P for P in U if not P.is_empty]
    if not polys:
        return ZERO
    if len(polys) == 1:
        return area(polys[0])
    boxes = [P.bbox() for P in polys]
    lines = [_edge_lines(P) for P in polys]
    total = ZERO
    for i, P in enumerate(polys):
        bx0, by0, bx1, by1 = boxes[i]
        others = [j for j, (x0, y0, x1, y1) in enumerate(boxes)
                  if j != i and x0 < bx1 and bx0 < x1 and y0 < by1 and by0 < y1]
        for a, b in P.edges():
            ex0, ex1 = (a.x, b.x) if a.x <= b.x else (b.x, a.x)
            ey0, ey1 = (a.y, b.y) if a.y <= b.y else (b.y, a.y)
            dx, dy = b.x - a.x, b.y - a.y
            covered = []
            for j in others:
                x0, y0, x1, y1 = boxes[j]
                if x1 < ex0 or ex1 < x0 or y1 < ey0 or ey1 < y0:
                    continue
                lo, hi = ZERO, ONE
                collinear = 0
                for A, B, C, ux, uy in lines[j]:
                    fa = A * a.x + B * a.y + C
                    fb = A * b.x + B * b.y + C
                    if fa >= 0 and fb >= 0:
                        if fa == 0 and fb == 0:
                            collinear = 1 if ux * dx + uy * dy > 0 else -1
                        continue
                    if fa < 0 and fb < 0:
                        lo = hi
                        break
                    r = fa / (fa - fb)
                    if fa < 0:
                        if r > lo:
                            lo = r
                    elif r < hi:
                        hi = r
                    if lo >= hi:
                        break
                if lo >= hi:
                    continue
                if collinear == 1 and j > i:
                    continue
                covered.append((lo, hi))
            free = _free_length(covered)
            if free:
                total += free * (a.x * b.y - b.x * a.y)
    return total / 2


def _free_length(intervals) -> Scalar:
    if not intervals:
        return ONE
    intervals.sort()
    free = ZERO
    reach = ZERO
    for lo, hi in intervals:
        if lo > reach:
            free += lo - reach
        if hi > reach:
            reach = hi
    if reach < ONE:
        free += ONE - reach
    return free


def overlap_area(P: ConvexPolygon, X: Iterable[ConvexPolygon]) -> Scalar:
    """|P ∩ X| for a convex P and a union X."""
    return union_measure(intersect(P, Q) for Q in X)
