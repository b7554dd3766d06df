"""Orientation/eccentricity sequences, the thin-triangle families built from them,
rectangle generators of B_{a,b}, the comparability functional tau and the
good/bad classifier."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import gmpy2
import mpmath
from gmpy2 import mpq

from .geometry import (
    ConvexPolygon, Point, Scalar, ORIGIN, area, as_scalar, contains_polygon, fmt,
    homothety, translate, triangle,
)

DEFAULT_SNAP_BOUND = 2 ** 64
WORKING_PRECISION = 128  # bits


class BasisError(ValueError):
    """Raised when a sequence or basis violates a stated hypothesis."""


class SnapError(BasisError):
    pass


class HypothesisError(BasisError):
    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


# --- sequences -----------------------------------------------------------------

def parse_scale(text) -> tuple[int, Scalar]:
    """Split a scale like "pi/4", "pi*3/2", "pi" or "5/7" into (power of pi, rational)."""
    s = str(text).replace(" ", "")
    if s.startswith("pi"):
        rest = s[2:]
        if not rest:
            return 1, mpq(1)
        if rest.startswith("/"):
            return 1, 1 / as_scalar(rest[1:])
        if rest.startswith("*"):
            return 1, as_scalar(rest[1:])
        raise ValueError(f"bad scale {text!r}")
    return 0, as_scalar(s)


def _exact_power(k: int, exponent: Scalar) -> Optional[Scalar]:
    # k**exponent when it is rational, else None
    p, q = int(exponent.numerator), int(exponent.denominator)
    base = gmpy2.mpz(k) ** abs(p)
    root, exact = gmpy2.iroot(base, q)
    if not exact:
        return None
    return mpq(root) if p >= 0 else mpq(1, root)


def snap(x: mpmath.mpf, bound: int) -> Scalar:
    """Round a high-precision real to the grid of multiples of 1/bound."""
    with mpmath.workprec(WORKING_PRECISION):
        return mpq(int(mpmath.nint(x * bound)), bound)


@dataclass(frozen=True)
class SequenceSpec:
    """How to produce t_k or e_k for k in [k_min, k_max].

    kind is one of ``power_law`` (scale / k**exponent, optionally passed through
    tan), ``geometric`` (ratio**k) or ``explicit`` (values listed from k_min).
    """

    kind: str
    k_min: int = 1
    k_max: int = 16
    exponent: Scalar = mpq(1)
    scale: str = "1"
    tangent: bool = False
    ratio: Scalar = mpq(1, 2)
    values: tuple[Scalar, ...] = ()
    snap_bound: int = DEFAULT_SNAP_BOUND
    decreasing: bool = True

    def __post_init__(self):
        if self.kind not in ("power_law", "geometric", "explicit"):
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        object.__setattr__(self, "exponent", as_scalar(self.exponent))
        object.__setattr__(self, "ratio", as_scalar(self.ratio))
        object.__setattr__(self, "values", tuple(as_scalar(v) for v in self.values))
        if self.kind == "explicit":
            object.__setattr__(self, "k_max", self.k_min + len(self.values) - 1)
        if self.k_min < 1 or self.k_max < self.k_min:
            raise ValueError(f"bad index range [{self.k_min}, {self.k_max}]")
        if self.snap_bound < 1:
            raise ValueError("snap bound must be positive")

    @classmethod
    def power_law(cls, exponent, scale="1", k_max=16, k_min=1, tangent=False, **kw):
        return cls("power_law", k_min=k_min, k_max=k_max, exponent=exponent,
                   scale=str(scale), tangent=tangent, **kw)

    @classmethod
    def geometric(cls, ratio, k_max=16, k_min=1, **kw):
        return cls("geometric", k_min=k_min, k_max=k_max, ratio=ratio, **kw)

    @classmethod
    def explicit(cls, values, k_min=1, **kw):
        return cls("explicit", k_min=k_min, values=tuple(values), **kw)

    def with_range(self, k_min: int, k_max: int) -> "SequenceSpec":
        if self.kind == "explicit":
            raise ValueError("explicit sequences carry their own range")
        return _replace(self, k_min=k_min, k_max=k_max)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "range": [self.k_min, self.k_max],
             "snap_bound": self.snap_bound, "decreasing": self.decreasing}
        if self.kind == "power_law":
            d.update(exponent=fmt(self.exponent), scale=self.scale, tangent=self.tangent)
        elif self.kind == "geometric":
            d.update(ratio=fmt(self.ratio))
        else:
            d.update(values=[fmt(v) for v in self.values])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SequenceSpec":
        k_min, k_max = d.get("range", [1, 16])
        common = dict(k_min=int(k_min), snap_bound=int(d.get("snap_bound", DEFAULT_SNAP_BOUND)),
                      decreasing=bool(d.get("decreasing", True)))
        kind = d["kind"]
        if kind == "power_law":
            return cls("power_law", k_max=int(k_max), exponent=as_scalar(d.get("exponent", "1")),
                       scale=str(d.get("scale", "1")), tangent=bool(d.get("tangent", False)), **common)
        if kind == "geometric":
            return cls("geometric", k_max=int(k_max), ratio=as_scalar(d["ratio"]), **common)
        if kind == "explicit":
            return cls("explicit", values=tuple(as_scalar(v) for v in d["values"]), **common)
        raise ValueError(f"unknown sequence kind {kind!r}")


def _replace(obj, **changes):
    import dataclasses
    return dataclasses.replace(obj, **changes)


@dataclass(frozen=True)
class IndexedSequence:
    """Exact values v_k for k = k_min .. k_min + len(values) - 1."""

    k_min: int
    values: tuple[Scalar, ...]
    max_snap_error: Scalar = mpq(0)
    snapped: bool = False

    @property
    def k_max(self) -> int:
        return self.k_min + len(self.values) - 1

    def __getitem__(self, k: int) -> Scalar:
        if not self.k_min <= k <= self.k_max:
            raise IndexError(f"index {k} outside [{self.k_min}, {self.k_max}]")
        return self.values[k - self.k_min]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[Scalar]:
        return iter(self.values)

    def indices(self) -> range:
        return range(self.k_min, self.k_max + 1)


def eval_sequence(spec: SequenceSpec) -> IndexedSequence:
    ks = range(spec.k_min, spec.k_max + 1)
    err = mpq(0)
    snapped = False
    if spec.kind == "explicit":
        vals = list(spec.values)
    elif spec.kind == "geometric":
        vals = [spec.ratio ** k for k in ks]
    else:
        pi_pow, coeff = parse_scale(spec.scale)
        vals = []
        for k in ks:
            power = _exact_power(k, spec.exponent)
            if pi_pow == 0 and not spec.tangent and power is not None:
                vals.append(coeff / power)
                continue
            with mpmath.workprec(WORKING_PRECISION):
                x = mpmath.mpf(coeff.numerator) / coeff.denominator
                if pi_pow:
                    x *= mpmath.pi
                x /= mpmath.power(k, mpmath.mpf(spec.exponent.numerator) / spec.exponent.denominator)
                if spec.tangent:
                    x = mpmath.tan(x)
                v = snap(x, spec.snap_bound)
                e = abs(mpmath.mpf(v.numerator) / v.denominator - x)
                err = max(err, mpq(int(mpmath.ceil(e * 2 ** 96)), 2 ** 96))
            snapped = True
            vals.append(v)
    if spec.decreasing:
        for i in range(1, len(vals)):
            if not vals[i] < vals[i - 1]:
                raise SnapError(
                    f"sequence not strictly decreasing at k={spec.k_min + i}"
                    + ("; raise the snap bound" if snapped else ""))
        if vals and vals[-1] <= 0:
            raise SnapError("orientation sequence must stay positive")
    return IndexedSequence(spec.k_min, tuple(vals), err, snapped)


# --- tau -------------------------------------------------------------------------

@dataclass(frozen=True)
class TauEstimate:
    value: Scalar
    K: int
    argmax: tuple[int, int]


def tau_summand(t, k: int, l: int) -> Scalar:
    """The two-term ratio for indices (k, l); ``t`` is indexed from 1."""
    a = t[k + 2 * l - 1] - t[k + l - 1]
    b = t[k + l - 1] - t[k - 1]
    return a / b + b / a


def tau_truncated(t, K: int) -> TauEstimate:
    """Exact sup of the comparability ratio over 1 <= l <= k, k + 2l <= K.

    ``t`` lists t_1, t_2, ... (strictly decreasing, at least K terms).
    """
    if K < 3:
        raise BasisError("no admissible (k, l) pair: need K >= 3")
    if len(t) < K:
        raise BasisError(f"need {K} terms, got {len(t)}")
    t = [as_scalar(v) for v in t[:K]]
    for i in range(1, K):
        if not t[i] < t[i - 1]:
            raise BasisError(f"sequence not strictly decreasing at k={i + 1}")
    best = None
    arg = (0, 0)
    for k in range(1, K):
        for l in range(1, min(k, (K - k) // 2) + 1):
            v = tau_summand(t, k, l)
            if best is None or v > best:
                best, arg = v, (k, l)
    if best is None:
        raise BasisError("no admissible (k, l) pair")
    return TauEstimate(best, K, arg)


# --- bases and triangle families -------------------------------------------------

@dataclass(frozen=True)
class BasisSpec:
    t: SequenceSpec
    e: SequenceSpec
    mu0: Optional[Scalar] = None
    C: Optional[Scalar] = None
    label: str = ""

    def __post_init__(self):
        if self.mu0 is not None:
            object.__setattr__(self, "mu0", as_scalar(self.mu0))
        if self.C is not None:
            object.__setattr__(self, "C", as_scalar(self.C))

    def with_range(self, k_min: int, k_max: int) -> "BasisSpec":
        return _replace(self, t=self.t.with_range(k_min, k_max), e=self.e.with_range(k_min, k_max))

    def evaluate(self) -> tuple[IndexedSequence, IndexedSequence]:
        return eval_sequence(self.t), eval_sequence(self.e)

    def to_dict(self) -> dict:
        d = {"label": self.label, "t": self.t.to_dict(), "e": self.e.to_dict()}
        if self.mu0 is not None:
            d["mu0"] = fmt(self.mu0)
        if self.C is not None:
            d["C"] = fmt(self.C)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BasisSpec":
        return cls(SequenceSpec.from_dict(d["t"]), SequenceSpec.from_dict(d["e"]),
                   mu0=d.get("mu0"), C=d.get("C"), label=d.get("label", ""))


def ab_basis(a, b, k_max: int = 64, k_min: int = 1, snap_bound: int = DEFAULT_SNAP_BOUND) -> BasisSpec:
    """Generators of B_{a,b}: eccentricity 1/n^a, orientation tangent tan(pi/(4 n^b))."""
    a, b = as_scalar(a), as_scalar(b)
    if a <= 0 or b <= 0:
        raise BasisError("a and b must be positive")
    t = SequenceSpec.power_law(b, "pi/4", k_min=k_min, k_max=k_max, tangent=True, snap_bound=snap_bound)
    e = SequenceSpec.power_law(a, "1", k_min=k_min, k_max=k_max, snap_bound=snap_bound, decreasing=False)
    return BasisSpec(t, e, label=f"B_{{{fmt(a)},{fmt(b)}}}")


def check_domination(t: IndexedSequence, e: IndexedSequence, C) -> None:
    C = as_scalar(C)
    for k in t.indices():
        if k in e.indices() and t[k] > C * e[k]:
            raise HypothesisError(f"t_k <= C e_k fails at k={k}", k)


def check_gap_hypothesis(t: IndexedSequence, e: IndexedSequence, mu0, ks) -> None:
    mu0 = as_scalar(mu0)
    for k in ks:
        if not e[k] < mu0 * (t[k] - t[k + 1]):
            raise HypothesisError(f"e_k < mu0 (t_k - t_k+1) fails at k={k}", k)


@dataclass(frozen=True)
class TriangleFamily:
    """Thin triangles Delta_k = O A_k A_{k+1} and basis triangles T_k = O A_k E_k."""

    t: IndexedSequence
    e: Optional[IndexedSequence]
    k_min: int
    k_max: int
    deltas: dict = field(repr=False)
    basis_triangles: dict = field(repr=False)

    def delta(self, k: int) -> ConvexPolygon:
        return self.deltas[k]

    def basis_triangle(self, k: int) -> ConvexPolygon:
        return self.basis_triangles[k]

    def gap(self, k: int) -> Scalar:
        return self.t[k] - self.t[k + 1]

    def indices(self) -> range:
        return range(self.k_min, self.k_max + 1)


def A_point(t, k) -> Point:
    return Point(mpq(1), t[k])


def build_triangle_family(t: IndexedSequence, e: Optional[IndexedSequence] = None,
                          k_min: Optional[int] = None, k_max: Optional[int] = None) -> TriangleFamily:
    """Delta_k for k in [k_min, k_max] (needs t_{k+1}); T_k wherever e_k is available."""
    k_min = t.k_min if k_min is None else k_min
    k_max = t.k_max - 1 if k_max is None else k_max
    if k_min < t.k_min or k_max + 1 > t.k_max:
        raise BasisError(f"t covers [{t.k_min}, {t.k_max}], need [{k_min}, {k_max + 1}]")
    for k in range(k_min, k_max + 1):
        if not t[k + 1] < t[k]:
            raise BasisError(f"t not strictly decreasing at k={k + 1}")
    deltas = {k: triangle(ORIGIN, A_point(t, k), A_point(t, k + 1)) for k in range(k_min, k_max + 1)}
    tris = {}
    if e is not None:
        for k in e.indices():
            if t.k_min <= k <= t.k_max:
                tris[k] = triangle(ORIGIN, A_point(t, k), Point(mpq(1), t[k] + e[k]))
    return TriangleFamily(t, e, k_min, k_max, deltas, tris)


# --- rectangles ------------------------------------------------------------------

@dataclass(frozen=True)
class Rectangle:
    """Rectangle with long side along (1, tangent) and eccentricity ``eccentricity``.

    Corners are a*(1, t) + b*(-t, 1) for a in [0, length], b in [0, e*length];
    all corners are rational even though side lengths are not.
    """

    index: int
    tangent: Scalar
    eccentricity: Scalar
    length: Scalar = mpq(1)
    origin: Point = ORIGIN

    @property
    def polygon(self) -> ConvexPolygon:
        return _frame_box(self.tangent, self.origin, self.length, self.eccentricity * self.length)

    @property
    def side_ratio(self) -> Scalar:
        # both sides carry the same factor sqrt(1 + t^2), so the ratio is exact
        return (self.eccentricity * self.length) / self.length


def _frame_point(t, origin, a, b) -> Point:
    return Point(origin.x + a - b * t, origin.y + a * t + b)


def _frame_box(t, origin, a_len, b_len) -> ConvexPolygon:
    return ConvexPolygon.of([_frame_point(t, origin, a, b)
                             for a in (mpq(0), a_len) for b in (mpq(0), b_len)])


def rectangle_generator(a, b, n: int, snap_bound: int = DEFAULT_SNAP_BOUND) -> Rectangle:
    """R_n of B_{a,b} with unit long-side vector (1, t_n)."""
    t, e = ab_basis(a, b, k_min=n, k_max=n, snap_bound=snap_bound).evaluate()
    return Rectangle(n, t[n], e[n])


@dataclass(frozen=True)
class Sandwich:
    triangle: ConvexPolygon
    outer_rect: ConvexPolygon      # element of R_k's basis containing the triangle
    rect_shift: Point              # rect_shift + outer_rect/16 lies inside the triangle
    rect: ConvexPolygon            # R_k itself
    outer_triangle: ConvexPolygon  # element of T_k's basis containing R_k
    triangle_shift: Point          # triangle_shift + outer_triangle/16 lies inside R_k


def rect_triangle_sandwich(t, e, index: int = 0) -> Sandwich:
    """Two-sided 1/16 comparison between T = O A E (A=(1,t), E=(1,t+e)) and the
    rectangle of tangent t and eccentricity e. Every containment is checked exactly.
    """
    t, e = as_scalar(t), as_scalar(e)
    T = triangle(ORIGIN, (1, t), (1, t + e))
    s2 = 1 + t * t
    # T in the (a, b) frame: (0,0), (1,0), (L, e/s2) with L = 1 + t e / s2
    L = 1 + t * e / s2
    outer_rect = _frame_box(t, ORIGIN, L, e * L)
    rect_shift = _frame_point(t, ORIGIN, 1 - L / 16, mpq(0))
    small_rect = translate(homothety(outer_rect, ORIGIN, mpq(1, 16)), rect_shift)

    R = _frame_box(t, ORIGIN, mpq(1), e)
    h = 1 + s2 * L
    w = _frame_point(t, ORIGIN, -(h - 1), mpq(0))
    outer_tri = translate(homothety(T, ORIGIN, h), w)
    tri_shift = Point(-w.x / 16, -w.y / 16)
    small_tri = translate(homothety(outer_tri, ORIGIN, mpq(1, 16)), tri_shift)

    checks = {
        "T in outer_rect": contains_polygon(outer_rect, T),
        "rect/16 in T": contains_polygon(T, small_rect),
        "R in outer_triangle": contains_polygon(outer_tri, R),
        "triangle/16 in R": contains_polygon(R, small_tri),
    }
    bad = [name for name, ok in checks.items() if not ok]
    if bad:
        raise AssertionError(f"sandwich containment failed for index {index}: {bad}")
    return Sandwich(T, outer_rect, rect_shift, R, outer_tri, tri_shift)


@dataclass(frozen=True)
class AxisCover:
    rect: ConvexPolygon
    cover: ConvexPolygon
    ratio: Scalar
    bound: Scalar


def axis_cover(R: Rectangle, C) -> AxisCover:
    """Axis-parallel box P containing R with |P| <= 8(1 + C)|R|."""
    C = as_scalar(C)
    if R.tangent > C * R.eccentricity:
        raise HypothesisError(f"t_k <= C e_k fails at k={R.index}", R.index)
    poly = R.polygon
    x0, y0, x1, y1 = poly.bbox()
    P = ConvexPolygon.of([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    ratio = area(P) / area(poly)
    bound = 8 * (1 + C)
    if not contains_polygon(P, poly) or ratio > bound:
        raise AssertionError(f"axis cover failed for index {R.index}: ratio {ratio}")
    return AxisCover(poly, P, ratio, bound)


# --- classification --------------------------------------------------------------

@dataclass(frozen=True)
class Classification:
    a: Scalar
    b: Scalar
    verdict: str          # "Good" | "Bad"
    regime: str           # "domination" | "direct" | "subsequence"
    C: Optional[Scalar] = None
    mu0: Optional[Scalar] = None
    ell0: Optional[int] = None
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = {"a": fmt(self.a), "b": fmt(self.b), "verdict": self.verdict, "regime": self.regime,
             "warnings": list(self.warnings)}
        if self.C is not None:
            d["C"] = fmt(self.C)
        if self.mu0 is not None:
            d["mu0"] = fmt(self.mu0)
        if self.ell0 is not None:
            d["ell0"] = self.ell0
        return d


def gap_constant(b) -> Scalar:
    """Integer mu0 with 1/n^a < mu0 (t_n - t_{n+1}) for every n whenever a >= b + 1.

    tan' >= 1 and the mean value theorem give t_n - t_{n+1} >= (pi/4) b (n+1)^(-b-1),
    and (n+1)/n <= 2, so any mu0 > 2^(b+3) / (pi b) works.
    """
    b = as_scalar(b)
    with mpmath.workprec(WORKING_PRECISION):
        bf = mpmath.mpf(b.numerator) / b.denominator
        c = mpmath.power(2, bf + 3) / (mpmath.pi * bf)
        return mpq(int(mpmath.floor(c)) + 1)


def minimal_ell(a, b) -> int:
    """Smallest positive integer l with l (a - b) > 1."""
    d = as_scalar(a) - as_scalar(b)
    if d <= 0:
        raise BasisError("subsequence regime needs a > b")
    return int(gmpy2.floor(1 / d)) + 1


def classify_ab(a, b) -> Classification:
    a, b = as_scalar(a), as_scalar(b)
    if a <= 0 or b <= 0:
        raise BasisError("a and b must be positive")
    if a <= b:
        warnings = ("boundary a == b: good via domination, stated only for a < b",) if a == b else ()
        # tan x <= 4x/pi on [0, pi/4] gives t_n <= n^-b <= n^-a, so C = 1
        return Classification(a, b, "Good", "domination", C=mpq(1), warnings=warnings)
    if a >= b + 1:
        return Classification(a, b, "Bad", "direct", mu0=gap_constant(b))
    ell = minimal_ell(a, b)
    return Classification(a, b, "Bad", "subsequence", mu0=gap_constant(ell * b), ell0=ell)


def subsequence_basis(a, b, ell: int, k_max: int = 64, snap_bound: int = DEFAULT_SNAP_BOUND) -> BasisSpec:
    """B_{ell a, ell b}; its n-th generator is the (n**ell)-th generator of B_{a,b}."""
    if int(ell) != ell or ell < 1:
        raise BasisError("ell must be a positive integer")
    a, b = as_scalar(a), as_scalar(b)
    return ab_basis(ell * a, ell * b, k_max=k_max, snap_bound=snap_bound)
