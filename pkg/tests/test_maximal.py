import random
from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from perronlab.bases import HypothesisError, IndexedSequence, build_triangle_family
from perronlab.geometry import Point, area, contains_point, intersect, translate, triangle
from perronlab.maximal import (
    BasisElement, Enumeration, average_over, brute_force_maxfn, eta_of, half_copy, overlap_check,
    stretched_overlap_check, overlap_samples, level_set_from_perron, norm_bound, pnorm_lower_bound,
    region_minimum, stretched, tree_norm_bound, worst_point,
)
from perronlab.perron import PerronScale, build_perron_tree, epsilon, optimize_alpha

TRI = ((0, 0), (1, 0), (1, 1))
DELTA = triangle(*TRI)

coords = st.fractions(min_value=-10, max_value=10, max_denominator=40)
triangles = st.tuples(st.tuples(coords, coords), st.tuples(coords, coords), st.tuples(coords, coords)).filter(
    lambda t: (t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) != (t[1][1] - t[0][1]) * (t[2][0] - t[0][0]))


def harmonic_family(k_max=80):
    t = IndexedSequence(1, tuple(mpq(1, k) for k in range(1, k_max + 1)))
    e = IndexedSequence(1, tuple((t[k] - t[k + 1]) / 2 for k in range(1, k_max)))
    return build_triangle_family(t, e)


def test_average_over_examples():
    inside = BasisElement(0, mpq(1, 4), Point(mpq(3, 4), mpq(1, 8)), DELTA)
    assert average_over(inside, [DELTA]) == 1
    away = BasisElement(0, mpq(1), Point(5, 5), DELTA)
    assert average_over(away, [DELTA]) == 0
    shifted = BasisElement(0, mpq(1), Point(mpq(1, 2), mpq(1, 2)), DELTA)
    assert average_over(shifted, [DELTA]) == mpq(1, 4)
    assert area(shifted.polygon) == area(DELTA)
    assert area(BasisElement(0, mpq(3), Point(0, 0), DELTA).polygon) == 9 * area(DELTA)


def test_eta_examples():
    assert eta_of(mpq(1, 2)) == mpq(1, 4)
    assert eta_of(1) == mpq(1, 4)
    assert eta_of(2) == mpq(1, 8)
    with pytest.raises(ValueError):
        eta_of(0)


def test_overlap_examples():
    B = Point(1, 0)
    w = overlap_check(TRI, [B])[0]
    assert w.value == 1 and w.element.polygon == DELTA
    x0 = worst_point(TRI)
    assert x0 == Point(mpq(3, 2), mpq(1, 2))
    assert overlap_check(TRI, [x0])[0].value == mpq(1, 4)
    with pytest.raises(ValueError):
        overlap_check(TRI, [Point(0, 0)])


def test_stretched_overlap_examples():
    x0 = worst_point(TRI)
    assert [w.value for w in stretched_overlap_check(TRI, 1, [x0])] == [w.value for w in overlap_check(TRI, [x0])]
    w = stretched_overlap_check(TRI, 2, [x0])[0]
    T = stretched(TRI, 2)
    assert area(T) == 1
    assert area(intersect(w.element.polygon, DELTA)) == mpq(1, 8) == area(T) / 8
    assert w.value == eta_of(2)


@given(triangles, st.integers(0, 2 ** 32 - 1))
def test_overlap_fuzz(tri, seed):
    samples = overlap_samples(tri, random.Random(seed), 20)
    for w in overlap_check(tri, samples):
        assert w.value >= mpq(1, 4)
        assert contains_point(w.element.polygon, w.point)
    assert region_minimum(tri, triangle(*tri)) == mpq(1, 4)


@given(triangles, st.sampled_from(["1/4", "1/2", "1", "2", "5", "7/3"]), st.integers(0, 2 ** 32 - 1))
def test_stretched_overlap_fuzz(tri, e, seed):
    e = mpq(e)
    for w in stretched_overlap_check(tri, e, overlap_samples(tri, random.Random(seed), 20)):
        assert w.value >= eta_of(e)
    worst = stretched_overlap_check(tri, e, [worst_point(tri)])[0]
    if e <= 1:
        assert worst.value == mpq(1, 4)
    else:
        assert worst.value * area(stretched(tri, e)) >= area(triangle(*tri)) / 4
    assert region_minimum(tri, stretched(tri, e)) >= eta_of(e)


def test_samples_include_worst_point_and_stay_inside():
    samples = overlap_samples(TRI, random.Random(0), 60)
    assert worst_point(TRI) in samples and len(samples) == 60
    H = half_copy(TRI)
    assert all(contains_point(H, x) for x in samples)


def test_level_set_pipeline():
    fam = harmonic_family()
    alpha = optimize_alpha(3, mpq(10, 3)).alpha
    tree = build_perron_tree(fam, PerronScale(alpha, 3, 0))
    cert = level_set_from_perron(tree, fam, 1)
    assert cert.threshold == mpq(1, 4)
    assert cert.certified_measure * 4 == tree.area_sum
    assert len(cert.parts) == 8
    assert tree.area_X / cert.certified_measure <= 4 * epsilon(alpha, 3, mpq(10, 3))
    assert all(p.min_value >= cert.threshold for p in cert.parts)
    for p in cert.parts:
        generator = fam.basis_triangle(p.element_index)
        assert translate(generator, p.element_shift) == stretched(
            ((0, tree.shifts[p.index]), (1, fam.t[p.index + 1] + tree.shifts[p.index]),
             (1, fam.t[p.index] + tree.shifts[p.index])),
            fam.e[p.index + 1] / fam.gap(p.index))


def test_certificate_sample_witnesses_against_whole_union():
    fam = harmonic_family()
    tree = build_perron_tree(fam, PerronScale(mpq(9, 10), 2, 0))
    cert = level_set_from_perron(tree, fam, 1)
    rng = random.Random(3)
    for part in cert.parts:
        for _ in range(5):
            a, b = mpq(rng.randint(0, 100), 100), mpq(rng.randint(0, 100), 100)
            if a + b > 1:
                a, b = 1 - a, 1 - b
            P, Q, R = part.polygon.vertices
            x = P + (Q - P).scale(a) + (R - P).scale(b)
            # translate the generator so its A_{k+1} corner lands on x
            base = Point(mpq(1), fam.t[part.index + 1] + tree.shifts[part.index])
            E = BasisElement(part.element_index, mpq(1), part.element_shift + (x - base),
                             fam.basis_triangle(part.element_index))
            assert contains_point(E.polygon, x)
            assert average_over(E, tree.X) >= cert.threshold


def test_level_set_rejects_broken_hypothesis():
    t = IndexedSequence(1, tuple(mpq(1, k) for k in range(1, 20)))
    e = IndexedSequence(1, tuple(mpq(1) for _ in range(1, 20)))
    fam = build_triangle_family(t, e, 1, 18)
    tree = build_perron_tree(fam, PerronScale(mpq(9, 10), 2, 0))
    with pytest.raises(HypothesisError) as err:
        level_set_from_perron(tree, fam, 1)
    assert err.value.index == 1


def test_norm_bound_examples():
    assert norm_bound(mpq(1, 4), 1, 2).bound == mpq(1, 4)
    assert norm_bound(mpq(1, 3), 1, mpq(3, 2)).bound == mpq(1, 3)
    nb = norm_bound(mpq(1, 4), mpq(1, 16), 2)
    assert nb.bound == 1 and nb.exact
    inexact = norm_bound(mpq(1, 4), mpq(1, 3), 2)
    assert not inexact.exact and float(inexact.bound) <= inexact.bound_float
    assert abs(inexact.bound_float - 0.25 * 3 ** 0.5) < 1e-15
    assert abs(inexact.printed_form - 0.0625 * 3 ** 0.5) < 1e-15
    assert tree_norm_bound(mpq(1, 4), mpq(1, 64), 2).bound == 1


@given(st.fractions(min_value=Fraction(1, 100), max_value=2, max_denominator=100),
       st.fractions(min_value=Fraction(1, 100), max_value=2, max_denominator=100),
       st.sampled_from(["3/2", "2", "4"]))
def test_norm_bound_monotone_in_epsilon(e1, e2, p):
    lo, hi = sorted((mpq(e1.numerator, e1.denominator), mpq(e2.numerator, e2.denominator)))
    assert norm_bound(mpq(1, 4), lo, p).bound_float >= norm_bound(mpq(1, 4), hi, p).bound_float
    assert norm_bound(mpq(1, 4), lo, p).bound >= norm_bound(mpq(1, 4), hi, p).bound


def test_pnorm_from_certificate():
    fam = harmonic_family()
    tree = build_perron_tree(fam, PerronScale(mpq(9, 10), 2, 0))
    cert = level_set_from_perron(tree, fam, 1)
    nb = pnorm_lower_bound(cert, tree.area_X, 2)
    assert nb.epsilon == tree.area_X / cert.certified_measure
    with pytest.raises(ValueError):
        pnorm_lower_bound(type(cert).empty(mpq(1, 4)), 1, 2)


def test_brute_force_examples():
    enum = Enumeration({0: DELTA}, density=4, max_dilation=1, barycentric_steps=2)
    deep = brute_force_maxfn(Point(mpq(3, 4), mpq(1, 4)), [DELTA], enum)
    assert deep.value == 1
    rng = random.Random(5)
    for x in overlap_samples(TRI, rng, 12):
        floor = overlap_check(TRI, [x])[0].value
        got = brute_force_maxfn(x, [DELTA], enum)
        assert floor <= got.value <= 1
        assert contains_point(got.element.polygon, x)


def test_brute_force_refinement_monotone():
    X = [DELTA, translate(DELTA, (mpq(1, 3), mpq(-1, 5)))]
    x = Point(mpq(6, 5), mpq(1, 7))
    coarse = brute_force_maxfn(x, X, Enumeration({0: DELTA}, density=2, max_dilation=2, barycentric_steps=1))
    fine = brute_force_maxfn(x, X, Enumeration({0: DELTA}, density=4, max_dilation=2, barycentric_steps=1))
    assert fine.value >= coarse.value


def test_brute_force_empty_enumeration():
    with pytest.raises(ValueError):
        brute_force_maxfn(Point(0, 0), [DELTA], Enumeration({}))
    with pytest.raises(ValueError):
        brute_force_maxfn(Point(0, 0), [DELTA], Enumeration({0: DELTA}, max_dilation=0))
