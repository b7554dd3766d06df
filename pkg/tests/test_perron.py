import random
from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from oracles import eps_formula, union_strip_area
from perronlab.bases import IndexedSequence, build_triangle_family, tau_truncated
from perronlab.geometry import area, intersect, union_measure
from perronlab.perron import (
    ALPHA_BOUNDARY_FALLBACK, PerronFailure, PerronScale, build_perron_tree, choose_N,
    doubling_candidates, epsilon, geometric_counterexample_check, half_triangle_witnesses,
    optimize_alpha, random_shifts, verify_tree,
)


def family(values):
    return build_triangle_family(IndexedSequence(1, tuple(values)))


HARMONIC = family([mpq(1, k) for k in range(1, 120)])
ARITH = family([1 - mpq(k, 200) for k in range(1, 120)])
GEOMETRIC = family([mpq(1, 2 ** k) for k in range(1, 40)])


def test_epsilon_examples():
    assert epsilon(mpq(9, 10), 3, mpq(10, 3)) == mpq(531441, 1000000) + mpq(1, 3)
    assert abs(float(epsilon(1 - mpq(1, 10 ** 9), 3, 2)) - 1) < 1e-8
    assert abs(float(epsilon(mpq(1, 2), 60, 2)) - 1) < 1e-12
    with pytest.raises(ValueError):
        epsilon(1, 2, 2)


@given(st.fractions(min_value=Fraction(1, 100), max_value=Fraction(99, 100), max_denominator=100),
       st.fractions(min_value=Fraction(1, 100), max_value=Fraction(99, 100), max_denominator=100),
       st.integers(1, 12), st.fractions(min_value=2, max_value=20, max_denominator=10))
def test_epsilon_convex_in_alpha(a, b, n, tau):
    mid = (a + b) / 2
    q = lambda f: mpq(f.numerator, f.denominator)
    assert 2 * epsilon(q(mid), n, q(tau)) <= epsilon(q(a), n, q(tau)) + epsilon(q(b), n, q(tau))
    assert epsilon(q(a), n, q(tau)) == mpq(eps_formula(a, n, tau).numerator, eps_formula(a, n, tau).denominator)


def test_optimize_alpha_boundary():
    c = optimize_alpha(1, 2)
    assert not c.interior and "increase n" in c.diagnosis
    assert c.alpha == ALPHA_BOUNDARY_FALLBACK


def test_optimize_alpha_interior():
    c = optimize_alpha(10, mpq(10, 3))
    assert c.interior and c.epsilon < mpq(1, 2)
    assert abs(float(c.alpha) - (1 / 6) ** (1 / 19)) < 1e-15
    assert abs(c.search_alpha - float(c.alpha)) < 1e-12
    # nearby rationals do no better
    for d in (mpq(1, 10 ** 6), -mpq(1, 10 ** 6)):
        assert epsilon(c.alpha + d, 10, mpq(10, 3)) >= c.epsilon


def test_optimized_epsilon_decreasing():
    eps = [optimize_alpha(n, mpq(10, 3)).epsilon for n in range(4, 13)]
    assert all(b < a for a, b in zip(eps, eps[1:]))


def test_small_tree_example():
    fam = family([mpq(1, 2), mpq(1, 3), mpq(1, 4)])
    tree = build_perron_tree(fam, PerronScale(mpq(3, 4), 1, 0))
    tau = tau_truncated([mpq(1, 2), mpq(1, 3), mpq(1, 4)], 3).value
    assert tree.tau.value == tau
    assert tree.area_X <= (mpq(9, 16) + tau / 4) * tree.area_sum
    assert tree.area_X == union_measure(tree.X)
    assert tree.area_sum == area(fam.delta(1)) + area(fam.delta(2))


def test_small_tree_is_near_optimal_against_grid_search():
    """Brute-force relative shifts of the second triangle at resolution 1/1024."""
    vals = [mpq(1, 2), mpq(1, 3), mpq(1, 4)]
    tree = build_perron_tree(family(vals), PerronScale(mpq(3, 4), 1, 0))
    t = [float(v) for v in vals]
    base = float(tree.shifts[1])
    step = 1 / 1024
    best = min(union_strip_area([(0.0, t[1], t[0]), (d * step, t[2], t[1])], 1024)
               for d in range(-1024, 1025))
    # the area moves by at most |shift change| and the quadrature error is far below the step
    assert float(tree.area_X) <= best + step
    assert base == 0.0


def test_alpha_near_one_trivially_satisfied_by_zero_shifts():
    fam = family([mpq(1, 2), mpq(1, 3), mpq(1, 4)])
    scale = PerronScale(1 - mpq(1, 1000), 1, 0)
    tree = verify_tree(fam, scale, {1: mpq(0), 2: mpq(0)})
    assert tree.area_X == tree.area_sum <= tree.epsilon_bound * tree.area_sum


@pytest.mark.parametrize("fam,tau", [(HARMONIC, mpq(10, 3)), (ARITH, mpq(2))], ids=["harmonic", "arithmetic"])
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_tree_bounds_hold(fam, tau, n):
    alpha = optimize_alpha(n, tau).alpha
    search = choose_N(fam, alpha, n, doubling_candidates(16))
    tree = search.tree
    assert tree.area_X <= tree.epsilon_bound * tree.area_sum
    assert tree.area_X <= epsilon(alpha, n, tau) * tree.area_sum
    assert tree.disjoint_next_anchor
    parts = half_triangle_witnesses(tree)
    assert len(parts) == 2 ** n
    for k, P in zip(tree.indices, parts):
        assert area(P) * 4 == area(fam.delta(k))
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            assert area(intersect(parts[i], parts[j])) == 0
    assert union_measure(parts) == tree.area_sum / 4


def test_same_anchor_reported():
    tree = build_perron_tree(HARMONIC, PerronScale(mpq(9, 10), 3, 0))
    assert isinstance(tree.disjoint_same_anchor, bool)
    if tree.disjoint_same_anchor:
        half_triangle_witnesses(tree, "same")


def test_arithmetic_ratio_within_bound_and_decreasing():
    ratios = []
    for n in range(2, 7):
        alpha = optimize_alpha(n, 2).alpha
        tree = build_perron_tree(ARITH, PerronScale(alpha, n, 0))
        assert tree.area_X <= (alpha ** (2 * n) + 2 * (1 - alpha)) * tree.area_sum
        ratios.append(tree.ratio)
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


def test_construction_is_deterministic():
    a = build_perron_tree(HARMONIC, PerronScale(mpq(9, 10), 4, 1))
    b = build_perron_tree(HARMONIC, PerronScale(mpq(9, 10), 4, 1))
    assert a.shifts == b.shifts and a.area_X == b.area_X and a.stage_choices == b.stage_choices


def test_choose_N_arithmetic_starts_at_zero():
    alpha = optimize_alpha(3, 2).alpha
    assert choose_N(ARITH, alpha, 3).N == 0


def test_choose_N_harmonic_pinned():
    search = choose_N(HARMONIC, mpq(9, 10), 3, doubling_candidates(16))
    assert search.N == 0
    assert search.tree.area_X <= search.tree.epsilon_bound * search.tree.area_sum
    assert search.transcript[-1]["ok"]


def test_choose_N_geometric_cannot_halve():
    search = choose_N(GEOMETRIC, mpq(9, 10), 3, doubling_candidates(16), target=mpq(1, 2))
    assert not search.succeeded
    assert len(search.transcript) == len(doubling_candidates(16))
    assert all(entry["ok"] is False for entry in search.transcript)


def test_choose_N_rejects_unsorted_candidates():
    with pytest.raises(ValueError):
        choose_N(ARITH, mpq(1, 2), 1, [2, 1])


def test_corrupted_shifts_fail_loudly():
    tree = build_perron_tree(ARITH, PerronScale(optimize_alpha(3, 2).alpha, 3, 0))
    with pytest.raises(PerronFailure) as err:
        verify_tree(ARITH, tree.scale, {k: mpq(0) for k in tree.indices})
    assert err.value.diagnostics["failed"] == "area_bound"


def test_order_violation_detected():
    tree = build_perron_tree(ARITH, PerronScale(mpq(9, 10), 2, 0))
    shifts = dict(tree.shifts.shifts)
    t = ARITH.t
    shifts[4] = t[2] + shifts[1] - t[5]  # last base point lands on the first one
    with pytest.raises(PerronFailure) as err:
        verify_tree(ARITH, PerronScale(mpq(999, 1000), 2, 0), shifts)
    assert err.value.diagnostics["failed"] == "disjointness"


def test_range_failure_is_structured():
    with pytest.raises(PerronFailure) as err:
        build_perron_tree(family([mpq(1, k) for k in range(1, 6)]), PerronScale(mpq(1, 2), 3, 0))
    assert err.value.diagnostics["failed"] == "range"


def test_geometric_counterexample_examples():
    I = [1, 2, 3]
    r = geometric_counterexample_check(GEOMETRIC, I, {})
    assert r.holds and r.area_X == r.union_area
    assert r.first_area == mpq(1, 8)
    assert r.union_area == (mpq(1, 2) - mpq(1, 16)) / 2
    rng = random.Random(7)
    for _ in range(100):
        assert geometric_counterexample_check(GEOMETRIC, I, random_shifts(I, rng)).holds
