import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from outerlp.dyadic import (
    as_array,
    covering_members,
    half_covered,
    in_strip,
    in_tree,
    make_dyadic_discrete,
    maximal_strips,
    random_tile_function,
    strip_intersection,
    strip_tree_intersection,
    structured_measure,
    tile_map,
    tile_norm_comparison,
    tile_volume,
)
from outerlp.space import InputError

J1 = make_dyadic_discrete(1)
J2 = make_dyadic_discrete(2)


def test_generator_values_at_j1():
    sp = J1.space
    assert sp.measure("mu", J1.strip_mask((0, 0))) == 1
    assert sp.measure("nu", J1.tree_mask((0, 0, 0))) == 1
    assert sp.measure("nu", J1.tree_mask((0, 1, 0))) == 2


def test_disjoint_strips_add():
    a, b = J1.strip_mask((0, 0)), J1.strip_mask((1, 0))
    assert a & b == 0
    assert J1.space.measure("mu", a | b) == 2


def test_single_tile_costs_its_home_strip():
    for st_ in (J1, J2):
        for l in range(st_.lmin, st_.J + 1):
            pt = next(p for p in st_.points if p[1] == l)
            assert structured_measure(st_, "mu", 1 << st_.index[pt]) == Fraction(2) ** l
            assert st_.space.measure_dp("mu", 1 << st_.index[pt]) == Fraction(2) ** l


def test_empty_set():
    assert structured_measure(J1, "mu", 0) == 0
    assert structured_measure(J1, "nu", 0) == 0
    with pytest.raises(InputError):
        structured_measure(J1, "omega", 1)


def test_half_covered_adds_parent_of_siblings():
    assert (0, 0) in half_covered([(0, -1), (1, -1)], lmin=-1, lmax=1)
    assert (0, 1) in half_covered([(0, -1), (1, -1)], lmin=-1, lmax=1)


def test_maximal_strips_drop_nested_members():
    assert maximal_strips([(0, 0), (1, -1), (0, -1), (3, -1)]) == {(0, 0), (3, -1)}


def test_covering_members_are_strips():
    for a in (1, 0b1011, J1.space.full):
        for m in covering_members(J1, a):
            assert m in J1.strip_family


@given(st.data())
def test_strip_intersections_are_nested_or_disjoint(data):
    strips = sorted(J2.strips)
    a, b = data.draw(st.sampled_from(strips)), data.draw(st.sampled_from(strips))
    inter = strip_intersection(a, b)
    want = {p for p in J2.points if in_strip(a, p) and in_strip(b, p)}
    got = {p for p in J2.points if inter is not None and in_strip(inter, p)}
    assert got == want


@given(st.data())
def test_strip_tree_intersections_are_trees(data):
    s = data.draw(st.sampled_from(sorted(J2.strips)))
    t = data.draw(st.sampled_from(sorted(J2.trees)))
    inter = strip_tree_intersection(s, t)
    want = {p for p in J2.points if in_strip(s, p) and in_tree(t, p)}
    got = {p for p in J2.points if inter is not None and in_tree(inter, p)}
    assert got == want


def test_generator_values_at_j2():
    sp = J2.space
    for which in ("mu", "nu"):
        for m, v in sp.generators(which):
            assert sp.measure(which, m) == v


@given(st.integers(0, 2**32 - 1))
def test_structured_equals_dp_at_j1(a):
    a &= J1.space.full
    for which in ("mu", "nu"):
        assert structured_measure(J1, which, a) == J1.space.measure_dp(which, a)


def test_structured_equals_dp_on_j2_samples():
    rng = random.Random(1)
    for _ in range(60):
        a = sum(1 << i for i in range(J2.space.n) if rng.random() < 0.1)
        for which in ("mu", "nu"):
            assert structured_measure(J2, which, a) == J2.space.measure_dp(which, a)


def test_tile_map_entry():
    assert tile_volume(0) == Fraction(1, 2)
    assert tile_map({(0, 0, 0): 1.0}, 2.0)[(0, 0, 0)] == pytest.approx(0.5**0.5)
    assert tile_map({}, 2.0) == {}


@pytest.mark.parametrize("seed", range(3))
def test_tile_map_preserves_norms(seed):
    vals = random_tile_function(J1, seed)
    out = tile_norm_comparison(1, vals, 2.0, 2.0, 2.0)
    for a, b in out.values():
        assert a == pytest.approx(b, rel=1e-9)


def test_as_array_rejects_outside_tiles():
    with pytest.raises(InputError):
        as_array(J1, {(99, 0, 0): 1.0})


def test_capacity_and_range():
    with pytest.raises(InputError):
        make_dyadic_discrete(0)
    with pytest.raises(InputError):
        make_dyadic_discrete(4)
