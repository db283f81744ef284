from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import spaces
from outerlp.oracle import cover_values
from outerlp.settings import make_counterexample_first
from outerlp.space import (
    CapacityError,
    FiniteSpace,
    InputError,
    build_measure_table,
    caratheodory_check,
    caratheodory_constant,
    iter_submasks,
    make_space,
    outer_measure,
    random_space,
    singletons,
)


def test_empty_set_has_measure_zero():
    sp = random_space(4, 0)
    assert sp.measure("mu", 0) == 0
    assert sp.measure("nu", 0) == 0


def test_single_big_generator_beats_pair():
    sp = make_space(3, [1, 1, 1], [(0b011, 1), (0b110, 1), (0b111, Fraction(3, 2))], singletons(3))
    assert sp.measure("mu", 0b101) == Fraction(3, 2)
    assert sp.minimal_cover("mu", 0b101) == [2]


def test_table_lookup_matches_measure():
    st_ = make_counterexample_first(4)
    table = build_measure_table(st_.space, "nu")
    assert outer_measure(table, 0) == 0
    assert outer_measure(table, 0b1111) == 1


@given(spaces(max_n=5))
def test_table_equals_subcollection_enumeration(sp):
    for which in ("mu", "nu"):
        ref = cover_values(sp.n, sp.generators(which))
        for a in range(1 << sp.n):
            assert sp.measure(which, a) == ref[a]
            assert sp.measure_dp(which, a) == ref[a]


@given(spaces(max_n=5))
def test_monotone_and_subadditive(sp):
    full = sp.full
    for which in ("mu", "nu"):
        for a in range(full + 1):
            for b in iter_submasks(a):
                assert sp.measure(which, b) <= sp.measure(which, a)
            for b in range(full + 1):
                assert sp.measure(which, a | b) <= sp.measure(which, a) + sp.measure(which, b)


@given(spaces(max_n=5), st.data())
def test_minimal_cover_is_optimal(sp, data):
    a = data.draw(st.integers(0, sp.full))
    cover = [sp.nu_gen[i] for i in sp.minimal_cover("nu", a)]
    union = 0
    for m, _ in cover:
        union |= m
    assert a & ~union == 0
    assert sum((v for _, v in cover), Fraction(0)) == sp.measure("nu", a)


@given(spaces(max_n=5))
def test_json_round_trip(sp):
    back = FiniteSpace.from_json(sp.to_json())
    for a in range(1 << sp.n):
        assert back.measure("mu", a) == sp.measure("mu", a)
        assert back.measure("nu", a) == sp.measure("nu", a)
    assert back.omega == sp.omega


def test_from_json_reports_missing_fields():
    with pytest.raises(InputError):
        FiniteSpace.from_json({"points": 2})


def test_uncovered_point_is_rejected():
    with pytest.raises(InputError):
        make_space(2, [1, 1], [(0b01, 1)], [(0b11, 1)])


def test_caratheodory_singletons_first_family():
    sp = make_counterexample_first(4).space
    coll = [1 << i for i in range(4)]
    assert caratheodory_check(sp, coll, 4).holds
    v = caratheodory_check(sp, coll, 3)
    assert not v.holds
    assert v.witness == 0b1111 and v.lhs == 4 and v.rhs == 1
    assert caratheodory_constant(sp, coll) == 4


def test_caratheodory_single_member_always_holds():
    sp = random_space(4, 3)
    assert caratheodory_check(sp, [0b0110], 1).holds


@given(spaces(max_n=5), st.data())
def test_caratheodory_holds_with_k1_for_measures(sp, data):
    sp = make_space(sp.n, sp.omega, sp.mu_gen, singletons(sp.n, [1 + i for i in range(sp.n)]))
    labels = data.draw(st.lists(st.integers(-1, 2), min_size=sp.n, max_size=sp.n))
    coll = [sum(1 << i for i, l in enumerate(labels) if l == b) for b in range(3)]
    assert caratheodory_check(sp, [c for c in coll if c], 1).holds


def test_overlapping_collection_is_rejected():
    sp = random_space(3, 1)
    with pytest.raises(InputError):
        caratheodory_check(sp, [0b011, 0b110], 1)


def test_constant_needs_small_components():
    sp = make_space(21, [1] * 21, [((1 << 21) - 1, 1)], [((1 << 21) - 1, 1)], exact_limit=24)
    with pytest.raises(CapacityError):
        caratheodory_constant(sp, [(1 << 11) - 1, ((1 << 21) - 1) ^ ((1 << 11) - 1)])
