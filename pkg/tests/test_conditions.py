from fractions import Fraction

import pytest

from outerlp.conditions import (
    CoveringFunctionSpec,
    canopy_check,
    crop_check,
    crop_subcollection,
    disjoint_collections,
    explicit_spec,
    identity_spec,
    parent_function_check,
    singleton_spec,
    slab_spec,
    spec_from_json,
)
from outerlp.dyadic import make_dyadic_discrete
from outerlp.settings import make_cartesian, make_counterexample_first, make_three_measures
from outerlp.space import InputError, caratheodory_check, make_space, random_space, singletons


def measure_space(n, seed=0):
    sp = random_space(n, seed)
    return make_space(n, sp.omega, sp.mu_gen, singletons(n, [1 + i for i in range(n)]))


def test_disjoint_collections_count_set_partitions_of_subsets():
    # disjoint collections of nonempty subsets of a 3-set: Bell(4) = 15
    assert sum(1 for _ in disjoint_collections(3)) == 15


def test_identity_parent_holds():
    sp = random_space(4, 5)
    v = parent_function_check(sp, identity_spec(sp))
    assert v.holds and v.exhaustive


def test_dyadic_covering_holds_with_phi_two():
    st = make_dyadic_discrete(1)
    assert st.covering.phi == 2
    assert parent_function_check(st.space, st.covering).holds


def test_parent_fails_when_cover_is_too_expensive():
    sp = make_space(2, [1, 1], [(0b01, 1), (0b11, 5)], singletons(2))
    table = {0b01: [0b11], 0b10: [0b11], 0b11: [0b11]}
    v = parent_function_check(sp, explicit_spec(sp, table, [0b11], phi=2))
    assert not v.holds
    assert v.witness["A"] == 0b01
    assert sp.measure("mu", v.witness["B"]) > 2 * sp.measure("mu", v.witness["A"])


def test_parent_fails_on_overlapping_members():
    sp = random_space(3, 0)
    spec = CoveringFunctionSpec("bad", 3, 1, None, lambda a: (a, sp.full) if a else ())
    assert not parent_function_check(sp, spec).holds


def test_explicit_spec_must_be_total():
    sp = random_space(2, 0)
    with pytest.raises(InputError):
        explicit_spec(sp, {0b01: [0b01]}, [0b01], 1)


def test_spec_from_json_rules():
    sp = random_space(4, 0)
    assert spec_from_json(sp, {"assignRule": "slabs", "family": ["0x3", "0xc"]}).parent(0b0100) == 0b1100
    assert spec_from_json(sp, {}).parent(0b0101) == 0b0101
    with pytest.raises(InputError):
        spec_from_json(sp, {"assignRule": "nope"})


@pytest.mark.parametrize("n", [3, 4])
def test_canopy_and_crop_hold_for_measures(n):
    sp = measure_space(n)
    spec = identity_spec(sp)
    assert canopy_check(sp, spec, 1).holds
    assert crop_check(sp, spec, 1).holds


def test_canopy_and_crop_hold_on_products():
    st = make_cartesian([2, 2, 1], seed=3)
    v = canopy_check(st.space, st.covering, 1)
    assert v.holds and v.exhaustive
    assert crop_check(st.space, st.covering, 1).holds


def test_three_measures_satisfy_both_conditions():
    st = make_three_measures(4, 2)
    assert canopy_check(st.space, st.covering, 1).holds
    assert crop_check(st.space, st.covering, 1).holds


def test_canopy_fails_for_singletons_with_k1():
    sp = make_counterexample_first(2).space
    v = canopy_check(sp, identity_spec(sp), 1)
    assert not v.holds
    w = v.witness
    replay = caratheodory_check(sp, list(w["collection"]) + [w["D"]], 1)
    assert not replay.holds
    assert not caratheodory_check(sp, list(w["collection"]) + [w["D"]], 1, exact_component_limit=2).holds


def test_canopy_is_monotone_in_k():
    sp = make_counterexample_first(3).space
    spec = identity_spec(sp)
    verdicts = [canopy_check(sp, spec, k).holds for k in (1, 2, 3, 4)]
    assert verdicts == sorted(verdicts)
    assert verdicts[-1]


def test_crop_fails_on_adversarial_spec():
    sp = make_space(3, [1, 1, 1], singletons(3), singletons(3))

    def assign(a):
        out = []
        if a & 0b011:
            out.append(0b011)
        if a & 0b100:
            out.append(0b110)
        return tuple(out)

    spec = CoveringFunctionSpec("adversarial", 3, 1, (0b011, 0b110), assign)
    v = crop_check(sp, spec, 1)
    assert not v.holds
    assert sorted(v.witness["collection"]) == [0b011, 0b110]
    assert crop_subcollection(sp, spec, v.witness["collection"], 1) is None


def test_dyadic_crop_uses_maximal_strips():
    st = make_dyadic_discrete(1)
    fam = list(st.covering.family)[:4]
    sub = crop_subcollection(st.space, st.covering, fam, 1)
    assert sub is not None
    assert caratheodory_check(st.space, sub, 1).holds


def test_dyadic_sampled_conditions():
    st = make_dyadic_discrete(1)
    sp = st.space
    assert canopy_check(sp, st.covering, 2, budget=40, d_budget=8, samples=64).holds
    assert crop_check(sp, st.covering, 1, budget=16, samples=64).holds


def test_singleton_spec_parent_is_identity():
    sp = random_space(3, 4)
    spec = singleton_spec(sp)
    assert all(spec.parent(a) == a for a in range(8))
    assert Fraction(spec.phi) == 1
