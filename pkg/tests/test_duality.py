import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from outerlp.conditions import identity_spec
from outerlp.duality import (
    SingleIteratedCase,
    build_dual,
    double_norm_power,
    dual_exponent,
    pairing_sup_search,
    replay_dual,
    triangle_defect,
    verify_duality,
)
from outerlp.norms import INF
from outerlp.settings import make_cartesian, make_counterexample_first, make_three_measures
from outerlp.space import InputError, make_space, singletons
from outerlp.suites import random_function, structured_setting

HOLDER = [(2.0, 2.0, 3.0), (2.0, 3.0, 2.0), (3.0, 2.0, 4.0)]


def one_point():
    return make_space(1, [2], [(1, 3)], [(1, 5)])


def test_dual_exponent():
    assert dual_exponent(2.0) == 2.0
    assert dual_exponent(1.0) == INF
    assert dual_exponent(INF) == 1.0
    assert dual_exponent(3.0) == pytest.approx(1.5)


def test_zero_function():
    sp = make_three_measures(4, 0).space
    spec = identity_spec(sp)
    wit = build_dual(sp, np.zeros(4), 2.0, 3.0, 2.0, spec)
    assert not wit.g.any() and wit.scale == 0
    rep = verify_duality(sp, np.zeros(4), wit, spec=spec)
    assert (rep.pairing, rep.lhs, rep.dual_norm) == (0.0, 0.0, 0.0)
    assert rep.holds_within_envelope
    assert pairing_sup_search(sp, np.zeros(4), 2.0, 3.0, 2.0, 3) == 0.0


def test_one_point_pairing_is_sharp():
    sp = one_point()
    spec = identity_spec(sp)
    wit = build_dual(sp, [1.5], 2.0, 3.0, 2.0, spec)
    assert len(wit.blocks) == 1
    rep = verify_duality(sp, [1.5], wit, spec=spec)
    assert rep.sharpness == pytest.approx(1.0)
    assert rep.links_ok
    norm = double_norm_power(sp, [1.5], 2.0, 3.0, 2.0) ** 0.5
    assert pairing_sup_search(sp, [1.5], 2.0, 3.0, 2.0, 4, spec=spec) == pytest.approx(norm)


def test_indicator_gets_one_block():
    sp = make_space(3, [1, 1, 1], singletons(3), singletons(3))
    f = np.array([0.0, 1.0, 0.0])
    wit = build_dual(sp, f, 2.0, 2.0, 3.0, identity_spec(sp))
    (b,) = wit.blocks
    p, q, r = wit.exponents
    coeff = 2.0 ** (b.k * (p - q) + b.j * (q - r))
    ft = f / wit.scale
    expected = coeff * ft ** (r - 1) * wit.scale ** (p - 1)
    assert wit.g == pytest.approx(expected)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("pqr", HOLDER)
def test_links_hold_on_structured_settings(seed, pqr):
    p, q, r = pqr
    st_ = structured_setting(seed)
    sp = st_.space
    f = random_function(sp.n, seed)
    wit = build_dual(sp, f, p, q, r, st_.covering, K=st_.K)
    rep = verify_duality(sp, f, wit, spec=st_.covering)
    assert rep.links_ok, [l for l in rep.links if not l["ok"]]
    assert rep.holds_within_envelope
    assert 0 < rep.sharpness <= 1 + 1e-9
    sup = pairing_sup_search(sp, f, p, q, r, 4, spec=st_.covering, K=st_.K, seed=seed)
    assert sup >= rep.sharpness * double_norm_power(sp, f, p, q, r) ** (1 / p) * (1 - 1e-9)


@given(st.integers(0, 40), st.sampled_from(HOLDER))
def test_witness_replays_from_its_blocks(seed, pqr):
    st_ = structured_setting(seed)
    sp = st_.space
    f = random_function(sp.n, seed)
    wit = build_dual(sp, f, *pqr, st_.covering, K=st_.K)
    assert replay_dual(sp, f, wit) == pytest.approx(wit.g, rel=1e-12, abs=1e-300)
    assert np.all(wit.g >= 0)
    assert np.all(wit.g[f == 0] == 0)


def test_crop_can_empty_a_block():
    # On products with q much larger than r a heavy slab has a small relative
    # l^r size on a light block, so the crop step removes the whole block and
    # the block-mass link is reported as failing.
    st_ = make_cartesian([3, 2, 2], seed=2)
    n = st_.space.n
    rng = np.random.default_rng(2)
    f = rng.uniform(0, 3, n) ** 3 * (rng.random(n) < 0.8)
    wit = build_dual(st_.space, f, 2.0, 6.0, 1.2, st_.covering)
    emptied = [b for b in wit.blocks if b.U and not b.W]
    assert emptied
    rep = verify_duality(st_.space, f, wit, spec=st_.covering)
    failing = {l["link"] for l in rep.links if not l["ok"]}
    assert failing == {"block mass"}
    assert not rep.links_ok


def test_repeated_exponent_needs_single_iterated_route():
    st_ = make_three_measures(3, 1)
    f = np.ones(3)
    with pytest.raises(SingleIteratedCase):
        build_dual(st_.space, f, 2.0, 2.0, 2.0, st_.covering)
    wit = build_dual(st_.space, f, 2.0, 2.0, 2.0, st_.covering, single_iterated=True)
    assert wit.single_iterated
    rep = verify_duality(st_.space, f, wit, spec=st_.covering)
    assert rep.links_ok
    assert "mass vs single norm" in {l["link"] for l in rep.links}


def test_input_errors():
    sp = one_point()
    spec = identity_spec(sp)
    with pytest.raises(InputError):
        build_dual(sp, [1.0], 1.0, 2.0, 3.0, spec)
    with pytest.raises(InputError):
        build_dual(sp, [-1.0], 2.0, 2.0, 3.0, spec)
    with pytest.raises(InputError):
        pairing_sup_search(sp, [1.0], 2.0, 2.0, 3.0, 0)
    with pytest.raises(InputError):
        triangle_defect(sp, [], 2.0, 2.0, 3.0)


def test_triangle_single_summand_is_one():
    st_ = structured_setting(3)
    f = random_function(st_.space.n, 3)
    assert triangle_defect(st_.space, [f], 2.0, 3.0, 2.0) == pytest.approx(1.0)


def test_triangle_disjoint_indicators_classical_l2():
    sp = make_space(4, [1] * 4, singletons(4), singletons(4))
    fs = [np.array([1.0, 1.0, 0, 0]), np.array([0, 0, 1.0, 0])]
    assert triangle_defect(sp, fs, 2.0, 2.0, 2.0) <= 1.0 + 1e-12


def test_triangle_grows_on_the_first_family():
    m = 8
    sp = make_counterexample_first(m).space
    fs = [np.eye(m)[i] for i in range(m)]
    # 1/p - 1/q + 1/r - 1 = 1/2 for (1, 2, 1); the ratio is sum_i i^{1/2} / m >= (2/3) m^{1/2}
    assert triangle_defect(sp, fs, 1.0, 2.0, 1.0) >= (2 / 3) * m**0.5
