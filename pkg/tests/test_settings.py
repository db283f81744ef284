import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from outerlp.norms import Inner, NormEngine, Outer
from outerlp.oracle import Oracle, cover_values
from outerlp.settings import (
    first_family_closed_form,
    load_setting,
    make_cartesian,
    make_counterexample_first,
    make_counterexample_second,
    make_three_measures,
    second_family_bound,
    second_family_closed_form,
)
from outerlp.space import InputError


def test_one_point_three_measures_collapse_to_the_value():
    sp = make_three_measures(1, 0).space
    f = [2.0]
    eng = NormEngine(sp, f)
    w, s, t = sp.omega[0], sp.mu_gen[0][1], sp.nu_gen[0][1]
    # on one point every norm is f scaled by the weights; unit weights give f itself
    assert eng.norm(2.0, Outer(3.0, 2.0)) == pytest.approx(
        2.0 * float(w) ** 0.5 * float(t) ** (1 / 3 - 1 / 2) * float(s) ** (1 / 2 - 1 / 3)
    )


def test_three_measures_against_oracle():
    sp = make_three_measures(5, 9).space
    f = (0.5, 2.0, 0.0, 1.0, 3.0)
    assert NormEngine(sp, list(f)).norm(2.0, Outer(3.0, 2.0)) == pytest.approx(
        Oracle(sp).double_norm(f, 2.0, 3.0, 2.0), rel=1e-9
    )


def test_cartesian_unit_cube():
    sp = make_cartesian([1, 1, 1], weights=[[2], [3], [5]]).space
    assert sp.omega == (Fraction(30),)
    assert sp.measure("mu", 1) == 5
    assert sp.measure("nu", 1) == 15


def test_cartesian_full_slab_measure():
    st_ = make_cartesian([2, 2, 2], seed=4)
    sp = st_.space
    w3 = [v for _, v in sp.mu_gen]
    for (mask, _), w in zip(sp.mu_gen, w3):
        assert sp.measure("mu", mask) == w


@given(st.integers(0, 50), st.integers(1, 255))
def test_cartesian_measures_match_cover_enumeration(seed, a):
    sp = make_cartesian([2, 2, 2], seed=seed).space
    ref_mu = cover_values(sp.n, sp.mu_gen)
    ref_nu = cover_values(sp.n, sp.nu_gen)
    assert sp.measure("mu", a) == ref_mu[a]
    assert sp.measure("nu", a) == ref_nu[a]


def test_cartesian_rejects_bad_sizes():
    with pytest.raises(InputError):
        make_cartesian([2, 2])
    with pytest.raises(InputError):
        make_cartesian([1, 1, 1], weights=[[1, 2], [1], [1]])


def test_first_family_m1_all_norms_one():
    sp = make_counterexample_first(1).space
    eng = NormEngine(sp, [1.0])
    for s, p in ((Inner(2.0), 1.0), (Outer(3.0, 2.0), 2.0), (Outer(1.0, 1.0), 1.0)):
        assert eng.norm(p, s) == pytest.approx(1.0)


def test_first_family_m4_r2():
    st_ = make_counterexample_first(4)
    eng = NormEngine(st_.space, np.ones(4))
    assert eng.norm(1.0, Inner(2.0)) == pytest.approx(2.0)
    assert eng.norm(1.0, Outer(1.0, 2.0)) == pytest.approx(4.0)
    assert st_.reference["inner_norm"](2.0) == 2.0


@pytest.mark.parametrize("m", [2, 5, 7])
@pytest.mark.parametrize("p,q,r", [(2, 3, 2), (1, 2, 1.5), (3, 4, 4)])
def test_first_family_closed_form(m, p, q, r):
    eng = NormEngine(make_counterexample_first(m).space, np.ones(m))
    assert eng.norm(p, Outer(q, r)) == pytest.approx(first_family_closed_form(m, p, q, r), rel=1e-9)


def test_first_family_growth_at_m6():
    m = 6
    val = NormEngine(make_counterexample_first(m).space, np.ones(m)).norm(2.0, Outer(3.0, 2.0))
    # the lower bound sum_i i^{alpha p} >= m^{alpha p + 1} / (alpha p + 1) gives c = (alpha p + 1)^{-1/p}
    alpha = 1 / 2 - 1 / 3
    c = (alpha * 2 + 1) ** -0.5
    assert val >= c * m ** (1 / 2 - 1 / 3 + 1 / 2)


def test_second_family_m1():
    sp = make_counterexample_second(1, Fraction(1, 2)).space
    eng = NormEngine(sp, [1.0])
    assert eng.norm(1.0, Inner(0.5)) == pytest.approx(1.0)
    assert eng.norm(1.0, Outer(1.0, 0.5)) == pytest.approx(1.0)


@pytest.mark.parametrize("m", [2, 3, 4, 5])
@pytest.mark.parametrize("r", [Fraction(1, 2), Fraction(1)])
def test_second_family_norms(m, r):
    st_ = make_counterexample_second(m, r)
    beta = st_.reference["beta"]
    eng = NormEngine(st_.space, np.ones(m))
    assert eng.norm(1.0, Inner(float(r))) == pytest.approx(m ** (1 / float(r)), rel=1e-12)
    double = eng.norm(1.0, Outer(1.0, float(r)))
    assert double == pytest.approx(second_family_closed_form(m, beta), rel=1e-9)
    assert double <= second_family_bound(m, beta)


def test_second_family_m3_r_half_is_bounded_by_three_c():
    double = NormEngine(make_counterexample_second(3, Fraction(1, 2)).space, np.ones(3)).norm(1.0, Outer(1.0, 0.5))
    assert double == pytest.approx(3.0)
    assert double <= second_family_bound(3, 4)


def test_second_family_rejects_large_r():
    with pytest.raises(InputError):
        make_counterexample_second(3, 2)


def test_load_setting_descriptors():
    assert load_setting({"kind": "cartesian", "sizes": [1, 2, 2]}).space.n == 4
    assert load_setting({"kind": "ce2", "m": 3, "r": "1/2"}).reference["beta"] == 4
    assert load_setting({"kind": "dyadic", "J": 1}).space.n > 0
    with pytest.raises(InputError):
        load_setting({"kind": "threeMeasures"})
    with pytest.raises(InputError):
        load_setting({"kind": "moon"})


def test_first_family_closed_form_at_infinity():
    assert first_family_closed_form(4, math.inf, 3.0, 2.0) == pytest.approx(4 ** (1 / 2 - 1 / 3))
