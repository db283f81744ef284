from fractions import Fraction

import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from outerlp.space import FiniteSpace

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

weights = st.fractions(min_value=Fraction(1, 4), max_value=Fraction(4), max_denominator=4)


@st.composite
def spaces(draw, min_n=1, max_n=5):
    """Small spaces with random rational weights and covering generator families."""
    n = draw(st.integers(min_n, max_n))
    full = (1 << n) - 1

    def family():
        gens = draw(st.lists(st.tuples(st.integers(1, full), weights), min_size=0, max_size=5))
        covered = 0
        for m, _ in gens:
            covered |= m
        gens += [(1 << i, draw(weights)) for i in range(n) if not covered >> i & 1]
        return gens

    omega = [draw(weights) for _ in range(n)]
    return FiniteSpace(tuple(range(n)), omega, family(), family())


@st.composite
def space_and_function(draw, min_n=1, max_n=5, allow_zero=True):
    sp = draw(spaces(min_n, max_n))
    vals = draw(
        st.lists(
            st.one_of(st.just(0.0), st.floats(0.1, 5.0)) if allow_zero else st.floats(0.1, 5.0),
            min_size=sp.n,
            max_size=sp.n,
        )
    )
    return sp, np.array(vals)


exponents = st.sampled_from([1.0, 1.5, 2.0, 3.0])
