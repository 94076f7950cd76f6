import sys
import numpy as np
import pytest
from hypothesis import strategies as st

from modtree.tree import (
    ConstantChildren,
    GeometricWeights,
    PeriodicChildren,
    PeriodicWeights,
    PowerLawWeights,
    PrefixChildren,
    RadialTreeSpec,
    UnitWeights,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


children_rules = st.one_of(
    st.integers(2, 4).map(ConstantChildren),
    st.lists(st.integers(1, 3), min_size=1, max_size=3)
    .filter(lambda v: any(c > 1 for c in v))
    .map(lambda v: PeriodicChildren(tuple(v))),
    st.tuples(
        st.lists(st.integers(1, 3), min_size=1, max_size=3), st.integers(2, 3)
    ).map(lambda t: PrefixChildren(tuple(t[0]), ConstantChildren(t[1]))),
)

weights = st.floats(0.2, 5.0, allow_nan=False, allow_infinity=False)

weight_rules = st.one_of(
    st.just(UnitWeights()),
    st.lists(weights, min_size=1, max_size=3).map(lambda v: PeriodicWeights(tuple(v))),
    st.tuples(weights, st.floats(0.8, 1.5)).map(lambda t: GeometricWeights(*t)),
    st.tuples(weights, st.floats(-1.0, 2.0)).map(lambda t: PowerLawWeights(*t)),
)

# Specs whose p-modulus is positive for every p in (1, inf).
transient_specs = st.builds(RadialTreeSpec, children_rules, st.lists(weights, min_size=1, max_size=3).map(
    lambda v: PeriodicWeights(tuple(v))))

exponents = st.floats(1.2, 6.0, allow_nan=False)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
