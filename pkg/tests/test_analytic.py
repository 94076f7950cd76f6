import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modtree.analytic import (
    INCONCLUSIVE,
    NOT_EXISTS,
    POSITIVE,
    ZERO,
    mod_1_infinite,
    mod_2_infinite,
    mod_infty_infinite,
    mod_p_infinite,
    mod_p_truncated,
    optimal_density_infinite,
    shell_mass_min,
    sweep,
)
from modtree.errors import DegenerateExponent, InconclusiveModulus, NoTailRule
from modtree.skips import ConstantGap, SkipSequence
from modtree.tree import (
    ConstantChildren,
    GeometricWeights,
    PeriodicWeights,
    PowerLawWeights,
    PrefixChildren,
    RadialTreeSpec,
    SkipChildren,
    UnitWeights,
    binary_tree,
    path_tree,
)

from conftest import children_rules, exponents, transient_specs, weights
from oracles import direct_series, truncated_fraction


# -- truncated closed form ------------------------------------------------------


def test_truncated_binary_single_shell():
    res = mod_p_truncated(binary_tree(), 2, 1)
    assert res.value == 2.0
    assert res.density.tolist() == [1.0]


def test_truncated_binary_depth3_exact():
    expected = truncated_fraction([2, 4, 8], [1, 1, 1], 2)
    assert expected == Fraction(8, 7)
    assert mod_p_truncated(binary_tree(), 2, 3).value == pytest.approx(float(expected), rel=1e-15)


def test_truncated_path():
    res = mod_p_truncated(path_tree(), 2, 4)
    assert res.value == pytest.approx(0.25, rel=1e-15)
    assert np.allclose(res.density, 0.25, rtol=1e-15)


@pytest.mark.parametrize("p", [1.0, 1 + 1e-10, math.inf, 2e9, float("nan")])
def test_degenerate_exponents(p):
    with pytest.raises(DegenerateExponent):
        mod_p_truncated(binary_tree(), p, 3)
    with pytest.raises(DegenerateExponent):
        mod_p_infinite(binary_tree(), p)


def test_sweep_matches_truncated():
    vals = sweep(binary_tree(), 2.5, 12)
    for n, v in enumerate(vals, start=1):
        assert v == pytest.approx(mod_p_truncated(binary_tree(), 2.5, n).value, rel=1e-14)


# -- infinite family ----------------------------------------------------------


@pytest.mark.parametrize("p", [1.1, 1.5, 2.0, 3.0, 7.5])
def test_binary_closed_form(p):
    a = 1 / (p - 1)
    expected = 2 * (1 - 2 ** (-a)) ** (p - 1)
    res = mod_p_infinite(binary_tree(), p)
    assert res.classification == POSITIVE
    assert res.value == pytest.approx(expected, rel=1e-13)


def test_binary_p2_is_one():
    assert abs(mod_p_infinite(binary_tree(), 2).value - 1) < 1e-12


@pytest.mark.parametrize("p", [1.3, 2.0, 4.0])
def test_unweighted_path_zero(p):
    res = mod_p_infinite(path_tree(), p)
    assert res.classification == ZERO and res.value == 0.0
    assert res.witness


def test_weighted_path_positive_below_two():
    res = mod_p_infinite(path_tree(GeometricWeights(1.0, 2.0)), 1.5)
    assert res.classification == POSITIVE
    assert res.value == pytest.approx(math.sqrt(3), rel=1e-14)


def test_weighted_path_formula_above_two():
    # sum 2**(-k/(p-1)) converges for every p; at p = 2.5 it is 1/(2**(2/3) - 1)
    res = mod_p_infinite(path_tree(GeometricWeights(1.0, 2.0)), 2.5)
    assert res.classification == POSITIVE
    assert res.value == pytest.approx((2 ** (2 / 3) - 1) ** 1.5, rel=1e-13)


def test_density_binary_p2():
    rho = optimal_density_infinite(binary_tree(), 2)
    assert np.allclose(rho.head(20), 2.0 ** -np.arange(1, 21), rtol=1e-15)


def test_density_weighted_path():
    rho = optimal_density_infinite(path_tree(GeometricWeights(1.0, 2.0)), 1.5)
    assert np.allclose(rho.head(10), 3 * 4.0 ** -np.arange(1, 11), rtol=1e-13)


def test_density_missing_on_path():
    assert optimal_density_infinite(path_tree(), 2) is NOT_EXISTS


def test_mod2_examples():
    assert mod_2_infinite(binary_tree()).value == pytest.approx(1.0, rel=1e-15)
    assert mod_2_infinite(RadialTreeSpec(ConstantChildren(2), GeometricWeights(1.0, 0.5))).classification == ZERO
    assert mod_2_infinite(RadialTreeSpec(ConstantChildren(3))).value == pytest.approx(2.0, rel=1e-14)


def test_mod1_examples():
    assert mod_1_infinite(RadialTreeSpec(PrefixChildren((7,), ConstantChildren(2)))).value == 7
    assert mod_1_infinite(RadialTreeSpec(ConstantChildren(2), GeometricWeights(1.0, 0.5))).value == 1.0
    res = mod_1_infinite(path_tree(PowerLawWeights(1.0, -1.0)))
    assert res.classification == ZERO and res.value == 0.0


def test_mod1_decreasing_prefix_then_growth():
    # sigma_k |S_k| = 8 k**-2 * 2**k dips to its minimum at k = 3
    spec = RadialTreeSpec(ConstantChildren(2), PowerLawWeights(8.0, -2.0))
    masses = [8 * k**-2 * 2**k for k in range(1, 40)]
    assert mod_1_infinite(spec).value == pytest.approx(min(masses), rel=1e-14)


def test_mod1_skip_bounded_weights():
    spec = RadialTreeSpec(SkipChildren(SkipSequence(ConstantGap(3), first=2)), PeriodicWeights((5.0, 0.3)))
    sizes = spec.shell_sizes(60)
    masses = [spec.weight(k) * s for k, s in enumerate(sizes, start=1)]
    assert mod_1_infinite(spec).value == pytest.approx(min(masses), rel=1e-15)


def test_mod_infinity_examples():
    assert mod_infty_infinite(path_tree()).classification == ZERO
    assert mod_infty_infinite(binary_tree().with_weights(GeometricWeights(1.0, 2.0))).value == pytest.approx(1.0)
    res = mod_infty_infinite(path_tree(PowerLawWeights(1.0, 2.0)))
    assert res.value == pytest.approx(6 / math.pi**2, rel=1e-14)


def test_inconclusive_carries_upper_bound():
    spec = RadialTreeSpec(SkipChildren(SkipSequence(ConstantGap(1))), GeometricWeights(1.0, 2.0))
    res = mod_p_infinite(spec, 2.0)
    assert res.classification == INCONCLUSIVE
    assert math.isnan(res.value)
    assert 0 < res.upper_bound <= shell_mass_min(spec, 10)
    with pytest.raises(InconclusiveModulus):
        optimal_density_infinite(spec, 2.0)


def test_no_tail_rule():
    with pytest.raises(NoTailRule):
        mod_p_infinite(RadialTreeSpec(PrefixChildren((2, 3))), 2)


def test_limit_for_long_tail_agrees_with_direct_sum():
    spec = RadialTreeSpec(ConstantChildren(2), GeometricWeights(3.0, 0.6))
    a = 1 / (2.2 - 1)
    ref = direct_series(spec, a, 1000) ** -(2.2 - 1)
    assert mod_p_infinite(spec, 2.2).value == pytest.approx(ref, rel=1e-12)


def test_large_p_root_decay_binary():
    vals = [mod_p_infinite(binary_tree(), p).value ** (1 / p) for p in (10, 20, 40, 80)]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    assert vals[-1] < 0.1


# -- invariants -----------------------------------------------------------------


def _value(spec, p):
    res = mod_p_infinite(spec, p)
    assert res.classification == POSITIVE
    return res.value


@settings(max_examples=200, deadline=None)
@given(transient_specs, exponents)
def test_truncation_monotone_and_above_limit(spec, p):
    vals = sweep(spec, p, 25)
    limit = _value(spec, p)
    assert np.all(np.diff(vals) <= 1e-15 * vals[:-1])
    assert vals[-1] >= limit * (1 - 1e-12)


@settings(max_examples=200, deadline=None)
@given(transient_specs, exponents)
def test_upper_bound_by_shell_mass(spec, p):
    assert _value(spec, p) <= shell_mass_min(spec, 50) * (1 + 1e-12)


@settings(max_examples=200, deadline=None)
@given(transient_specs, exponents, exponents)
def test_p_monotone(spec, p1, p2):
    lo, hi = sorted((p1, p2))
    assert _value(spec, hi) <= _value(spec, lo) * (1 + 1e-12)


@settings(max_examples=200, deadline=None)
@given(transient_specs, exponents, st.floats(0.01, 100.0))
def test_scaling(spec, p, theta):
    scaled = spec.with_weights(PeriodicWeights(tuple(theta * v for v in spec.weights.values)))
    assert _value(scaled, p) == pytest.approx(theta * _value(spec, p), rel=1e-12)


period_weights = st.lists(weights, min_size=3, max_size=3)


@settings(max_examples=200, deadline=None)
@given(children_rules, period_weights, period_weights, exponents)
def test_superadditive(children, w1, w2, p):
    s1 = RadialTreeSpec(children, PeriodicWeights(tuple(w1)))
    s2 = RadialTreeSpec(children, PeriodicWeights(tuple(w2)))
    s12 = RadialTreeSpec(children, PeriodicWeights(tuple(x + y for x, y in zip(w1, w2))))
    assert _value(s12, p) >= (_value(s1, p) + _value(s2, p)) * (1 - 1e-12)


@settings(max_examples=200, deadline=None)
@given(transient_specs, exponents)
def test_elliptic_sandwich(spec, p):
    a1, a2 = spec.weights.bounds()
    unit = _value(spec.with_weights(UnitWeights()), p)
    v = _value(spec, p)
    assert a1 * unit * (1 - 1e-12) <= v <= a2 * unit * (1 + 1e-12)


@settings(max_examples=200, deadline=None)
@given(children_rules, period_weights, st.lists(st.floats(-0.1, 0.1), min_size=3, max_size=3), exponents)
def test_lipschitz_in_weights(children, w, delta, p):
    w_hat = [max(0.2, min(5.0, x + d)) for x, d in zip(w, delta)]
    a1 = min(w + w_hat)
    a2 = max(w + w_hat)
    spec = RadialTreeSpec(children, PeriodicWeights(tuple(w)))
    spec_hat = RadialTreeSpec(children, PeriodicWeights(tuple(w_hat)))
    unit = _value(spec.with_weights(UnitWeights()), p)
    gap = abs(_value(spec_hat, p) - _value(spec, p))
    bound = (a2 / a1) * unit * max(abs(x - y) for x, y in zip(w, w_hat))
    assert gap <= bound * (1 + 1e-9) + 1e-15


@settings(max_examples=200, deadline=None)
@given(transient_specs, exponents)
def test_continuity_in_p(spec, p):
    v0 = _value(spec, p)
    rho0 = mod_p_infinite(spec, p).optimal_density.head(8)
    diffs = []
    for h in (1e-2, 1e-4, 1e-6):
        diffs.append(abs(_value(spec, p + h) - v0))
        rho = mod_p_infinite(spec, p + h).optimal_density.head(8)
        assert np.max(np.abs(rho - rho0)) <= 50 * h * (1 + np.max(rho0)) or h > 1e-3
    assert diffs[-1] <= 1e-4 * v0


@settings(max_examples=200, deadline=None)
@given(transient_specs, exponents)
def test_density_sums_to_one(spec, p):
    res = mod_p_infinite(spec, p)
    head = res.optimal_density.head(400)
    assert np.all(head >= 0)
    assert math.fsum(head) <= 1 + 1e-12
    # the remainder is the unsummed tail of a geometric series
    assert math.fsum(head) == pytest.approx(
        direct_series(spec, 1 / (p - 1), 400) / res.optimal_density.total, rel=1e-12
    )
