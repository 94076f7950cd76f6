"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line that is printed in the terminal summary
(see ``conftest.py``); ``python3 tests/test_acceptance.py`` prints them
directly.
"""

import math
import time

import numpy as np
from hypothesis import given, settings, strategies as st

from modtree.analytic import POSITIVE, ZERO, mod_p_infinite, mod_p_truncated, shell_mass_min, sweep
from modtree.critical import construct_tree_with_pc, estimate_pc, mod_p_skip, skip_to_spec
from modtree.dual import lower_bound, pairing, split_flow, uniform_flow, validate_unit_flow, UnitFlow
from modtree.skips import CeilGeometricGap, SkipSequence
from modtree.solver import (
    SolveOptions,
    path_lengths,
    series_parallel_modulus,
    solve_finite_modulus,
    symmetrize_check,
)
from modtree.tree import ConstantChildren, PeriodicWeights, RadialTreeSpec, UnitWeights, binary_tree, path_tree, random_tree, truncate
from modtree.walk import WalkConfig, predicted_escape, simulate_escape

from conftest import children_rules, exponents, transient_specs, weights

RESULTS = {}
SEED = 20240601


def record(n, ok, detail):
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, RESULTS[n]


def best_time(fn, repeat=20):
    fn()
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def test_01_binary_two_modulus():
    p = 2.0
    a = 1 / (p - 1)
    closed = 2 * (1 - 2 ** (-a)) ** (p - 1)
    value = mod_p_infinite(binary_tree(), p).value
    dt = best_time(lambda: mod_p_infinite(binary_tree(), p))
    ok = abs(value - 1) <= 1e-12 and abs(closed - 1) <= 1e-12 and dt < 1e-3
    record(1, ok, f"Mod_2(binary) = {value!r}, closed form {closed!r}, {dt * 1e3:.3f} ms")


def test_02_truncation_limit():
    vals = sweep(binary_tree(), 2.0, 30)
    dt = best_time(lambda: sweep(binary_tree(), 2.0, 30))
    decreasing = bool(np.all(np.diff(vals) < 0))
    err = abs(vals[-1] - 1)
    record(2, decreasing and err < 1e-8 and dt < 1e-2,
           f"strictly decreasing={decreasing}, |Mod(n=30) - 1| = {err:.3g}, {dt * 1e3:.3f} ms")


def test_03_solver_matches_closed_form():
    specs = [
        ("binary", binary_tree(), 10),
        ("C=3", RadialTreeSpec(ConstantChildren(3)), 7),
        *[(f"skip r={r}", skip_to_spec(construct_tree_with_pc(r)), 10) for r in (1.5, 2, 3)],
    ]
    t0 = time.perf_counter()
    worst_rel = worst_spread = 0.0
    for _, spec, n in specs:
        tree = truncate(spec, n)
        for p in (1.5, 2.0, 3.0):
            rep = solve_finite_modulus(tree, SolveOptions(p=p))
            closed = mod_p_truncated(spec, p, n).value
            worst_rel = max(worst_rel, abs(rep.value - closed) / closed)
            worst_spread = max(worst_spread, symmetrize_check(tree, rep, 1e-5).spread)
    dt = time.perf_counter() - t0
    record(3, worst_rel <= 1e-6 and worst_spread <= 1e-5 and dt < 60,
           f"worst rel err {worst_rel:.3g}, worst shell spread {worst_spread:.3g}, {dt:.2f} s")


def _random_suite():
    rng = np.random.default_rng(SEED)
    trees = []
    while len(trees) < 100:
        tree = random_tree(rng, int(rng.integers(2, 8)), max_edges=500, weight_range=(0.1, 10.0))
        if not tree.is_radially_symmetric():
            trees.append(tree)
    return trees


def test_04_solver_matches_series_parallel():
    trees = _random_suite()
    t0 = time.perf_counter()
    worst = 0.0
    symmetric = 0
    for tree in trees:
        symmetric += tree.is_radially_symmetric()
        for p in (1.3, 2.0, 4.0):
            rep = solve_finite_modulus(tree, SolveOptions(p=p))
            ref = series_parallel_modulus(tree, p)
            worst = max(worst, abs(rep.value - ref) / ref)
    dt = time.perf_counter() - t0
    record(4, worst <= 1e-6 and dt < 120 and symmetric == 0,
           f"100 trees x 3 exponents, worst rel err {worst:.3g}, {symmetric} symmetric, {dt:.2f} s")


def test_05_one_modulus_is_min_cut():
    rng = np.random.default_rng(SEED + 5)
    worst = 0.0
    for _ in range(20):
        tree = random_tree(rng, int(rng.integers(2, 8)), max_edges=300, unit_weights=True)
        rep = solve_finite_modulus(tree, SolveOptions(p=1))
        worst = max(worst, abs(rep.value - tree.shells[0].size))
    record(5, worst <= 1e-6, f"max |Mod_1 - |S_1|| over 20 trees = {worst:.3g}")


def test_06_dual_equality():
    worst = 0.0
    for spec in (binary_tree(), RadialTreeSpec(ConstantChildren(3)), skip_to_spec(construct_tree_with_pc(2))):
        for n in (1, 3, 6, 9):
            tree = truncate(spec, n)
            for p in (1.5, 2.0, 3.0):
                closed = mod_p_truncated(spec, p, n).value
                bound = lower_bound(tree, uniform_flow(tree), p)
                worst = max(worst, abs(bound - closed) / closed)
    violations = 0
    for tree in _random_suite()[:40]:
        for p in (1.3, 2.0, 4.0):
            rep = solve_finite_modulus(tree, SolveOptions(p=p))
            violations += lower_bound(tree, split_flow(tree), p) > rep.value * (1 + 1e-12)
    record(6, worst <= 1e-9 and violations == 0,
           f"uniform-flow rel gap {worst:.3g}, bound > solver on {violations} of 120 instances")


def test_07_critical_exponent():
    t0 = time.perf_counter()
    misses = []
    widths = []
    for r in (1.25, 1.5, 2, 3, 5):
        est = estimate_pc(construct_tree_with_pc(r), resolution=0.05, n_terms=200)
        widths.append(est.width)
        if not (est.brackets(r) and est.p_lo >= r - 0.05 and est.p_hi <= r + 0.05):
            misses.append(r)
    dt = time.perf_counter() - t0
    record(7, not misses and dt < 5,
           f"brackets within 0.05 for all r (misses {misses}), max width {max(widths):.3g}, {dt:.3f} s")


def test_08_boundary_pair():
    fast = mod_p_skip(SkipSequence(CeilGeometricGap(1)), 2.0)
    slow = mod_p_skip(SkipSequence(CeilGeometricGap(1, 2)), 2.0)
    bound = 1 / (math.pi**2 / 6 + 1)
    ok = fast.classification == ZERO and slow.classification == POSITIVE and slow.value >= bound
    record(8, ok, f"2**k: {fast.classification}; ceil(2**k/k**2): {slow.classification} {slow.value:.6g} >= {bound:.6g}")


def test_09_random_walk():
    t0 = time.perf_counter()
    binary = simulate_escape(WalkConfig(binary_tree(), 40, walks=100_000, seed=SEED))
    path = simulate_escape(WalkConfig(path_tree(), 20, walks=100_000, seed=SEED))
    dt = time.perf_counter() - t0
    pb = predicted_escape(binary_tree(), 40)
    pp = predicted_escape(path_tree(), 20)
    ok = abs(binary.escape - 0.5) <= 0.01 and abs(path.escape - 0.05) <= 0.005 and dt < 30
    record(9, ok, f"binary {binary.escape:.4f} (oracle {pb:.4f}), path {path.escape:.4f} (oracle {pp:.4f}), {dt:.2f} s")


def _run_property(fn):
    try:
        fn()
        return None
    except Exception as exc:  # report, do not stop the other suites
        return f"{fn.__name__}: {type(exc).__name__}"


def _value(spec, p):
    res = mod_p_infinite(spec, p)
    assert res.classification == POSITIVE
    return res.value


three = st.lists(weights, min_size=3, max_size=3)
CASES = settings(max_examples=200, deadline=None, database=None)


@CASES
@given(transient_specs, exponents, st.floats(0.01, 100.0))
def scaling(spec, p, theta):
    scaled = spec.with_weights(PeriodicWeights(tuple(theta * v for v in spec.weights.values)))
    assert abs(_value(scaled, p) - theta * _value(spec, p)) <= 1e-12 * theta * _value(spec, p)


@CASES
@given(children_rules, three, three, exponents)
def superadditivity(children, w1, w2, p):
    v1 = _value(RadialTreeSpec(children, PeriodicWeights(tuple(w1))), p)
    v2 = _value(RadialTreeSpec(children, PeriodicWeights(tuple(w2))), p)
    v12 = _value(RadialTreeSpec(children, PeriodicWeights(tuple(x + y for x, y in zip(w1, w2)))), p)
    assert v12 >= (v1 + v2) * (1 - 1e-12)


@CASES
@given(transient_specs, exponents)
def elliptic_sandwich(spec, p):
    a1, a2 = spec.weights.bounds()
    unit = _value(spec.with_weights(UnitWeights()), p)
    assert a1 * unit * (1 - 1e-12) <= _value(spec, p) <= a2 * unit * (1 + 1e-12)


@CASES
@given(transient_specs, exponents, exponents)
def p_monotonicity(spec, p1, p2):
    lo, hi = sorted((p1, p2))
    assert _value(spec, hi) <= _value(spec, lo) * (1 + 1e-12)


@CASES
@given(transient_specs, exponents)
def shell_upper_bound(spec, p):
    assert _value(spec, p) <= shell_mass_min(spec, 60) * (1 + 1e-12)


@CASES
@given(st.integers(0, 2**32 - 1))
def pairing_at_least_one(seed):
    rng = np.random.default_rng(seed)
    tree = random_tree(rng, int(rng.integers(1, 6)), max_edges=60)
    eta = np.zeros(tree.n_edges)
    eta[tree.shells[0]] = rng.dirichlet(np.ones(tree.shells[0].size))
    for shell in tree.shells[:-1]:
        for e in shell:
            kids = np.flatnonzero(tree.parents == e)
            eta[kids] = eta[e] * rng.dirichlet(np.ones(kids.size))
    assert validate_unit_flow(tree, eta)
    rho = rng.uniform(0.0, 1.0, tree.n_edges)
    rho /= path_lengths(tree, rho).min()
    assert pairing(tree, rho, UnitFlow(eta)) >= 1 - 1e-12


@CASES
@given(children_rules, three, st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=3), exponents)
def lipschitz(children, w, delta, p):
    w_hat = [max(0.2, min(5.0, x + d)) for x, d in zip(w, delta)]
    a1, a2 = min(w + w_hat), max(w + w_hat)
    v = _value(RadialTreeSpec(children, PeriodicWeights(tuple(w))), p)
    v_hat = _value(RadialTreeSpec(children, PeriodicWeights(tuple(w_hat))), p)
    unit = _value(RadialTreeSpec(children, UnitWeights()), p)
    dist = max(abs(x - y) for x, y in zip(w, w_hat))
    assert abs(v_hat - v) <= (a2 / a1) * unit * dist * (1 + 1e-9) + 1e-15


def test_10_property_suites():
    suites = [scaling, superadditivity, elliptic_sandwich, p_monotonicity, shell_upper_bound,
              pairing_at_least_one, lipschitz]
    t0 = time.perf_counter()
    failures = [f for f in map(_run_property, suites) if f]
    dt = time.perf_counter() - t0
    record(10, not failures, f"{len(suites)} suites x 200 cases, failures {failures}, {dt:.2f} s")


if __name__ == "__main__":
    import sys

    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                pass
    for n in sorted(RESULTS):
        print(RESULTS[n])
    sys.exit(0 if all("PASS" in line for line in RESULTS.values()) else 1)
