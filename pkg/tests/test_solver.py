import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modtree.analytic import mod_p_truncated
from modtree.critical import construct_tree_with_pc, skip_to_spec
from modtree.errors import DegenerateExponent, IndexMismatch, TooLarge
from modtree.solver import (
    SolveOptions,
    energy,
    path_lengths,
    rho_length,
    series_parallel_modulus,
    shell_average,
    solve_finite_modulus,
    symmetrize_check,
)
from modtree.tree import (
    ConstantChildren,
    DescendingPath,
    FiniteTree,
    PeriodicWeights,
    RadialTreeSpec,
    binary_tree,
    random_tree,
    truncate,
)

from oracles import truncated_fraction


def star(r):
    return FiniteTree.from_parents([-1] * r)


def test_energy_and_length():
    tree = FiniteTree.from_parents([-1, 0, 0], [2.0, 1.0, 3.0])
    rho = np.array([0.5, 0.5, 0.25])
    assert energy(tree, rho, 2) == pytest.approx(2 * 0.25 + 0.25 + 3 * 0.0625)
    assert energy(tree, rho, math.inf) == pytest.approx(1.0)
    assert rho_length(tree, rho, DescendingPath((0, 2))) == 0.75
    assert path_lengths(tree, rho).tolist() == [1.0, 0.75]
    with pytest.raises(IndexMismatch):
        rho_length(tree, rho, DescendingPath((0, 5)))
    with pytest.raises(IndexMismatch):
        energy(tree, rho[:2], 2)


def test_series_parallel_small():
    # two unit edges in series: 1/2; binary depth 2: 4/3 at p = 2
    assert series_parallel_modulus(FiniteTree.from_parents([-1, 0]), 2) == pytest.approx(0.5)
    tree = truncate(binary_tree(), 2)
    assert series_parallel_modulus(tree, 2) == pytest.approx(4 / 3)
    with pytest.raises(DegenerateExponent):
        series_parallel_modulus(tree, 1)


@pytest.mark.parametrize("p", [1.3, 2.0, 4.0])
def test_solver_matches_fraction_oracle(p):
    tree = truncate(RadialTreeSpec(ConstantChildren(3)), 3)
    rep = solve_finite_modulus(tree, SolveOptions(p=p))
    if p == 2.0:
        assert rep.value == pytest.approx(float(truncated_fraction([3, 9, 27], [1, 1, 1], 2)), rel=1e-9)
    assert rep.value == pytest.approx(mod_p_truncated(RadialTreeSpec(ConstantChildren(3)), p, 3).value, rel=1e-9)
    assert rep.lower_bound <= rep.value
    assert rep.max_violation <= 1e-8


def test_random_trees_against_series_parallel(rng):
    worst = 0.0
    for _ in range(30):
        tree = random_tree(rng, int(rng.integers(2, 7)), max_edges=200)
        for p in (1.3, 2.0, 4.0):
            rep = solve_finite_modulus(tree, SolveOptions(p=p))
            ref = series_parallel_modulus(tree, p)
            worst = max(worst, abs(rep.value - ref) / ref)
            assert rep.lower_bound <= ref * (1 + 1e-12)
            assert rep.converged
    assert worst <= 1e-6


def test_symmetric_density_is_shell_constant():
    tree = truncate(binary_tree(), 6)
    rep = solve_finite_modulus(tree, SolveOptions(p=2))
    assert symmetrize_check(tree, rep).ok


def test_shell_average_improves_on_symmetric_tree(rng):
    tree = truncate(binary_tree(), 5)
    rho = rng.uniform(0.0, 1.0, tree.n_edges)
    rho /= path_lengths(tree, rho).min()
    avg = shell_average(tree, rho)
    assert path_lengths(tree, avg).min() >= 1 - 1e-12
    assert energy(tree, avg, 2.5) < energy(tree, rho, 2.5)
    verdict = symmetrize_check(tree, rho)
    assert not verdict.ok and verdict.worst_shell is not None


def test_symmetry_check_examples():
    tree = truncate(binary_tree(), 3)
    assert symmetrize_check(tree, solve_finite_modulus(tree, SolveOptions(p=2)), 1e-5).ok
    one = truncate(RadialTreeSpec(ConstantChildren(3)), 1)
    assert symmetrize_check(one, solve_finite_modulus(one, SolveOptions(p=3))).ok


def test_first_shell_indicator_is_feasible(rng):
    for _ in range(20):
        tree = random_tree(rng, int(rng.integers(1, 6)))
        rho = np.zeros(tree.n_edges)
        rho[tree.shells[0]] = 1.0
        assert path_lengths(tree, rho).min() == 1.0
        assert energy(tree, rho, 2.0) == pytest.approx(tree.weights[tree.shells[0]].sum())
        assert solve_finite_modulus(tree, SolveOptions(p=2)).value <= energy(tree, rho, 2.0) * (1 + 1e-12)


@pytest.mark.parametrize("r", [2, 3, 5])
def test_one_modulus_of_star(r):
    rep = solve_finite_modulus(star(r), SolveOptions(p=1))
    assert rep.value == pytest.approx(r)
    assert rep.canonical


def test_one_modulus_picks_min_shell():
    tree = truncate(binary_tree().with_weights(PeriodicWeights((5.0, 0.2))), 4)
    rep = solve_finite_modulus(tree, SolveOptions(p=1))
    assert rep.value == pytest.approx(min(5 * 2, 0.2 * 4, 5 * 8, 0.2 * 16))


def test_options_validation():
    with pytest.raises(DegenerateExponent):
        SolveOptions(p=0.5)
    with pytest.raises(DegenerateExponent):
        SolveOptions(p=math.inf)
    with pytest.raises(TooLarge):
        solve_finite_modulus(truncate(binary_tree(), 6), SolveOptions(max_leaves=10))


def test_skip_construction_truncation():
    spec = skip_to_spec(construct_tree_with_pc(2))
    tree = truncate(spec, 10)
    rep = solve_finite_modulus(tree, SolveOptions(p=2))
    assert rep.value == pytest.approx(mod_p_truncated(spec, 2, 10).value, rel=1e-8)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.floats(1.2, 5.0))
def test_nested_truncations_decrease(seed, depth, p):
    rng = np.random.default_rng(seed)
    tree = random_tree(rng, depth + 1, max_edges=80)
    deep = series_parallel_modulus(tree, p)
    keep = np.flatnonzero(tree.generation <= depth)
    shallow = FiniteTree(tree.parents[keep], tree.weights[keep])
    assert deep <= series_parallel_modulus(shallow, p) * (1 + 1e-12)
