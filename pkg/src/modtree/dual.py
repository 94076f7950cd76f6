"""Unit flows, the density-flow pairing, and flow lower bounds on the modulus.

A unit flow puts mass 1 on the root shell and splits the mass of every
non-leaf edge among its children, so every shell carries mass 1.  For any
admissible density the pairing ``sum rho * eta`` is at least 1, which turns
each flow into a lower bound on the p-modulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import IndexMismatch, InvalidFlow
from .tree import FiniteTree, RadialTreeSpec, truncate, validate

CONSERVATION_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class UnitFlow:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class UniformShellFlow:
    """``eta = 1/|S_k|`` on every edge of shell ``k`` of a radial spec."""

    spec: RadialTreeSpec


@dataclass(frozen=True)
class FlowCheck:
    ok: bool
    location: Optional[Union[int, str]] = None
    detail: str = ""

    def __bool__(self):
        return self.ok


def _values(tree: FiniteTree, flow) -> np.ndarray:
    eta = np.asarray(flow.values if isinstance(flow, UnitFlow) else flow, dtype=float).reshape(-1)
    if eta.size != tree.n_edges:
        raise IndexMismatch(f"flow has {eta.size} entries for {tree.n_edges} edges")
    return eta


def validate_unit_flow(tree: FiniteTree, flow, atol: float = CONSERVATION_ATOL) -> FlowCheck:
    """Check nonnegativity, root mass 1 and conservation at every edge."""
    eta = _values(tree, flow)
    bad = np.flatnonzero(~np.isfinite(eta) | (eta < 0))
    if bad.size:
        i = int(bad[0])
        return FlowCheck(False, i, f"eta({i}) = {eta[i]} is negative or not finite")
    root = math.fsum(eta[tree.shells[0]])
    if abs(root - 1.0) > atol:
        return FlowCheck(False, "root", f"root shell mass {root!r} != 1")
    par = tree.parents
    inner = par >= 0
    below = np.bincount(par[inner], weights=eta[inner], minlength=tree.n_edges)
    has_kids = tree.n_children > 0
    err = np.where(has_kids, np.abs(below - eta), 0.0)
    i = int(np.argmax(err > atol)) if np.any(err > atol) else -1
    if i >= 0:
        return FlowCheck(False, i, f"children of edge {i} carry {below[i]!r}, edge carries {eta[i]!r}")
    return FlowCheck(True)


def pairing(tree: FiniteTree, density, flow) -> float:
    rho = np.asarray(density, dtype=float).reshape(-1)
    eta = _values(tree, flow)
    if rho.size != tree.n_edges:
        raise IndexMismatch(f"density has {rho.size} entries for {tree.n_edges} edges")
    return math.fsum(rho * eta)


def partial_pairing(tree: FiniteTree, density, flow, n: int) -> float:
    """Pairing restricted to the ball of generations ``1..n``."""
    rho = np.asarray(density, dtype=float).reshape(-1)
    eta = _values(tree, flow)
    mask = tree.generation <= n
    return math.fsum(rho[mask] * eta[mask])


def leaf_pairing(tree: FiniteTree, density, flow, n: Optional[int] = None) -> float:
    """``sum_{e in S_n} l_rho(path to e) * eta(e)``; equals the ball pairing."""
    rho = np.asarray(density, dtype=float).reshape(-1)
    eta = _values(tree, flow)
    n = tree.depth if n is None else n
    cols = tree.path_matrix[:, :n]
    # Leaf paths sharing a generation-n edge repeat it; keep one row each.
    ends, first = np.unique(cols[:, -1], return_index=True)
    lengths = rho[cols[first]].sum(axis=1)
    return math.fsum(lengths * eta[ends])


def uniform_flow(spec_or_tree: Union[RadialTreeSpec, FiniteTree], n: Optional[int] = None) -> UnitFlow:
    """``eta(e) = 1/|S_gen(e)|`` on a symmetric truncation."""
    tree = truncate(spec_or_tree, n) if isinstance(spec_or_tree, RadialTreeSpec) else spec_or_tree
    sizes = np.array([s.size for s in tree.shells], dtype=float)
    return UnitFlow(1.0 / sizes[tree.generation - 1])


def split_flow(tree: FiniteTree) -> UnitFlow:
    """Each edge passes its mass to its children in equal parts."""
    eta = np.zeros(tree.n_edges)
    eta[tree.shells[0]] = 1.0 / tree.shells[0].size
    for shell in tree.shells[1:]:
        par = tree.parents[shell]
        eta[shell] = eta[par] / tree.n_children[par]
    return UnitFlow(eta)


def path_flow(tree: FiniteTree, leaf_row: int) -> UnitFlow:
    """Indicator of the descending path ending at ``tree.leaves[leaf_row]``."""
    eta = np.zeros(tree.n_edges)
    eta[tree.path_matrix[leaf_row]] = 1.0
    return UnitFlow(eta)


def violating_flow(tree: FiniteTree, density) -> Optional[UnitFlow]:
    """A path-indicator flow pairing below 1 with ``density``, if any."""
    rho = np.asarray(density, dtype=float).reshape(-1)
    lengths = rho[tree.path_matrix].sum(axis=1)
    row = int(np.argmin(lengths))
    return path_flow(tree, row) if lengths[row] < 1 else None


def lower_bound(tree_or_spec, flow, p: float) -> float:
    """Flow lower bound on the p-modulus, ``p`` in ``[1, inf]``.

    Finite trees take any unit flow.  Radial specs take a
    :class:`UniformShellFlow`, the only infinite flow represented.
    """
    if isinstance(tree_or_spec, RadialTreeSpec):
        return _radial_lower_bound(tree_or_spec, flow, p)
    tree = tree_or_spec
    validate(tree)
    check = validate_unit_flow(tree, flow)
    if not check:
        raise InvalidFlow(check.detail)
    eta = _values(tree, flow)
    w = tree.weights
    if p == 1:
        return 1.0 / float(np.max(eta / w))
    if math.isinf(p):
        return 1.0 / math.fsum(eta / w)
    if not p > 1:
        raise InvalidFlow(f"exponent {p!r} outside [1, inf]")
    t = 1.0 / (p - 1.0)
    mask = eta > 0
    s = math.fsum(w[mask] ** (-t) * eta[mask] ** (t + 1.0))
    return s ** (-(p - 1.0))


def _radial_lower_bound(spec: RadialTreeSpec, flow, p: float) -> float:
    from .analytic import mod_1_infinite, mod_infty_infinite, mod_p_infinite

    if not isinstance(flow, UniformShellFlow) or flow.spec != spec:
        raise InvalidFlow("radial specs accept only their uniform shell flow")
    if p == 1:
        outcome = mod_1_infinite(spec)
    elif math.isinf(p):
        outcome = mod_infty_infinite(spec)
    else:
        outcome = mod_p_infinite(spec, p)
    if outcome.is_inconclusive:
        return outcome.bounds[0]
    return outcome.value
