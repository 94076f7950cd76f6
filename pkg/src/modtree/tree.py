"""Rooted trees: generator-described radial specs and explicit finite trees.

Generations are counted from the root.  ``C(k)`` is the number of children
of every edge in generation ``k``; ``C(0)`` is the root degree, so
``|S_1| = C(0)`` and ``|S_k| = C(0) C(1) ... C(k-1)``.  Weights ``sigma_k``
are indexed by generation ``k >= 1``.

Finite trees store edges in breadth-first order (generation, then parent
order) when built by :func:`truncate`; explicit trees only need every
parent to precede its children.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import (
    NonPositiveWeight,
    NonUniformDepth,
    OrphanEdge,
    SchemaError,
    ShellOverflow,
    TooLarge,
    ValidationError,
    ZeroChildrenRule,
)
from .skips import SkipSequence, gap_from_dict

SCHEMA_VERSION = 1
ROOT = -1
DEFAULT_MAX_EDGES = 10_000_000
MAX_SHELL_BITS = 1 << 22


def max_edges() -> int:
    """Edge cap for materialized trees; ``MODTREE_MAX_EDGES`` overrides."""
    raw = os.environ.get("MODTREE_MAX_EDGES")
    return int(raw) if raw else DEFAULT_MAX_EDGES


def scaled(n: int, log2_factor: float) -> float:
    """``n * 2**log2_factor`` without overflowing on huge integers."""
    if n == 0:
        return 0.0
    bits = n.bit_length()
    if bits > 60:
        shift = bits - 60
        n >>= shift
        log2_factor += shift
    try:
        return n * 2.0**log2_factor
    except OverflowError:
        return math.inf


def log2_int(n: int) -> float:
    bits = n.bit_length()
    if bits <= 60:
        return math.log2(n)
    shift = bits - 60
    return math.log2(n >> shift) + shift


# -- children rules -----------------------------------------------------------


class PeriodicProfile(NamedTuple):
    """For ``k >= start``: ``C(k) = values[(k - start) % len(values)]``."""

    start: int
    values: tuple


class ChildrenRule:
    def children(self, k: int) -> int:
        raise NotImplementedError

    def profile(self):
        """PeriodicProfile, the SkipSequence, or None without a tail rule."""
        raise NotImplementedError

    def check(self) -> None:
        """Raise ZeroChildrenRule on the first count below one."""

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantChildren(ChildrenRule):
    value: int = 2

    def children(self, k: int) -> int:
        return self.value

    def profile(self):
        return PeriodicProfile(0, (self.value,))

    def check(self) -> None:
        if self.value < 1:
            raise ZeroChildrenRule(f"C(k) = {self.value} < 1 for every k", 0)

    def to_dict(self) -> dict:
        return {"rule": "constant", "value": self.value}


@dataclass(frozen=True)
class PeriodicChildren(ChildrenRule):
    values: tuple = (1, 2)

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if not self.values:
            raise ValueError("periodic children need at least one value")

    def children(self, k: int) -> int:
        return self.values[k % len(self.values)]

    def profile(self):
        return PeriodicProfile(0, self.values)

    def check(self) -> None:
        for k, v in enumerate(self.values):
            if v < 1:
                raise ZeroChildrenRule(f"C({k}) = {v} < 1", k)

    def to_dict(self) -> dict:
        return {"rule": "periodic", "values": list(self.values)}


@dataclass(frozen=True)
class GeometricChildren(ChildrenRule):
    """Closed form: ``C(k) = value`` from generation ``start`` on, 1 before."""

    value: int = 2
    start: int = 0

    def children(self, k: int) -> int:
        return self.value if k >= self.start else 1

    def profile(self):
        return PeriodicProfile(self.start, (self.value,))

    def check(self) -> None:
        if self.value < 1:
            raise ZeroChildrenRule(f"C(k) = {self.value} < 1 for k >= {self.start}", self.start)

    def to_dict(self) -> dict:
        return {"rule": "geometric", "value": self.value, "start": self.start}


@dataclass(frozen=True)
class PrefixChildren(ChildrenRule):
    """``C(k) = prefix[k]`` for ``k < len(prefix)``, then the tail rule."""

    prefix: tuple
    tail: Optional[ChildrenRule] = None

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(v) for v in self.prefix))
        if isinstance(self.tail, SkipChildren):
            raise ValueError("a skip rule cannot be the tail of an explicit prefix")

    def children(self, k: int) -> int:
        if k < len(self.prefix):
            return self.prefix[k]
        if self.tail is None:
            raise IndexError(f"C({k}) lies beyond the explicit prefix")
        return self.tail.children(k)

    def profile(self):
        if self.tail is None:
            return None
        inner = self.tail.profile()
        start = max(len(self.prefix), inner.start)
        return PeriodicProfile(
            start, tuple(self.tail.children(start + i) for i in range(len(inner.values)))
        )

    def check(self) -> None:
        for k, v in enumerate(self.prefix):
            if v < 1:
                raise ZeroChildrenRule(f"C({k}) = {v} < 1", k)
        if self.tail is not None:
            self.tail.check()

    def to_dict(self) -> dict:
        return {
            "rule": "prefix",
            "prefix": list(self.prefix),
            "tail": None if self.tail is None else self.tail.to_dict(),
        }


@dataclass(frozen=True)
class SkipChildren(ChildrenRule):
    """1-2 tree: ``|S_k| = 2**(number of branching generations <= k)``."""

    skip: SkipSequence = field(default_factory=SkipSequence)

    def children(self, k: int) -> int:
        target = k + 1
        for b in self.skip.branchings():
            if b == target:
                return 2
            if b > target:
                break
        return 1

    def profile(self):
        return self.skip

    def check(self) -> None:
        if self.skip.first < 1:
            raise ZeroChildrenRule("first branching generation must be >= 1", 0)
        g = self.skip.gaps
        if g is not None:
            prefix = getattr(g, "prefix", ())
            for j, c in enumerate(prefix, start=1):
                if c < 1:
                    raise ZeroChildrenRule(f"skip gap c_{j} = {c} < 1", j)

    def to_dict(self) -> dict:
        return {"rule": "skip", **self.skip.to_dict()}


# -- weight rules ---------------------------------------------------------------


class WeightProfile(NamedTuple):
    """For ``k >= start``: ``sigma_k = pi_k * ratio**k * k**exponent``
    with ``pi`` positive and periodic of length ``period``."""

    start: int
    ratio: Fraction
    exponent: float
    period: int


class WeightRule:
    def weight(self, k: int) -> float:
        raise NotImplementedError

    def log2_weight(self, k: int) -> float:
        return math.log2(self.weight(k))

    def profile(self) -> Optional[WeightProfile]:
        raise NotImplementedError

    def bounds(self):
        """``(lo, hi)`` over all generations, or None when unbounded."""
        raise NotImplementedError

    def power_sum(self, start: int, count: int, a: float, log2_scale: float = 0.0) -> float:
        """``2**log2_scale * sum(sigma_k**-a for k in [start, start + count))``."""
        raise NotImplementedError

    def range_min(self, start: int, count: int) -> float:
        raise NotImplementedError

    def check(self) -> None:
        pass

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class UnitWeights(WeightRule):
    def weight(self, k: int) -> float:
        return 1.0

    def profile(self):
        return WeightProfile(1, Fraction(1), 0.0, 1)

    def bounds(self):
        return (1.0, 1.0)

    def power_sum(self, start, count, a, log2_scale=0.0):
        return scaled(count, log2_scale)

    def range_min(self, start, count):
        return 1.0

    def to_dict(self):
        return {"rule": "unit"}


@dataclass(frozen=True)
class PeriodicWeights(WeightRule):
    """``sigma_k = values[(k - 1) % len(values)]``; a constant is one value."""

    values: tuple = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError("periodic weights need at least one value")

    def weight(self, k):
        return self.values[(k - 1) % len(self.values)]

    def profile(self):
        return WeightProfile(1, Fraction(1), 0.0, len(self.values))

    def bounds(self):
        return (min(self.values), max(self.values))

    def power_sum(self, start, count, a, log2_scale=0.0):
        if count <= 0:
            return 0.0
        P = len(self.values)
        lo, hi = start - 1, start + count - 2
        total = 0.0
        for r, v in enumerate(self.values):
            n = (hi - r) // P - (lo - 1 - r) // P
            if n:
                total += scaled(n, log2_scale) * v ** (-a)
        return total

    def range_min(self, start, count):
        P = len(self.values)
        if count >= P:
            return min(self.values)
        return min(self.weight(k) for k in range(start, start + count))

    def check(self):
        for i, v in enumerate(self.values):
            if not v > 0 or not math.isfinite(v):
                raise NonPositiveWeight(f"periodic weight {v} at k={i + 1} is not positive", i + 1)

    def to_dict(self):
        return {"rule": "periodic", "values": list(self.values)}


@dataclass(frozen=True)
class GeometricWeights(WeightRule):
    """``sigma_k = theta * ratio**k``."""

    theta: float = 1.0
    ratio: float = 2.0

    def weight(self, k):
        try:
            return self.theta * self.ratio**k
        except OverflowError:
            return math.inf

    def log2_weight(self, k):
        return math.log2(self.theta) + k * math.log2(self.ratio)

    def profile(self):
        return WeightProfile(1, Fraction(self.ratio), 0.0, 1)

    def bounds(self):
        if self.ratio == 1:
            return (self.theta, self.theta)
        return None

    def power_sum(self, start, count, a, log2_scale=0.0):
        if count <= 0:
            return 0.0
        lx = -a * math.log2(self.ratio)
        base = -a * math.log2(self.theta) + start * lx + log2_scale
        if lx == 0:
            return scaled(count, base)
        # sum_{i<count} 2**(i*lx) = (2**(count*lx) - 1) / (2**lx - 1)
        if lx < 0:
            tail = -math.expm1(max(count * lx, -1e4) * math.log(2))
            return 2.0 ** base * tail / -math.expm1(lx * math.log(2))
        try:
            return 2.0 ** (base + count * lx) * -math.expm1(-count * lx * math.log(2)) / -math.expm1(-lx * math.log(2)) * 2.0 ** (-lx)
        except OverflowError:
            return math.inf

    def range_min(self, start, count):
        k = start if self.ratio >= 1 else start + count - 1
        return self.weight(k)

    def check(self):
        if not (self.theta > 0 and self.ratio > 0):
            raise NonPositiveWeight("geometric weights need theta > 0 and ratio > 0", 1)

    def to_dict(self):
        return {"rule": "geometric", "theta": self.theta, "ratio": self.ratio}


@dataclass(frozen=True)
class PowerLawWeights(WeightRule):
    """``sigma_k = theta * k**exponent``."""

    theta: float = 1.0
    exponent: float = 2.0

    def weight(self, k):
        return self.theta * float(k) ** self.exponent

    def log2_weight(self, k):
        return math.log2(self.theta) + self.exponent * math.log2(k)

    def profile(self):
        return WeightProfile(1, Fraction(1), float(self.exponent), 1)

    def bounds(self):
        if self.exponent == 0:
            return (self.theta, self.theta)
        return None

    def power_sum(self, start, count, a, log2_scale=0.0):
        if count <= 0:
            return 0.0
        s = a * self.exponent
        factor = self.theta ** (-a)
        if count <= 4096:
            ks = np.arange(start, start + count, dtype=float)
            return float(np.sum(ks ** (-s))) * factor * 2.0**log2_scale
        import mpmath

        if s == 1:
            total = mpmath.digamma(start + count) - mpmath.digamma(start)
        else:
            total = mpmath.zeta(s, start) - mpmath.zeta(s, start + count)
        return float(total * mpmath.mpf(2) ** log2_scale) * factor

    def range_min(self, start, count):
        k = start if self.exponent >= 0 else start + count - 1
        return self.weight(k)

    def check(self):
        if not self.theta > 0:
            raise NonPositiveWeight("power-law weights need theta > 0", 1)

    def to_dict(self):
        return {"rule": "power", "theta": self.theta, "exponent": self.exponent}


@dataclass(frozen=True)
class PrefixWeights(WeightRule):
    """``sigma_k = prefix[k - 1]`` for ``k <= len(prefix)``, then the tail."""

    prefix: tuple
    tail: Optional[WeightRule] = None

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(float(v) for v in self.prefix))

    def weight(self, k):
        if k <= len(self.prefix):
            return self.prefix[k - 1]
        if self.tail is None:
            raise IndexError(f"sigma_{k} lies beyond the explicit prefix")
        return self.tail.weight(k)

    def log2_weight(self, k):
        if k <= len(self.prefix):
            return math.log2(self.prefix[k - 1])
        if self.tail is None:
            raise IndexError(f"sigma_{k} lies beyond the explicit prefix")
        return self.tail.log2_weight(k)

    def profile(self):
        if self.tail is None:
            return None
        inner = self.tail.profile()
        if inner is None:
            return None
        return inner._replace(start=max(len(self.prefix) + 1, inner.start))

    def bounds(self):
        if self.tail is None:
            return None
        inner = self.tail.bounds()
        if inner is None:
            return None
        vals = self.prefix
        return (min((inner[0], *vals)), max((inner[1], *vals)))

    def power_sum(self, start, count, a, log2_scale=0.0):
        n = len(self.prefix)
        total = 0.0
        end = start + count
        head_end = min(end, n + 1)
        for k in range(start, head_end):
            total += self.prefix[k - 1] ** (-a) * 2.0**log2_scale
        rest_start = max(start, n + 1)
        if rest_start < end:
            if self.tail is None:
                raise IndexError("weight range extends beyond the explicit prefix")
            total += self.tail.power_sum(rest_start, end - rest_start, a, log2_scale)
        return total

    def range_min(self, start, count):
        n = len(self.prefix)
        end = start + count
        vals = [self.prefix[k - 1] for k in range(start, min(end, n + 1))]
        rest_start = max(start, n + 1)
        if rest_start < end:
            vals.append(self.tail.range_min(rest_start, end - rest_start))
        return min(vals)

    def check(self):
        for i, v in enumerate(self.prefix):
            if not v > 0 or not math.isfinite(v):
                raise NonPositiveWeight(f"sigma_{i + 1} = {v} is not positive", i + 1)
        if self.tail is not None:
            self.tail.check()

    def to_dict(self):
        return {
            "rule": "prefix",
            "prefix": list(self.prefix),
            "tail": None if self.tail is None else self.tail.to_dict(),
        }


# -- radial spec --------------------------------------------------------------


@dataclass(frozen=True)
class RadialTreeSpec:
    """Radially symmetric tree: children count and weight per generation."""

    children: ChildrenRule = field(default_factory=ConstantChildren)
    weights: WeightRule = field(default_factory=UnitWeights)

    def children_count(self, k: int) -> int:
        return self.children.children(k)

    def weight(self, k: int) -> float:
        return self.weights.weight(k)

    @property
    def has_tail(self) -> bool:
        return self.children.profile() is not None and self.weights.profile() is not None

    def iter_shell_sizes(self) -> Iterator[int]:
        """Yield ``|S_1|, |S_2|, ...`` as exact integers."""
        rule = self.children
        if isinstance(rule, SkipChildren):
            size, k = 1, 1
            for b in rule.skip.branchings():
                while k < b:
                    yield size
                    k += 1
                size *= 2
            while True:
                yield size
        size, k = 1, 0
        while True:
            size *= rule.children(k)
            if size.bit_length() > MAX_SHELL_BITS:
                raise ShellOverflow(f"|S_{k + 1}| exceeds 2**{MAX_SHELL_BITS}")
            yield size
            k += 1

    def shell_sizes(self, n: int) -> list:
        it = self.iter_shell_sizes()
        return [next(it) for _ in range(n)]

    def with_weights(self, weights: WeightRule) -> "RadialTreeSpec":
        return RadialTreeSpec(self.children, weights)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "radial",
            "children": self.children.to_dict(),
            "weights": self.weights.to_dict(),
        }


def binary_tree() -> RadialTreeSpec:
    return RadialTreeSpec(ConstantChildren(2), UnitWeights())


def path_tree(weights: Optional[WeightRule] = None) -> RadialTreeSpec:
    return RadialTreeSpec(ConstantChildren(1), weights or UnitWeights())


def shell_size(spec: RadialTreeSpec, k: int) -> int:
    """``|S_k| = C(0) C(1) ... C(k-1)`` for ``k >= 1``, exact."""
    if k < 1:
        raise ValueError("shell index must be >= 1")
    validate(spec)
    if isinstance(spec.children, SkipChildren):
        count = 0
        for b in spec.children.skip.branchings():
            if b > k:
                break
            count += 1
        return 1 << count
    prof = spec.children.profile()
    if isinstance(prof, PeriodicProfile) and k > prof.start + len(prof.values):
        # Whole periods go through pow; the log estimate rejects huge shells early.
        head = shell_size(spec, prof.start) if prof.start > 0 else 1
        reps, rest = divmod(k - prof.start, len(prof.values))
        period = math.prod(prof.values)
        bits = math.log2(head) + reps * math.log2(period) + sum(math.log2(c) for c in prof.values[:rest])
        if bits > MAX_SHELL_BITS + 1:
            raise ShellOverflow(f"|S_{k}| exceeds 2**{MAX_SHELL_BITS}", k)
        size = head * period**reps * math.prod(prof.values[:rest])
        if size.bit_length() > MAX_SHELL_BITS:
            raise ShellOverflow(f"|S_{k}| exceeds 2**{MAX_SHELL_BITS}", k)
        return size
    size = 1
    for j in range(k):
        size *= spec.children.children(j)
        if size.bit_length() > MAX_SHELL_BITS:
            raise ShellOverflow(f"|S_{j + 1}| exceeds 2**{MAX_SHELL_BITS}", j + 1)
    return size


# -- finite trees -------------------------------------------------------------


class DescendingPath(NamedTuple):
    """Edge indices from a root child down to a leaf."""

    edges: tuple

    def __len__(self):
        return len(self.edges)


@dataclass(frozen=True, eq=False)
class FiniteTree:
    """Explicit rooted weighted tree.

    ``parents[i]`` is the parent edge of edge ``i`` or ``ROOT``.  Parents
    must precede children in the indexing.
    """

    parents: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        parents = np.array(self.parents, dtype=np.int64).reshape(-1)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if parents.shape != weights.shape:
            raise ValidationError("parents and weights must have equal length")
        parents.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_parents(cls, parents: Sequence[int], weights=None) -> "FiniteTree":
        if weights is None:
            weights = np.ones(len(parents))
        return cls(np.asarray(parents), np.asarray(weights))

    @property
    def n_edges(self) -> int:
        return int(self.parents.size)

    @cached_property
    def generation(self) -> np.ndarray:
        gen = np.zeros(self.n_edges, dtype=np.int64)
        par = self.parents
        for i in range(self.n_edges):
            p = par[i]
            if p == ROOT:
                gen[i] = 1
            elif 0 <= p < i:
                gen[i] = gen[p] + 1
            else:
                raise OrphanEdge(f"edge {i} has parent {p}, which does not precede it", i)
        gen.flags.writeable = False
        return gen

    @cached_property
    def n_children(self) -> np.ndarray:
        inner = self.parents[self.parents != ROOT]
        return np.bincount(inner, minlength=self.n_edges)

    @cached_property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.n_children == 0)

    @property
    def depth(self) -> int:
        return int(self.generation.max()) if self.n_edges else 0

    @cached_property
    def shells(self) -> list:
        """``shells[k-1]`` holds the edge indices of generation ``k``."""
        gen = self.generation
        return [np.flatnonzero(gen == k) for k in range(1, self.depth + 1)]

    @cached_property
    def path_matrix(self) -> np.ndarray:
        """Row ``i`` lists the edges of the path ending at ``leaves[i]``."""
        n = self.depth
        mat = np.empty((self.leaves.size, n), dtype=np.int64)
        cur = self.leaves.copy()
        for col in range(n - 1, -1, -1):
            mat[:, col] = cur
            cur = self.parents[cur]
        mat.flags.writeable = False
        return mat

    @cached_property
    def incidence(self):
        """Sparse path-by-edge 0/1 matrix, rows ordered like ``leaves``."""
        from scipy import sparse

        mat = self.path_matrix
        rows = np.repeat(np.arange(mat.shape[0]), mat.shape[1])
        data = np.ones(mat.size)
        return sparse.csr_matrix((data, (rows, mat.reshape(-1))), shape=(mat.shape[0], self.n_edges))

    def is_radially_symmetric(self, rtol: float = 0.0) -> bool:
        """True when children counts and weights depend only on generation."""
        for shell in self.shells:
            w = self.weights[shell]
            c = self.n_children[shell]
            if c.min() != c.max():
                return False
            if w.max() - w.min() > rtol * w.max():
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "finite",
            "parents": [int(p) for p in self.parents],
            "weights": [float(w) for w in self.weights],
        }


def truncate(spec: RadialTreeSpec, n: int, edge_cap: Optional[int] = None) -> FiniteTree:
    """Materialize generations ``1..n`` of a radial spec, breadth-first."""
    if n < 1:
        raise ValueError("truncation depth must be >= 1")
    validate(spec, require_tail=False)
    cap = max_edges() if edge_cap is None else edge_cap
    sizes = []
    total = 0
    for k, size in enumerate(spec.iter_shell_sizes(), start=1):
        if k > n:
            break
        total += size
        if total > cap:
            raise TooLarge(f"truncation at depth {n} needs more than {cap} edges")
        sizes.append(size)
    parents = [np.full(sizes[0], ROOT, dtype=np.int64)]
    weights = [np.full(sizes[0], spec.weight(1))]
    offset = 0
    for k in range(2, n + 1):
        prev = np.arange(offset, offset + sizes[k - 2], dtype=np.int64)
        parents.append(np.repeat(prev, spec.children_count(k - 1)))
        weights.append(np.full(sizes[k - 1], spec.weight(k)))
        offset += sizes[k - 2]
    return FiniteTree(np.concatenate(parents), np.concatenate(weights))


def enumerate_paths(tree: FiniteTree) -> list:
    """One descending path per leaf, in leaf-index order."""
    return [DescendingPath(tuple(int(e) for e in row)) for row in tree.path_matrix]


def random_tree(
    rng: np.random.Generator,
    depth: int,
    max_edges: int = 500,
    max_children: int = 3,
    weight_range=(0.1, 10.0),
    unit_weights: bool = False,
) -> FiniteTree:
    """Random uniform-depth proper tree (every non-leaf edge has a child)."""
    parents = []
    weights = []
    first = int(rng.integers(1, max_children + 1))
    frontier = list(range(first))
    parents.extend([ROOT] * first)
    for k in range(2, depth + 1):
        remaining_levels = depth - k
        budget = max_edges - len(parents) - remaining_levels * len(frontier)
        nxt = []
        for idx, e in enumerate(frontier):
            still = len(frontier) - idx - 1
            room = budget - len(nxt) - still
            hi = max(1, min(max_children, room))
            c = int(rng.integers(1, hi + 1))
            for _ in range(c):
                nxt.append(len(parents))
                parents.append(e)
        frontier = nxt
    if unit_weights:
        weights = np.ones(len(parents))
    else:
        weights = rng.uniform(*weight_range, size=len(parents))
    return FiniteTree(np.array(parents), weights)


# -- validation ---------------------------------------------------------------


def validate(obj: Union[RadialTreeSpec, FiniteTree], require_tail: bool = False) -> bool:
    """Check every invariant; raise the first violation, else return True."""
    if isinstance(obj, RadialTreeSpec):
        obj.children.check()
        obj.weights.check()
        if require_tail and not obj.has_tail:
            from .errors import NoTailRule

            raise NoTailRule("infinite-tree computation needs a tail rule")
        return True
    if isinstance(obj, FiniteTree):
        if obj.n_edges == 0:
            raise OrphanEdge("tree has no edges", None)
        par = obj.parents
        bad = np.flatnonzero((par != ROOT) & ((par < 0) | (par >= np.arange(obj.n_edges))))
        if bad.size:
            i = int(bad[0])
            raise OrphanEdge(f"edge {i} has parent {int(par[i])}, which does not precede it", i)
        w = obj.weights
        bad = np.flatnonzero(~(w > 0) | ~np.isfinite(w))
        if bad.size:
            i = int(bad[0])
            raise NonPositiveWeight(f"edge {i} has weight {w[i]}", i)
        gen = obj.generation
        depth = obj.depth
        leaves = obj.leaves
        short = leaves[gen[leaves] != depth]
        if short.size:
            i = int(short[0])
            raise NonUniformDepth(f"leaf edge {i} sits at depth {int(gen[i])}, expected {depth}", i)
        return True
    raise TypeError(f"cannot validate {type(obj).__name__}")


# -- documents ----------------------------------------------------------------


def _children_from_dict(doc, path):
    if not isinstance(doc, dict) or "rule" not in doc:
        raise SchemaError(f"{path}: expected an object with a 'rule' field", path)
    kind = doc["rule"]
    try:
        if kind == "constant":
            return ConstantChildren(int(doc["value"]))
        if kind == "periodic":
            return PeriodicChildren(tuple(doc["values"]))
        if kind == "geometric":
            return GeometricChildren(int(doc["value"]), int(doc.get("start", 0)))
        if kind == "prefix":
            tail = doc.get("tail")
            return PrefixChildren(
                tuple(doc["prefix"]), None if tail is None else _children_from_dict(tail, f"{path}.tail")
            )
        if kind == "skip":
            return SkipChildren(
                SkipSequence(gap_from_dict(doc.get("gaps"), f"{path}.gaps"), int(doc.get("first", 1)))
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{path}: bad '{kind}' children rule ({exc})", path) from exc
    raise SchemaError(f"{path}: unknown children rule '{kind}'", path)


def _weights_from_dict(doc, path):
    if doc is None:
        return UnitWeights()
    if not isinstance(doc, dict) or "rule" not in doc:
        raise SchemaError(f"{path}: expected an object with a 'rule' field", path)
    kind = doc["rule"]
    try:
        if kind == "unit":
            return UnitWeights()
        if kind == "periodic":
            return PeriodicWeights(tuple(doc["values"]))
        if kind == "constant":
            return PeriodicWeights((float(doc["value"]),))
        if kind == "geometric":
            return GeometricWeights(float(doc.get("theta", 1.0)), float(doc["ratio"]))
        if kind == "power":
            return PowerLawWeights(float(doc.get("theta", 1.0)), float(doc["exponent"]))
        if kind == "prefix":
            tail = doc.get("tail")
            return PrefixWeights(
                tuple(doc["prefix"]), None if tail is None else _weights_from_dict(tail, f"{path}.tail")
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{path}: bad '{kind}' weight rule ({exc})", path) from exc
    raise SchemaError(f"{path}: unknown weight rule '{kind}'", path)


def from_dict(doc) -> Union[RadialTreeSpec, FiniteTree]:
    if not isinstance(doc, dict):
        raise SchemaError("document root must be an object", "$")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r}", "schema_version")
    kind = doc.get("kind")
    if kind == "radial":
        if "children" not in doc:
            raise SchemaError("radial spec needs 'children'", "children")
        return RadialTreeSpec(
            _children_from_dict(doc["children"], "children"),
            _weights_from_dict(doc.get("weights"), "weights"),
        )
    if kind == "finite":
        parents = doc.get("parents")
        if not isinstance(parents, list):
            raise SchemaError("finite tree needs a 'parents' array", "parents")
        weights = doc.get("weights")
        if weights is not None and (not isinstance(weights, list) or len(weights) != len(parents)):
            raise SchemaError("'weights' must be an array as long as 'parents'", "weights")
        try:
            return FiniteTree.from_parents(parents, weights)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"bad finite tree arrays ({exc})", "parents") from exc
    raise SchemaError(f"unknown kind {kind!r}", "kind")


def loads(text: str) -> Union[RadialTreeSpec, FiniteTree]:
    """Parse a tree-spec document; JSON errors carry line and column."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(
            f"line {exc.lineno}, column {exc.colno}: {exc.msg}", (exc.lineno, exc.colno)
        ) from exc
    return from_dict(doc)


def load(path) -> Union[RadialTreeSpec, FiniteTree]:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(obj: Union[RadialTreeSpec, FiniteTree]) -> str:
    return json.dumps(obj.to_dict(), indent=2)
