"""Random walks on radially symmetric trees.

The walk is the conductance-weighted nearest-neighbour walk: from a vertex
it crosses an incident edge with probability proportional to the edge
weight.  By symmetry only the generation of the walker matters, so a
depth-``D`` tree is never materialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .analytic import mod_2_infinite, mod_p_truncated
from .errors import InconclusiveModulus, TooLarge
from .tree import RadialTreeSpec, validate

MAX_DEPTH = 1_000_000
Z95 = 1.96


@dataclass(frozen=True)
class WalkConfig:
    spec: RadialTreeSpec
    depth: int
    walks: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.walks < 1:
            raise ValueError("walk count must be >= 1")


@dataclass(frozen=True)
class WalkStats:
    escape: float
    half_width: float
    walks: int
    depth: int
    seed: int

    @property
    def interval(self):
        return (self.escape - self.half_width, self.escape + self.half_width)


def down_probabilities(spec: RadialTreeSpec, depth: int) -> np.ndarray:
    """``P(step down)`` from a vertex at generation ``k``, ``k = 1..depth-1``.

    The vertex has one parent edge of weight ``sigma_k`` and ``C(k)`` child
    edges of weight ``sigma_{k+1}``.
    """
    out = np.empty(max(depth - 1, 0))
    for k in range(1, depth):
        down = spec.children_count(k) * spec.weight(k + 1)
        out[k - 1] = down / (down + spec.weight(k))
    return out


def simulate_escape(cfg: WalkConfig) -> WalkStats:
    """Fraction of walks from the root reaching generation ``D`` before
    returning to the root."""
    validate(cfg.spec)
    if cfg.depth > MAX_DEPTH:
        raise TooLarge(f"depth {cfg.depth} exceeds {MAX_DEPTH}")
    rng = np.random.default_rng(cfg.seed)
    D = cfg.depth
    n = cfg.walks
    if D == 1:
        return WalkStats(1.0, 0.0, n, D, cfg.seed)
    p_down = down_probabilities(cfg.spec, D)
    level = np.ones(n, dtype=np.int64)
    active = np.arange(n)
    escaped = 0
    while active.size:
        lv = level[active]
        step = np.where(rng.random(active.size) < p_down[lv - 1], 1, -1)
        lv = lv + step
        level[active] = lv
        done = (lv == 0) | (lv == D)
        escaped += int(np.count_nonzero(lv == D))
        active = active[~done]
    p_hat = escaped / n
    half = Z95 * math.sqrt(p_hat * (1 - p_hat) / n)
    return WalkStats(p_hat, half, n, D, cfg.seed)


def predicted_escape(spec: RadialTreeSpec, depth: Union[int, float] = math.inf) -> float:
    """Effective conductance to generation ``depth`` over the root conductance."""
    validate(spec)
    root = spec.weight(1) * spec.children_count(0)
    if math.isinf(depth):
        outcome = mod_2_infinite(spec)
        if outcome.is_inconclusive:
            raise InconclusiveModulus("2-modulus of the infinite family is undecided")
        return outcome.value / root
    return mod_p_truncated(spec, 2.0, int(depth)).value / root
