"""1-2 trees, critical exponents and walk-type classification.

The critical exponent ``p_c`` is the supremum of ``p`` with positive
p-modulus.  :func:`estimate_pc` reads it off the growth of the rule
analytically and cross-checks by bisecting a numeric classifier that fits
the first few hundred series terms; disagreement is reported, not hidden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .analytic import mod_2_infinite, mod_p_infinite, series_exponent
from .errors import NotElliptic, UndecidableGrowth
from .series import _children_profile, log2_shell_masses
from .skips import (
    CeilGeometricGap,
    ConstantGap,
    PrefixGap,
    SkipSequence,
    as_rate,
)
from .tree import RadialTreeSpec, SkipChildren, UnitWeights, WeightRule, log2_int, validate

__all__ = [
    "SkipSequence",
    "ConstantGap",
    "CeilGeometricGap",
    "PrefixGap",
    "PcEstimate",
    "skip_to_spec",
    "mod_p_skip",
    "estimate_pc",
    "construct_tree_with_pc",
    "classify_walk",
    "pc_walk_rule",
    "pc_weighted_equals_unweighted_check",
]

TRANSIENT = "transient"
RECURRENT = "recurrent"
UNDETERMINED = "undetermined"
BOUNDARY_UNDECIDED = "boundary_undecided"

P_MAX = 100.0
PROBE_TERMS = 200
# Fitted slope of log2(term) per index counted as zero.
SLOPE_MARGIN = 1e-6
# Fitted log2(index) coefficient counted as -1.
POWER_MARGIN = 1e-3


@dataclass(frozen=True)
class PcEstimate:
    """Bracket ``[p_lo, p_hi]`` around the critical exponent."""

    p_lo: float
    p_hi: float
    estimate: float
    pc_is_one: bool = False
    pc_is_infinite: bool = False
    analytic: Optional[float] = None
    consistent: bool = True
    bisection_steps: int = 0
    trace: tuple = field(default_factory=tuple)

    @property
    def width(self) -> float:
        return self.p_hi - self.p_lo

    def brackets(self, r: float) -> bool:
        return self.p_lo <= r <= self.p_hi


def skip_to_spec(s: SkipSequence, weights: Optional[WeightRule] = None) -> RadialTreeSpec:
    return RadialTreeSpec(SkipChildren(s), weights or UnitWeights())


def mod_p_skip(s: SkipSequence, p: float):
    """Modulus of the unweighted 1-2 tree; ``(m - 1 + sum c_j 2**(-j/(p-1)))**(1-p)``."""
    return mod_p_infinite(skip_to_spec(s), p)


def construct_tree_with_pc(r: float) -> SkipSequence:
    """Skip gaps ``c_j = ceil(2**(j/(r-1)))``, whose tree has ``p_c = r``."""
    r = as_rate(r)
    if not 1 < r:
        raise ValueError("critical exponent must exceed 1")
    return SkipSequence(CeilGeometricGap(1 / (r - 1)), first=1)


# -- analytic phase -----------------------------------------------------------


def _analytic_pc(spec: RadialTreeSpec):
    """``(p_c, reason)``; p_c is 1.0, a finite value or math.inf."""
    rule = spec.children
    if isinstance(rule, SkipChildren) and not rule.skip.is_ray:
        growth = rule.skip.gaps.growth()
        if growth is None:
            raise UndecidableGrowth("skip gaps have no tail rule")
        if spec.weights.bounds() is None:
            raise UndecidableGrowth("unbounded weights on a skip sequence")
        if growth.bound is not None:
            return math.inf, "bounded gaps: block series is geometric for every p"
        b = growth.rate
        return float(1 + 1 / b), f"limsup c_j**(1/j) = 2**{b}"
    cprof = _children_profile(spec)
    wprof = spec.weights.profile()
    if cprof is None or wprof is None:
        raise UndecidableGrowth("rule has no tail")
    L = math.lcm(len(cprof.values), wprof.period)
    K0 = max(cprof.start, wprof.start, 1)
    R = wprof.ratio**L
    for i in range(L):
        R *= spec.children_count(K0 + i)
    beta = float(wprof.exponent)
    if R > 1:
        return math.inf, f"period growth {R} > 1"
    if R < 1:
        return 1.0, f"period growth {R} < 1"
    if beta > 0:
        return 1.0 + beta, f"terms ~ k**(-{beta}/(p-1))"
    return 1.0, "terms do not vanish for any p"


# -- numeric phase ------------------------------------------------------------


class _TermModel:
    """log2 of the first ``n`` series terms as a function of ``a``."""

    def __init__(self, spec: RadialTreeSpec, n: int):
        self.spec = spec
        self.n = n
        rule = spec.children
        self.skip = isinstance(rule, SkipChildren) and not rule.skip.is_ray
        if self.skip:
            gaps = rule.skip.gaps
            self.idx = np.arange(1, n + 1, dtype=float)
            self.gaps = [gaps.gap(j) for j in range(1, n + 1)]
            self.log2c = np.array([log2_int(c) for c in self.gaps])
            self.unit = isinstance(spec.weights, UnitWeights)
            self.starts = np.cumsum([rule.skip.first, *self.gaps[:-1]]).tolist()
        else:
            cprof = _children_profile(spec)
            wprof = spec.weights.profile()
            L = math.lcm(len(cprof.values), wprof.period)
            K0 = max(cprof.start, wprof.start, 1)
            # One residue class mod the period keeps the fit free of wiggle.
            ks = K0 + L * np.arange(n)
            masses = log2_shell_masses(spec, int(ks[-1]))
            self.idx = ks.astype(float)
            self.masses = masses[ks - 1]

    def log2_terms(self, a: float) -> np.ndarray:
        if not self.skip:
            return -a * self.masses
        out = self.log2c - a * self.idx
        if not self.unit:
            w = self.spec.weights
            avg = np.array(
                [math.log2(w.power_sum(int(s), c, a, -float(lc)))
                 for s, c, lc in zip(self.starts, self.gaps, self.log2c)]
            )
            out = out + avg
        return out


def _fit(idx: np.ndarray, y: np.ndarray):
    half = idx.size // 2
    x = idx[half:]
    X = np.column_stack([x, np.log2(x), np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, y[half:], rcond=None)
    return float(coef[0]), float(coef[1])


def _numeric_converges(model: _TermModel, p: float) -> bool:
    alpha, beta = _fit(model.idx, model.log2_terms(series_exponent(p)))
    if alpha < -SLOPE_MARGIN:
        return True
    if alpha > SLOPE_MARGIN:
        return False
    return beta < -1 - POWER_MARGIN


def estimate_pc(
    source: Union[SkipSequence, RadialTreeSpec],
    resolution: float = 0.05,
    n_terms: int = PROBE_TERMS,
    p_max: float = P_MAX,
) -> PcEstimate:
    spec = skip_to_spec(source) if isinstance(source, SkipSequence) else source
    validate(spec)
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    analytic, reason = _analytic_pc(spec)
    trace = [f"analytic: {reason}"]
    model = _TermModel(spec, n_terms)

    lo = 1.0 + resolution / 4
    hi = p_max
    steps = 0
    if not _numeric_converges(model, lo):
        numeric_lo, numeric_hi, kind = 1.0, lo, "one"
    elif _numeric_converges(model, hi):
        numeric_lo, numeric_hi, kind = hi, math.inf, "infinite"
    else:
        while hi - lo > resolution:
            mid = 0.5 * (lo + hi)
            steps += 1
            if _numeric_converges(model, mid):
                lo = mid
            else:
                hi = mid
        numeric_lo, numeric_hi, kind = lo, hi, "finite"
    trace.append(f"numeric bracket [{numeric_lo:.6g}, {numeric_hi:.6g}] after {steps} bisections")

    if kind == "one":
        consistent = analytic <= numeric_hi
    elif kind == "infinite":
        consistent = analytic >= numeric_lo
    else:
        slack = 1e-9 * numeric_hi
        consistent = numeric_lo - slack <= analytic <= numeric_hi + slack
    if not consistent:
        trace.append(f"numeric bracket disagrees with the analytic value {analytic!r}")
        mid = 0.5 * (numeric_lo + numeric_hi) if kind == "finite" else (1.0 if kind == "one" else math.inf)
        return PcEstimate(numeric_lo, numeric_hi, mid, kind == "one", kind == "infinite",
                          analytic, False, steps, tuple(trace))
    if kind == "one":
        return PcEstimate(1.0, numeric_hi, 1.0, True, False, analytic, True, steps, tuple(trace))
    if kind == "infinite":
        return PcEstimate(numeric_lo, math.inf, math.inf, False, True, analytic, True, steps, tuple(trace))
    return PcEstimate(numeric_lo, numeric_hi, analytic, False, False, analytic, True, steps, tuple(trace))


# -- random walks -------------------------------------------------------------


def classify_walk(spec: RadialTreeSpec) -> str:
    """Transient iff the 2-modulus is positive."""
    outcome = mod_2_infinite(spec)
    if outcome.is_positive:
        return TRANSIENT
    if outcome.is_zero:
        return RECURRENT
    return UNDETERMINED


def pc_walk_rule(estimate: PcEstimate) -> str:
    if estimate.p_lo > 2:
        return TRANSIENT
    if estimate.p_hi < 2:
        return RECURRENT
    return BOUNDARY_UNDECIDED


@dataclass(frozen=True)
class EllipticCheck:
    ok: bool
    weighted: PcEstimate
    unweighted: PcEstimate


def _overlap(x: PcEstimate, y: PcEstimate) -> bool:
    if x.pc_is_infinite or y.pc_is_infinite:
        return x.pc_is_infinite and y.pc_is_infinite
    return x.p_lo <= y.p_hi and y.p_lo <= x.p_hi


def pc_weighted_equals_unweighted_check(spec: RadialTreeSpec, resolution: float = 0.05) -> EllipticCheck:
    bounds = spec.weights.bounds()
    if bounds is None or not bounds[0] > 0:
        raise NotElliptic("weights are not bounded away from 0 and infinity")
    weighted = estimate_pc(spec, resolution)
    unweighted = estimate_pc(spec.with_weights(UnitWeights()), resolution)
    return EllipticCheck(_overlap(weighted, unweighted), weighted, unweighted)
