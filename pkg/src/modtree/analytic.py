"""Closed-form p-modulus of descending paths on radially symmetric trees.

With ``a = 1/(p-1)`` the modulus of the depth-``n`` family is
``(sum_{k<=n} (sigma_k |S_k|)**-a)**-(p-1)`` and the optimal density puts
``rho_k = t_k / sum t`` on every edge of shell ``k``.  The infinite family
uses the full series, classified by :mod:`modtree.series`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateExponent, InconclusiveModulus, NoTailRule
from .series import (
    CONVERGENT,
    DIVERGENT,
    SeriesClassification,
    _children_profile,
    classify,
    log2_shell_masses,
    shell_terms,
)
from .tree import ConstantChildren, RadialTreeSpec, SkipChildren, scaled, validate

POSITIVE = "positive"
ZERO = "zero"
INCONCLUSIVE = "inconclusive"

P_MIN_GAP = 1e-9
P_MAX = 1e9


def series_exponent(p: float) -> float:
    """``q/p = 1/(p-1)``; rejects exponents better served by the endpoints."""
    p = float(p)
    if not math.isfinite(p) or p <= 1 + P_MIN_GAP or p >= P_MAX:
        raise DegenerateExponent(f"p = {p!r} is outside (1 + {P_MIN_GAP}, {P_MAX}); use the p=1 or p=inf operations")
    return 1.0 / (p - 1.0)


@dataclass(frozen=True)
class TruncatedModulus:
    value: float
    density: np.ndarray
    p: float
    n: int


@dataclass(frozen=True)
class RadialDensity:
    """Per-generation optimal density ``rho_k = t_k / total``."""

    spec: RadialTreeSpec
    p: float
    total: float

    def __call__(self, k: int) -> float:
        return float(self.head(k)[-1])

    def head(self, n: int) -> np.ndarray:
        return shell_terms(self.spec, series_exponent(self.p), n) / self.total


class NotExists:
    """Marker: the infinite family has no optimal density."""

    def __bool__(self):
        return False

    def __repr__(self):
        return "NOT_EXISTS"


NOT_EXISTS = NotExists()


@dataclass(frozen=True)
class ModulusOutcome:
    """Classified modulus of an infinite family.

    ``value`` is the modulus when positive, 0.0 when zero and NaN when
    inconclusive; ``bounds`` always encloses the true modulus.
    """

    classification: str
    value: float
    p: float
    bounds: tuple = (0.0, math.inf)
    witness: Optional[str] = None
    partial_sum: Optional[float] = None
    terms_used: int = 0
    optimal_density: Optional[RadialDensity] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_positive(self) -> bool:
        return self.classification == POSITIVE

    @property
    def is_zero(self) -> bool:
        return self.classification == ZERO

    @property
    def is_inconclusive(self) -> bool:
        return self.classification == INCONCLUSIVE

    @property
    def upper_bound(self) -> float:
        return self.bounds[1]


def _diagnostics(series: SeriesClassification) -> dict:
    return {
        "test": series.test,
        "terms_used": series.terms_used,
        "tail_lo": series.tail_lo,
        "tail_hi": series.tail_hi,
        "trace": list(series.trace),
    }


def _power(x: float, e: float) -> float:
    if x == 0:
        return math.inf
    if math.isinf(x):
        return 0.0
    return math.exp(e * math.log(x))


def shell_mass_min(spec: RadialTreeSpec, n: int) -> float:
    """``min_{k<=n} sigma_k |S_k|``."""
    return float(np.min(np.exp2(log2_shell_masses(spec, n))))


# -- truncated family -----------------------------------------------------------


def mod_p_truncated(spec: RadialTreeSpec, p: float, n: int) -> TruncatedModulus:
    a = series_exponent(p)
    if n < 1:
        raise ValueError("truncation depth must be >= 1")
    validate(spec)
    t = shell_terms(spec, a, n)
    total = math.fsum(t)
    return TruncatedModulus(_power(total, -(p - 1)), t / total, float(p), n)


def sweep(spec: RadialTreeSpec, p: float, n_max: int) -> np.ndarray:
    """Truncated modulus for ``n = 1..n_max`` in one pass."""
    a = series_exponent(p)
    validate(spec)
    t = shell_terms(spec, a, n_max)
    partial = np.cumsum(t)
    return np.exp(-(p - 1) * np.log(partial))


def mod_1_truncated(spec: RadialTreeSpec, n: int) -> float:
    validate(spec)
    sizes = spec.shell_sizes(n)
    return min(scaled(size, spec.weights.log2_weight(k)) for k, size in enumerate(sizes, start=1))


def mod_infty_truncated(spec: RadialTreeSpec, n: int) -> float:
    validate(spec)
    return 1.0 / math.fsum(1.0 / spec.weight(k) for k in range(1, n + 1))


# -- infinite family ----------------------------------------------------------


def mod_p_infinite(spec: RadialTreeSpec, p: float) -> ModulusOutcome:
    a = series_exponent(p)
    validate(spec)
    series = classify(spec, a)
    e = -(p - 1)
    diag = _diagnostics(series)
    if series.verdict == CONVERGENT:
        total = series.limit
        value = _power(total, e)
        return ModulusOutcome(
            POSITIVE,
            value,
            float(p),
            (_power(series.upper, e), _power(series.lower, e)),
            partial_sum=series.partial_sum,
            terms_used=series.terms_used,
            optimal_density=RadialDensity(spec, float(p), total),
            diagnostics=diag,
        )
    if series.verdict == DIVERGENT:
        return ModulusOutcome(
            ZERO,
            0.0,
            float(p),
            (0.0, 0.0),
            witness=f"sum of (sigma_k |S_k|)**(-1/(p-1)) diverges ({series.test})",
            partial_sum=series.partial_sum,
            terms_used=series.terms_used,
            diagnostics=diag,
        )
    upper = _power(series.partial_sum, e) if series.partial_sum > 0 else math.inf
    upper = min(upper, shell_mass_min(spec, min(max(series.terms_used, 1), 4096)))
    return ModulusOutcome(
        INCONCLUSIVE,
        math.nan,
        float(p),
        (0.0, upper),
        witness=None,
        partial_sum=series.partial_sum,
        terms_used=series.terms_used,
        diagnostics=diag,
    )


def mod_2_infinite(spec: RadialTreeSpec) -> ModulusOutcome:
    return mod_p_infinite(spec, 2.0)


def optimal_density_infinite(spec: RadialTreeSpec, p: float):
    """RadialDensity when the modulus is positive, ``NOT_EXISTS`` when zero."""
    outcome = mod_p_infinite(spec, p)
    if outcome.is_positive:
        return outcome.optimal_density
    if outcome.is_zero:
        return NOT_EXISTS
    raise InconclusiveModulus("series could not be classified; density existence undecided")


def mod_infty_infinite(spec: RadialTreeSpec) -> ModulusOutcome:
    """``1 / sum_k 1/sigma_k``, the reciprocal sigma**-1 length of any path."""
    validate(spec)
    if spec.weights.profile() is None:
        raise NoTailRule("the weight rule has no tail")
    series = classify(RadialTreeSpec(ConstantChildren(1), spec.weights), 1.0)
    diag = _diagnostics(series)
    if series.verdict == CONVERGENT:
        return ModulusOutcome(
            POSITIVE, 1.0 / series.limit, math.inf, (1.0 / series.upper, 1.0 / series.lower),
            partial_sum=series.partial_sum, terms_used=series.terms_used, diagnostics=diag,
        )
    if series.verdict == DIVERGENT:
        return ModulusOutcome(
            ZERO, 0.0, math.inf, (0.0, 0.0),
            witness=f"sum of 1/sigma_k diverges ({series.test})",
            partial_sum=series.partial_sum, terms_used=series.terms_used, diagnostics=diag,
        )
    return ModulusOutcome(
        INCONCLUSIVE, math.nan, math.inf, (0.0, 1.0 / series.partial_sum),
        partial_sum=series.partial_sum, terms_used=series.terms_used, diagnostics=diag,
    )


def mod_1_infinite(spec: RadialTreeSpec) -> ModulusOutcome:
    """``inf_k sigma_k |S_k|`` when the tail of that sequence is certified."""
    validate(spec)
    if isinstance(spec.children, SkipChildren) and not spec.children.skip.is_ray:
        return _mod_1_skip(spec)
    cprof = _children_profile(spec)
    wprof = spec.weights.profile()
    if cprof is None or wprof is None:
        raise NoTailRule("mod_1_infinite needs tail rules")
    L = math.lcm(len(cprof.values), wprof.period)
    K0 = max(cprof.start, wprof.start, 1)
    R = wprof.ratio**L
    for i in range(L):
        R *= spec.children_count(K0 + i)
    beta = float(wprof.exponent)
    if R < 1 or (R == 1 and beta < 0):
        return ModulusOutcome(ZERO, 0.0, 1.0, (0.0, 0.0), witness="sigma_k |S_k| tends to 0")
    # From k_star on, sigma_k |S_k| is nondecreasing along each residue class.
    k_star = K0
    if beta < 0:
        log2R = math.log2(R.numerator) - math.log2(R.denominator)
        k_star = max(K0, math.ceil(L / math.expm1(log2R / -beta * math.log(2.0))))
    n = k_star + L - 1
    value = mod_1_truncated(spec, n)
    return ModulusOutcome(POSITIVE if value > 0 else ZERO, value, 1.0, (value, value), terms_used=n)


def _mod_1_skip(spec: RadialTreeSpec) -> ModulusOutcome:
    skip = spec.children.skip
    bounds = spec.weights.bounds()
    if skip.gaps.growth() is None:
        raise NoTailRule("skip sequence has no tail rule for its gaps")
    if bounds is None:
        return ModulusOutcome(
            INCONCLUSIVE, math.nan, 1.0, (0.0, spec.weight(1)),
            diagnostics={"reason": "unbounded weights on a skip sequence"},
        )
    w = spec.weights
    best = math.inf
    if skip.first > 1:
        best = w.range_min(1, skip.first - 1)
    start = skip.first
    j = 0
    while 2.0**j * bounds[0] < best:
        j += 1
        c = skip.gap(j)
        best = min(best, 2.0**j * w.range_min(start, c))
        start += c
    return ModulusOutcome(POSITIVE, best, 1.0, (best, best), terms_used=j)
