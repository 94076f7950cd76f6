"""Convergence classification of the shell series ``sum_k (sigma_k |S_k|)**-a``.

Two tail families are certified:

* eventually periodic children with weights ``pi_k * ratio**k * k**beta``:
  over one joint period ``L`` the product ``sigma_k |S_k|`` grows by the
  exact rational ``R = ratio**L * prod C`` (times a polynomial factor), so
  the series is compared against a geometric series or a Hurwitz zeta sum;
* 1-2 trees given by a skip sequence with bounded weights: terms are
  grouped into blocks of constant shell size ``2**j`` and the block sums
  ``c_j 2**(-j a)`` are compared against geometric or zeta tails.

Floating partial sums never decide divergence on their own; every verdict
records the test that produced it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.special import zeta

from .errors import NoTailRule
from .tree import (
    PeriodicProfile,
    RadialTreeSpec,
    SkipChildren,
    log2_int,
    validate,
)

CONVERGENT = "convergent"
DIVERGENT = "divergent"
INCONCLUSIVE = "inconclusive"

REL_TOL = 1e-14
MAX_TERMS = 1_000_000
# |x - y| <= BOUNDARY_RTOL * max(|x|, |y|) counts as equality at a boundary.
BOUNDARY_RTOL = 1e-12
# Block count reported when no tail bound applies.
PROBE_BLOCKS = 200
# Gaps above 2**_EXACT_GAP_BITS are summed from their asymptotic form.
_EXACT_GAP_BITS = 80
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class SeriesClassification:
    """Verdict on a positive series.

    For a convergent series the limit lies in
    ``[partial_sum + tail_lo, partial_sum + tail_hi]``.
    """

    verdict: str
    partial_sum: float
    terms_used: int
    tail_lo: float = 0.0
    tail_hi: float = math.inf
    test: str = ""
    trace: tuple = field(default_factory=tuple)

    @property
    def limit(self) -> float:
        if self.verdict != CONVERGENT:
            return math.nan
        return self.partial_sum + 0.5 * (self.tail_lo + self.tail_hi)

    @property
    def tail_bound(self) -> float:
        """Width of the certified enclosure of the limit."""
        return self.tail_hi - self.tail_lo

    @property
    def lower(self) -> float:
        return self.partial_sum + self.tail_lo

    @property
    def upper(self) -> float:
        return self.partial_sum + self.tail_hi


class _Neumaier:
    """Compensated running sum."""

    def __init__(self, value: float = 0.0):
        self.s = value
        self.c = 0.0

    def add(self, x: float) -> None:
        t = self.s + x
        if abs(self.s) >= abs(x):
            self.c += (self.s - t) + x
        else:
            self.c += (x - t) + self.s
        self.s = t

    @property
    def value(self) -> float:
        return self.s + self.c


def close(x: float, y: float, rtol: float = BOUNDARY_RTOL) -> bool:
    return abs(x - y) <= rtol * max(abs(x), abs(y))


def log2_fraction(x: Fraction) -> float:
    return log2_int(x.numerator) - log2_int(x.denominator)


def log2_shell_sizes(spec: RadialTreeSpec, n: int) -> np.ndarray:
    """``log2 |S_k|`` for ``k = 1..n``."""
    rule = spec.children
    if isinstance(rule, SkipChildren):
        marks = []
        for b in rule.skip.branchings():
            if b > n:
                break
            marks.append(b)
        return np.searchsorted(np.asarray(marks, dtype=np.int64), np.arange(1, n + 1), side="right").astype(float)
    logs = np.fromiter((log2_int(rule.children(k)) for k in range(n)), dtype=float, count=n)
    return np.cumsum(logs)


def log2_weights(spec: RadialTreeSpec, n: int) -> np.ndarray:
    w = spec.weights
    return np.fromiter((w.log2_weight(k) for k in range(1, n + 1)), dtype=float, count=n)


def log2_shell_masses(spec: RadialTreeSpec, n: int) -> np.ndarray:
    """``log2(sigma_k |S_k|)`` for ``k = 1..n``."""
    return log2_weights(spec, n) + log2_shell_sizes(spec, n)


def shell_terms(spec: RadialTreeSpec, a: float, n: int) -> np.ndarray:
    """``(sigma_k |S_k|)**-a`` for ``k = 1..n``."""
    return np.exp2(-a * log2_shell_masses(spec, n))


def _children_profile(spec: RadialTreeSpec) -> Optional[PeriodicProfile]:
    rule = spec.children
    if isinstance(rule, SkipChildren):
        return PeriodicProfile(0, (1,)) if rule.skip.is_ray else None
    return rule.profile()


def classify(spec: RadialTreeSpec, a: float, rel_tol: float = REL_TOL, max_terms: int = MAX_TERMS) -> SeriesClassification:
    """Classify ``sum_k (sigma_k |S_k|)**-a`` for ``a > 0``."""
    validate(spec)
    if not a > 0:
        raise ValueError("series exponent must be positive")
    if isinstance(spec.children, SkipChildren) and not spec.children.skip.is_ray:
        return _classify_skip(spec, a, rel_tol, max_terms)
    cprof = _children_profile(spec)
    wprof = spec.weights.profile()
    if cprof is None or wprof is None:
        raise NoTailRule("the series needs children and weight rules with a tail")
    return _classify_periodic(spec, a, cprof, wprof, rel_tol, max_terms)


# -- periodic tails -----------------------------------------------------------


def _classify_periodic(spec, a, cprof, wprof, rel_tol, max_terms):
    L = math.lcm(len(cprof.values), wprof.period)
    K0 = max(cprof.start, wprof.start, 1)
    R = wprof.ratio**L
    for i in range(L):
        R *= spec.children_count(K0 + i)
    beta = float(wprof.exponent)
    s = a * beta
    log2R = log2_fraction(R)
    trace = [f"period L={L} from k={K0}", f"period growth R={R}", f"a*beta={s!r}"]

    head_n = K0 + L - 1
    masses = log2_shell_masses(spec, head_n)
    head = np.exp2(-a * masses[: K0 - 1])
    base = masses[K0 - 1 :]
    base_k = np.arange(K0, K0 + L, dtype=float)

    def terms(start: int, count: int) -> np.ndarray:
        ks = np.arange(start, start + count, dtype=np.int64)
        off = ks - K0
        r = off % L
        i = off // L
        logm = base[r] + i * log2R
        if beta:
            logm = logm + beta * (np.log2(ks.astype(float)) - np.log2(base_k[r]))
        return np.exp2(-a * logm)

    partial = math.fsum(head)
    N = K0 - 1

    if R < 1:
        trace.append("ratio over one period R**-a > 1")
        return SeriesClassification(DIVERGENT, partial, N, test="ratio test", trace=tuple(trace))
    if R == 1:
        if beta == 0 or s < 0:
            trace.append("terms are periodic or growing")
            return SeriesClassification(DIVERGENT, partial, N, test="terms do not vanish", trace=tuple(trace))
        if s <= 1 or close(s, 1.0):
            trace.append("terms behave like k**-s with s <= 1")
            return SeriesClassification(DIVERGENT, partial, N, test="p-series comparison", trace=tuple(trace))
        ks = np.arange(N + 1, N + L + 1, dtype=float)
        lead = terms(N + 1, L)
        tail = math.fsum(lead * ks**s * float(L) ** (-s) * zeta(s, ks / L))
        trace.append("exact Hurwitz zeta tail")
        return SeriesClassification(CONVERGENT, partial, N, tail, tail, "Hurwitz zeta tail", tuple(trace))

    # R > 1: convergent by the ratio test over one period.
    q_log = -a * log2R
    if beta == 0:
        window = math.fsum(terms(N + 1, L))
        tail = window / -math.expm1(q_log * _LN2)
        trace.append("exact geometric tail")
        return SeriesClassification(CONVERGENT, partial, N, tail, tail, "ratio test", tuple(trace))

    growth = a * max(0.0, -beta)
    chunks = [partial]
    chunk = max(L, 64 - 64 % L)
    while True:
        window = math.fsum(terms(N + 1, L))
        logx = q_log + growth * math.log2((N + 1 + L) / (N + 1))
        if logx < 0:
            lo = window
            hi = window / -math.expm1(logx * _LN2)
            if hi - lo < rel_tol * (partial + lo):
                trace.append(f"geometric tail bound with ratio 2**{logx:.6g}")
                return SeriesClassification(CONVERGENT, partial, N, lo, hi, "ratio test", tuple(trace))
        if N >= max_terms:
            trace.append("term cap reached before the tail bound met tolerance")
            return SeriesClassification(INCONCLUSIVE, partial, N, 0.0, math.inf, "ratio test", tuple(trace))
        block = terms(N + 1, chunk)
        chunks.append(float(np.sum(block)))
        partial = math.fsum(chunks)
        N += chunk
        chunk = min(2 * chunk, 1 << 16)


# -- skip sequences -----------------------------------------------------------


@dataclass
class SkipBlocks:
    """Lazy block sums ``u_j = 2**(-j a) * sum_{k in block j} sigma_k**-a``.

    Block ``j >= 1`` covers the ``c_j`` generations whose shells hold
    ``2**j`` edges; ``head`` covers the ``k0 - 1`` generations before the
    first branching.
    """

    spec: RadialTreeSpec
    a: float

    def __post_init__(self):
        skip = self.spec.children.skip
        self.gaps = skip.gaps
        self.growth = self.gaps.growth()
        self.head = self.spec.weights.power_sum(1, skip.first - 1, self.a)
        self._start = skip.first
        self._j = 0
        self._avg = None
        wprof = self.spec.weights.profile()
        if wprof is not None and wprof.ratio == 1 and wprof.exponent == 0:
            self._avg = self.spec.weights.power_sum(wprof.start, wprof.period, self.a) / wprof.period

    def _asymptotic(self, j: int) -> Optional[float]:
        g = self.growth
        if g is None or g.rate == 0 or self._avg is None or j < self.gaps.tail_start():
            return None
        log2c = float(g.rate) * j - g.poly * math.log2(j)
        if log2c <= _EXACT_GAP_BITS:
            return None
        return self._avg * 2.0 ** (log2c - j * self.a)

    def next(self) -> float:
        self._j += 1
        j = self._j
        if self._start is not None:
            approx = self._asymptotic(j)
            if approx is not None:
                self._start = None
                return approx
            c = self.gaps.gap(j)
            u = self.spec.weights.power_sum(self._start, c, self.a, -j * self.a)
            self._start += c
            return u
        return self._asymptotic(j)

    def take(self, n: int) -> np.ndarray:
        return np.array([self.next() for _ in range(n)])


def _classify_skip(spec, a, rel_tol, max_terms):
    skip = spec.children.skip
    gaps = skip.gaps
    growth = gaps.growth()
    if growth is None:
        raise NoTailRule("skip sequence has no tail rule for its gaps")
    trace = [f"skip sequence, first branching k0={skip.first}"]
    blocks = SkipBlocks(spec, a)
    bounds = spec.weights.bounds()
    if bounds is None:
        u = blocks.take(PROBE_BLOCKS)
        partial = math.fsum([blocks.head, *u])
        trace.append("weights are unbounded; no tail certificate for skip blocks")
        return SeriesClassification(INCONCLUSIVE, partial, PROBE_BLOCKS, 0.0, math.inf, "none", tuple(trace))

    wlo = bounds[1] ** (-a)
    whi = bounds[0] ** (-a)
    b = float(growth.rate)
    s = float(growth.poly)
    y_log = -a
    geo_den = -math.expm1(y_log * _LN2)
    if growth.bound is not None:
        mode = "bounded"
        test = "comparison with a geometric series"
    elif close(a, b):
        if s <= 0:
            trace.append(f"c_j 2**(-j a) >= j**-{s} does not vanish")
            return SeriesClassification(DIVERGENT, blocks.head, 0, test="terms do not vanish", trace=tuple(trace))
        if s <= 1 or close(s, 1.0):
            trace.append(f"c_j 2**(-j a) ~ j**-{s} with s <= 1")
            return SeriesClassification(DIVERGENT, blocks.head, 0, test="p-series comparison", trace=tuple(trace))
        mode = "zeta"
        test = "Hurwitz zeta comparison"
    elif a > b:
        mode = "geometric"
        test = "root test"
        x_log = b - a
        x_den = -math.expm1(x_log * _LN2)
    else:
        trace.append(f"limsup (c_j 2**(-j a))**(1/j) = 2**{b - a:.6g} > 1")
        return SeriesClassification(DIVERGENT, blocks.head, 0, test="root test", trace=tuple(trace))

    start = max(gaps.tail_start() - 1, 1)
    acc = _Neumaier(blocks.head)
    N = 0
    while True:
        if N >= start:
            geo = 2.0 ** (y_log * (N + 1)) / geo_den
            if mode == "bounded":
                lo = wlo * geo
                hi = whi * gaps.sup_after(N) * geo
            elif mode == "zeta":
                z = float(zeta(s, N + 1))
                lo = wlo * z
                hi = whi * (z + geo)
            else:
                lo = 0.0
                hi = whi * ((N + 1) ** (-s) * 2.0 ** (x_log * (N + 1)) / x_den + geo)
            partial = acc.value
            if hi - lo < rel_tol * (partial + lo):
                trace.append(f"{N} blocks summed")
                return SeriesClassification(CONVERGENT, partial, N, lo, hi, test, tuple(trace))
        if N >= max_terms:
            trace.append("block cap reached before the tail bound met tolerance")
            return SeriesClassification(INCONCLUSIVE, acc.value, N, 0.0, math.inf, test, tuple(trace))
        acc.add(blocks.next())
        N += 1
