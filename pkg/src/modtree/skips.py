"""Skip sequences: gap rules describing where a 1-2 tree branches.

A 1-2 tree is fixed by the generations ``k0 < k1 < k2 < ...`` at which
shells double.  ``k0`` is the first branching generation and the gaps
``c_j = k_j - k_{j-1}`` are produced by a :class:`GapRule`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Union

# Rates with denominators above this use the floating ceiling path.
_EXACT_DENOMINATOR_LIMIT = 10_000


def _iroot(x: int, d: int) -> int:
    """Floor of the d-th root of a nonnegative integer."""
    if x < 2 or d == 1:
        return x
    r = 1 << ((x.bit_length() + d - 1) // d)
    while True:
        y = ((d - 1) * r + x // r ** (d - 1)) // d
        if y >= r:
            return r
        r = y


def ceil_pow2(rate: Fraction, j: int, poly: int = 0) -> int:
    """Exact ``ceil(2**(j*rate) / j**poly)`` for rational ``rate >= 0``."""
    n = rate.numerator * j
    d = rate.denominator
    if n % d == 0:
        top = 1 << (n // d)
    else:
        x = 1 << n
        r = _iroot(x, d)
        top = r if r**d >= x else r + 1
    if poly:
        den = j**poly
        return -(-top // den)
    return top


def _float_ceil(value: float) -> int:
    if value >= 2.0**53:
        return int(value)
    nearest = round(value)
    if abs(value - nearest) <= 2 * math.ulp(value):
        return max(int(nearest), 1)
    return math.ceil(value)


def as_rate(value: Union[Fraction, int, float, str]) -> Fraction:
    """Coerce a user rate to a Fraction, reading floats by their decimal repr."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class GapGrowth:
    """Asymptotic form ``c_j ~ 2**(rate*j) / j**poly`` of a gap rule.

    ``bound`` is set when the gaps are bounded (``rate == 0``).
    """

    rate: Fraction
    poly: float
    bound: Optional[int] = None


class GapRule:
    """Base for skip gap generators; ``gap(j)`` is defined for ``j >= 1``."""

    def gap(self, j: int) -> int:
        raise NotImplementedError

    def growth(self) -> Optional[GapGrowth]:
        """Growth of the tail, or None when there is no tail rule."""
        raise NotImplementedError

    def tail_start(self) -> int:
        """Smallest j from which ``growth()`` describes every gap exactly."""
        return 1

    def sup_after(self, n: int) -> Optional[int]:
        """Upper bound on ``c_j`` for ``j > n`` when gaps are bounded."""
        g = self.growth()
        if g is None or g.bound is None:
            return None
        return g.bound

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantGap(GapRule):
    value: int = 1

    def gap(self, j: int) -> int:
        return self.value

    def growth(self) -> GapGrowth:
        return GapGrowth(Fraction(0), 0.0, bound=self.value)

    def to_dict(self) -> dict:
        return {"rule": "constant", "value": self.value}


@dataclass(frozen=True)
class CeilGeometricGap(GapRule):
    """``c_j = ceil(2**(j*rate) / j**poly)``.

    ``rate = 1/(r-1)`` with ``poly = 0`` is the critical-exponent-``r``
    construction; ``rate = 1, poly = 2`` is the boundary example at ``p = 2``.
    """

    rate: Fraction = Fraction(1)
    poly: float = 0

    def __post_init__(self):
        object.__setattr__(self, "rate", as_rate(self.rate))
        if float(self.poly) == int(self.poly):
            object.__setattr__(self, "poly", int(self.poly))

    def gap(self, j: int) -> int:
        return _cached_ceil(self.rate, self.poly, j)

    def growth(self) -> GapGrowth:
        if self.rate == 0:
            return GapGrowth(Fraction(0), float(self.poly), bound=1)
        return GapGrowth(self.rate, float(self.poly))

    def to_dict(self) -> dict:
        return {"rule": "ceil_geometric", "rate": str(self.rate), "poly": self.poly}


@lru_cache(maxsize=1 << 16)
def _cached_ceil(rate: Fraction, poly, j: int) -> int:
    if rate < 0 or poly < 0:
        raise ValueError("ceil-geometric gaps need rate >= 0 and poly >= 0")
    if rate.denominator <= _EXACT_DENOMINATOR_LIMIT and isinstance(poly, int):
        return max(ceil_pow2(rate, j, poly), 1)
    exponent = float(rate) * j
    try:
        value = 2.0**exponent / float(j) ** poly
    except OverflowError:
        whole = math.floor(exponent)
        mant = int(2.0 ** (exponent - whole) * 2**52)
        return max((mant << max(whole - 52, 0)) // max(int(round(j**poly)), 1), 1)
    return max(_float_ceil(value), 1)


@dataclass(frozen=True)
class PrefixGap(GapRule):
    """Explicit leading gaps followed by an optional tail rule.

    The tail is evaluated at the absolute index ``j``.
    """

    prefix: tuple
    tail: Optional[GapRule] = None

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(c) for c in self.prefix))

    def gap(self, j: int) -> int:
        if j <= len(self.prefix):
            return self.prefix[j - 1]
        if self.tail is None:
            raise IndexError(f"gap {j} lies beyond the explicit prefix")
        return self.tail.gap(j)

    def growth(self) -> Optional[GapGrowth]:
        return None if self.tail is None else self.tail.growth()

    def tail_start(self) -> int:
        base = self.tail.tail_start() if self.tail is not None else 1
        return max(len(self.prefix) + 1, base)

    def sup_after(self, n: int) -> Optional[int]:
        if self.tail is None:
            return None
        tail_sup = self.tail.sup_after(n)
        if tail_sup is None:
            return None
        rest = self.prefix[n:]
        return max([tail_sup, *rest])

    def to_dict(self) -> dict:
        return {
            "rule": "prefix",
            "prefix": list(self.prefix),
            "tail": None if self.tail is None else self.tail.to_dict(),
        }


@dataclass(frozen=True)
class SkipSequence:
    """Branching pattern of a 1-2 tree.

    ``first`` is the first branching generation (``k0 = m >= 1``).  ``gaps``
    set to None encodes the never-branching ray (every gap infinite).
    """

    gaps: Optional[GapRule] = ConstantGap(1)
    first: int = 1

    @classmethod
    def ray(cls, first: int = 1) -> "SkipSequence":
        return cls(gaps=None, first=first)

    @property
    def is_ray(self) -> bool:
        return self.gaps is None

    def gap(self, j: int) -> int:
        return self.gaps.gap(j)

    def branchings(self):
        """Yield branching generations ``k0, k0 + c1, k0 + c1 + c2, ...``."""
        if self.gaps is None:
            return
        k = self.first
        yield k
        j = 1
        while True:
            k += self.gaps.gap(j)
            yield k
            j += 1

    def to_dict(self) -> dict:
        return {
            "first": self.first,
            "gaps": None if self.gaps is None else self.gaps.to_dict(),
        }


def gap_from_dict(doc, path: str = "gaps") -> Optional[GapRule]:
    from .errors import SchemaError

    if doc is None:
        return None
    if not isinstance(doc, dict) or "rule" not in doc:
        raise SchemaError(f"{path}: expected an object with a 'rule' field", path)
    kind = doc["rule"]
    try:
        if kind == "constant":
            return ConstantGap(int(doc["value"]))
        if kind == "ceil_geometric":
            return CeilGeometricGap(as_rate(doc["rate"]), doc.get("poly", 0))
        if kind == "prefix":
            return PrefixGap(tuple(doc["prefix"]), gap_from_dict(doc.get("tail"), f"{path}.tail"))
        if kind == "none":
            return None
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"{path}: bad '{kind}' gap rule ({exc})", path) from exc
    raise SchemaError(f"{path}: unknown gap rule '{kind}'", path)
