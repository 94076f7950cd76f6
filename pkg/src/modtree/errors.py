"""Exception hierarchy shared by every modtree module."""

from __future__ import annotations


class ModTreeError(Exception):
    """Base class for all library errors."""


class ValidationError(ModTreeError, ValueError):
    """A tree or spec violates one of its structural invariants.

    ``location`` names the first offending generation, edge index or
    document path, whichever applies.
    """

    def __init__(self, message: str, location=None):
        super().__init__(message)
        self.location = location


class NonPositiveWeight(ValidationError):
    pass


class NonUniformDepth(ValidationError):
    pass


class OrphanEdge(ValidationError):
    pass


class ZeroChildrenRule(ValidationError):
    pass


class SchemaError(ValidationError):
    """Malformed tree-spec or flow document."""


class ShellOverflow(ModTreeError, OverflowError):
    """Shell size exceeds the configured big-integer limit."""


class TooLarge(ModTreeError):
    """Materializing a truncation would exceed the edge or leaf cap."""


class DegenerateExponent(ModTreeError, ValueError):
    """Exponent outside the range an operation supports."""


class NoTailRule(ModTreeError):
    """Infinite-tree computation requested on a prefix-only rule."""


class IndexMismatch(ModTreeError, ValueError):
    pass


class InvalidFlow(ModTreeError, ValueError):
    pass


class NotElliptic(ModTreeError, ValueError):
    """Weight rule is not bounded away from zero and infinity."""


class UndecidableGrowth(ModTreeError):
    pass


class InconclusiveModulus(ModTreeError):
    pass
