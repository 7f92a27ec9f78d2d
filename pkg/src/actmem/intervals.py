"""Time intervals and the thirteen Allen relations under a boundary tolerance.

Event boundaries in a trace are frame-quantized, so comparisons treat
timestamps closer than a tolerance ``delta_t`` (by default one frame
period) as equal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ValidationError


@dataclass(frozen=True)
class Interval:
    """A closed time interval [start, end] in seconds, start <= end."""

    start: float
    end: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise ValidationError(f"non-finite interval [{self.start}, {self.end}]")
        if self.start > self.end:
            raise ValidationError(f"interval start {self.start} > end {self.end}")

    @property
    def length(self) -> float:
        return self.end - self.start

    def contains(self, other: Interval, tol: float = 0.0) -> bool:
        return self.start - tol <= other.start and other.end <= self.end + tol

    def overlaps(self, other: Interval, tol: float = 0.0) -> bool:
        return self.start - tol <= other.end and other.start <= self.end + tol


class AllenRelation(Enum):
    BEFORE = "before"
    MEETS = "meets"
    OVERLAPS = "overlaps"
    STARTS = "starts"
    DURING = "during"
    FINISHES = "finishes"
    EQUALS = "equals"
    AFTER = "after"
    MET_BY = "met_by"
    OVERLAPPED_BY = "overlapped_by"
    STARTED_BY = "started_by"
    CONTAINS = "contains"
    FINISHED_BY = "finished_by"

    @property
    def inverse(self) -> AllenRelation:
        return _INVERSE[self]


_INVERSE = {
    AllenRelation.BEFORE: AllenRelation.AFTER,
    AllenRelation.AFTER: AllenRelation.BEFORE,
    AllenRelation.MEETS: AllenRelation.MET_BY,
    AllenRelation.MET_BY: AllenRelation.MEETS,
    AllenRelation.OVERLAPS: AllenRelation.OVERLAPPED_BY,
    AllenRelation.OVERLAPPED_BY: AllenRelation.OVERLAPS,
    AllenRelation.STARTS: AllenRelation.STARTED_BY,
    AllenRelation.STARTED_BY: AllenRelation.STARTS,
    AllenRelation.DURING: AllenRelation.CONTAINS,
    AllenRelation.CONTAINS: AllenRelation.DURING,
    AllenRelation.FINISHES: AllenRelation.FINISHED_BY,
    AllenRelation.FINISHED_BY: AllenRelation.FINISHES,
    AllenRelation.EQUALS: AllenRelation.EQUALS,
}


def _cmp(x: float, y: float, tol: float) -> int:
    """Three-way compare with |x - y| <= tol counting as equality."""
    if abs(x - y) <= tol:
        return 0
    return -1 if x < y else 1


def allen_relation(a: Interval, b: Interval, delta_t: float = 0.0) -> AllenRelation:
    """Classify the ordered pair (a, b) into exactly one Allen relation.

    Boundary comparisons use |x - y| <= delta_t as equality; the check
    order below makes the result unique even when delta_t is large
    relative to the interval lengths.
    """
    if delta_t < 0:
        raise ValidationError(f"negative tolerance {delta_t}")
    es = _cmp(a.end, b.start, delta_t)
    if es < 0:
        return AllenRelation.BEFORE
    if es == 0:
        # a ends where b starts, unless the two intervals collapse together
        if _cmp(a.start, b.start, delta_t) == 0 and _cmp(a.end, b.end, delta_t) == 0:
            return AllenRelation.EQUALS
        if _cmp(a.start, b.start, delta_t) < 0 or _cmp(a.end, b.end, delta_t) < 0:
            return AllenRelation.MEETS
    se = _cmp(a.start, b.end, delta_t)
    if se > 0:
        return AllenRelation.AFTER
    if se == 0:
        if _cmp(a.start, b.start, delta_t) == 0 and _cmp(a.end, b.end, delta_t) == 0:
            return AllenRelation.EQUALS
        if _cmp(a.start, b.start, delta_t) > 0 or _cmp(a.end, b.end, delta_t) > 0:
            return AllenRelation.MET_BY

    s = _cmp(a.start, b.start, delta_t)
    e = _cmp(a.end, b.end, delta_t)
    if s == 0 and e == 0:
        return AllenRelation.EQUALS
    if s == 0:
        return AllenRelation.STARTS if e < 0 else AllenRelation.STARTED_BY
    if e == 0:
        return AllenRelation.FINISHES if s > 0 else AllenRelation.FINISHED_BY
    if s > 0 and e < 0:
        return AllenRelation.DURING
    if s < 0 and e > 0:
        return AllenRelation.CONTAINS
    if s < 0:
        return AllenRelation.OVERLAPS
    return AllenRelation.OVERLAPPED_BY
