"""Certified enclosures of real quantities.

Every numeric bound that is not exact travels as an ``Interval`` carrying
the kind of certificate that produced it, so downstream arithmetic can stay
conservative (endpoints are always combined crosswise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

ANALYTIC = "analytic"
LIPSCHITZ_GRID = "lipschitz-grid"
EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class Certificate:
    kind: str
    mesh: float | None = None
    lipschitz: float | None = None

    def __post_init__(self):
        if self.kind not in (ANALYTIC, LIPSCHITZ_GRID, EXHAUSTIVE):
            raise ValueError(f"unknown certificate kind {self.kind!r}")
        if self.kind == LIPSCHITZ_GRID and (self.mesh is None or self.lipschitz is None):
            raise ValueError("a Lipschitz grid certificate needs mesh and constant")


@dataclass(frozen=True)
class Interval:
    """A closed enclosure [lo, hi] of a real quantity."""

    lo: float
    hi: float
    certificate: Certificate

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("interval endpoints must be finite")
        if self.lo > self.hi + 1e-15:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @staticmethod
    def exact(value: float) -> "Interval":
        return Interval(value, value, Certificate(ANALYTIC))

    @staticmethod
    def analytic(lo: float, hi: float) -> "Interval":
        return Interval(lo, hi, Certificate(ANALYTIC))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= value <= self.hi + slack

    def scale(self, t: float) -> "Interval":
        if t < 0:
            raise ValueError("only nonnegative scaling is meaningful for norm enclosures")
        return Interval(self.lo * t, self.hi * t, self.certificate)
