"""Shared brute-force oracles.

These deliberately avoid the library's own formulas: measures come from
literally enumerating the truncated path space as a boolean tensor,
point counts from materialized trace enumeration, sums from bare loops.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from slalomlab.omega import OmegaPoint
from slalomlab.slaloms import Slalom, width


def brute_partial_sum(s: Slalom) -> Fraction:
    total = Fraction(0)
    for n in range(s.horizon):
        count = sum(1 for i in range(width(n)) if s.masks[n] >> i & 1)
        total += Fraction(count, width(n))
    return total


class PathSpaceOracle:
    """Exhaustive enumeration of the truncated path space prod_n 2^n.

    Levels [start, horizon) are materialized as one boolean tensor with
    an axis per level; every path is individually evaluated, and
    fractions are exact (integer cell counts over the space size).
    """

    def __init__(self, horizon: int, start: int = 1):
        if sum(range(start, horizon)) > 24:
            raise ValueError("path space too large to materialize")
        self.start = start
        self.horizon = horizon
        self.axes = list(range(start, horizon))
        self.size = 1
        for n in self.axes:
            self.size *= width(n)

    def _lift(self, n: int, allowed: np.ndarray) -> np.ndarray:
        shape = [1] * len(self.axes)
        shape[self.axes.index(n)] = width(n)
        return allowed.reshape(shape)

    def full(self) -> np.ndarray:
        return np.ones([width(n) for n in self.axes], dtype=bool)

    def containment_event(self, w: Slalom) -> np.ndarray:
        """Paths avoiding w at every enumerated level (w's level enters
        the random slalom iff the path misses it)."""
        t = self.full()
        for n in self.axes:
            m = w.mask(n)
            allowed = np.array([not (m >> i) & 1 for i in range(width(n))], dtype=bool)
            t = t & self._lift(n, allowed)
        return t

    def trace_event(self, point: OmegaPoint, lo: int) -> np.ndarray:
        """Paths whose random slalom matches the point's trace on levels
        [lo, point.level): the section at j is co-singleton at f(j)."""
        t = self.full()
        for j in range(max(lo, self.start), point.level):
            want = point.masks[j]
            allowed = np.array(
                [want == ((1 << width(j)) - 1) ^ (1 << i) for i in range(width(j))],
                dtype=bool)
            t = t & self._lift(j, allowed)
        return t

    def fraction(self, tensor: np.ndarray) -> Fraction:
        return Fraction(int(tensor.sum()), self.size)


def _prefix_gate(w: Slalom, point: OmegaPoint | None) -> bool:
    """Whether w's data below the window (or level 1 for the generic
    name, whose level-0 section is empty) is admissible."""
    if point is None:
        return w.mask(0) == 0
    return all(w.mask(j) & ~point.masks[j] == 0 for j in range(point.level))


def oracle_containment(w: Slalom, horizon: int) -> Fraction:
    """Exact generic containment fraction by full enumeration."""
    if not _prefix_gate(w, None):
        return Fraction(0)
    o = PathSpaceOracle(horizon)
    return o.fraction(o.containment_event(w))


def oracle_windowed_containment(w: Slalom, point: OmegaPoint, horizon: int) -> Fraction:
    """Exact windowed containment: gate below the window, enumerate from it."""
    if not _prefix_gate(w, point):
        return Fraction(0)
    if point.level == 0 and w.mask(0):
        return Fraction(0)
    o = PathSpaceOracle(horizon, start=max(point.level, 1))
    return o.fraction(o.containment_event(w))


def oracle_term(positives, negatives, horizon: int,
                name_point: OmegaPoint | None = None) -> Fraction:
    """Exact measure of a meet of containments and non-containments,
    under the generic or a windowed name."""
    start = max(name_point.level, 1) if name_point is not None else 1
    for w in positives:
        if not _prefix_gate(w, name_point):
            return Fraction(0)
    o = PathSpaceOracle(horizon, start=start)
    t = o.full()
    for w in positives:
        t = t & o.containment_event(w)
    for b in negatives:
        ev = o.containment_event(b)
        if not _prefix_gate(b, name_point):
            ev = np.zeros_like(ev)
        t = t & ~ev
    return o.fraction(t)


@pytest.fixture
def frozen_seed():
    return 20160407
