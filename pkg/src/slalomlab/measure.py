"""Exact product-measure values of containment statements about slaloms.

The ambient space is prod_n 2^n with the uniform product measure; the
random slalom omits one column per level (section 2^n minus {f(n)} for
the generic path f).  The truth value of "column k enters level n" is
the complement of a cylinder of measure 1/2^n, so containment of a
fixed slalom in the random one has measure prod (1 - |W(n)|/2^n), with
levelwise factors independent across levels.

A windowed variant pins the random slalom below a level m to a fixed
trace; containment then gates on the trace and the product starts at m.
Everything here is exact rational arithmetic; rule-tail inputs yield
certified intervals instead of exact points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .omega import (
    InfiniteMeet,
    OmegaPoint,
    SetGen,
    iter_omega_lex,
    meet_infinitude,
)
from .slaloms import (
    Slalom,
    Status,
    union_all,
    verdict,
    width,
)

ZERO = Fraction(0)
ONE = Fraction(1)

INCLUSION_EXCLUSION_CAP = 20


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class SlalomName:
    """Name for the random slalom, optionally pinned below a window level."""

    window: Optional[OmegaPoint] = None

    @classmethod
    def generic(cls) -> "SlalomName":
        return cls(None)

    @classmethod
    def windowed(cls, point: OmegaPoint) -> "SlalomName":
        return cls(point)

    @property
    def level(self) -> int:
        return self.window.level if self.window is not None else 0

    def trace_mask(self, j: int) -> int:
        assert self.window is not None
        return self.window.masks[j]


@dataclass(frozen=True)
class MeasureValue:
    """Exact rational plus a certified interval around the untruncated value."""

    value: Fraction
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not (self.lo <= self.value <= self.hi):
            raise MeasureError("measure interval does not bracket the value")

    @classmethod
    def exact(cls, v: Fraction) -> "MeasureValue":
        return cls(v, v, v)

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi


def level_factor(w: Slalom, n: int) -> Fraction:
    """Measure of "level n of w is inside the random slalom": 1 - |w(n)|/2^n."""
    if n < 1:
        raise MeasureError("level factors start at level 1")
    return ONE - Fraction(w.mask(n).bit_count(), width(n))


def _tail_interval(value: Fraction, w: Slalom, start: int) -> MeasureValue:
    """Wrap the truncated product in the certified interval for w's tail.

    Unknown levels multiply by factors in [1 - d_n, 1]; Weierstrass gives
    prod (1 - d_n) >= 1 - sum d_n with the closed-form envelope sum."""
    if w.tail is None:
        return MeasureValue.exact(value)
    tail_sum = w.tail_sum_bound(max(start, w.horizon))
    lo = value * max(ZERO, ONE - tail_sum)
    return MeasureValue(value, lo, value)


def boolean_meet_measure(u: Slalom, term_window: Optional[OmegaPoint],
                         name: SlalomName) -> MeasureValue:
    """Measure of "u is contained in the named slalom" joined, when a
    window generator is part of the term, with "the named slalom's trace
    at the generator's level is exactly the generator's trace".

    Below the name's window the sections are pinned, so those levels
    contribute 0/1 gates; between the name window and the term window
    the trace event costs one column choice per level (the trace there
    must be co-singleton); from the join on, the levels are independent
    complement-of-cylinder events.
    """
    m = name.level
    l = term_window.level if term_window is not None else 0
    top = max(u.horizon, m, l)
    # Rule tails reaching into pinned levels turn gates into unknowns;
    # the value keeps the table-only product and the lower bound drops to 0.
    blind_gate = u.tail is not None and max(m, l) > u.horizon
    value = ONE
    for j in range(top):
        uj = u.masks[j] if j < u.horizon else 0
        if j < m:
            tr = name.trace_mask(j)
            if j < l and term_window.masks[j] != tr:
                return MeasureValue.exact(ZERO)
            if uj & ~tr:
                return MeasureValue.exact(ZERO)
        elif j < l:
            tw = term_window.masks[j]
            if tw.bit_count() != width(j) - 1 or (uj & ~tw):
                return MeasureValue.exact(ZERO)
            value /= width(j)
        else:
            f = ONE - Fraction(uj.bit_count(), width(j))
            if f == 0:
                return MeasureValue.exact(ZERO)
            value *= f
    if blind_gate:
        return MeasureValue(value, ZERO, value)
    return _tail_interval(value, u, max(m, l, u.horizon))


def containment_measure(w: Slalom, name: SlalomName) -> MeasureValue:
    """lambda of "w is contained in the named slalom"."""
    return boolean_meet_measure(w, None, name)


def term_measure(positives: Sequence[Slalom], negatives: Sequence[Slalom],
                 name: SlalomName,
                 term_window: Optional[OmegaPoint] = None) -> MeasureValue:
    """Measure of a meet of containments and non-containments.

    Inclusion-exclusion over the negated slaloms; each summand is a
    plain containment of a union, so a saturated union level kills the
    summand through its zero factor.  Cost is 2^(#negatives); capped.
    """
    if len(negatives) > INCLUSION_EXCLUSION_CAP:
        raise MeasureError(
            f"{len(negatives)} negatives exceed the inclusion-exclusion cap "
            f"{INCLUSION_EXCLUSION_CAP}")
    base = union_all(list(positives)) if positives else Slalom.empty(0)
    value = ZERO
    lo = ZERO
    hi = ZERO
    for r in range(len(negatives) + 1):
        for picked in itertools.combinations(negatives, r):
            u = union_all([base, *picked]) if picked else base
            mv = boolean_meet_measure(u, term_window, name)
            if r % 2 == 0:
                value += mv.value
                lo += mv.lo
                hi += mv.hi
            else:
                value -= mv.value
                lo -= mv.hi
                hi -= mv.lo
    lo = max(lo, ZERO)
    hi = min(hi, ONE)
    return MeasureValue(value, min(lo, value), max(hi, value))


def nu(point: OmegaPoint, positives: Sequence[Slalom],
       negatives: Sequence[Slalom] = (),
       term_window: Optional[OmegaPoint] = None) -> MeasureValue:
    """The measure induced by the name windowed at ``point``."""
    return term_measure(positives, negatives, SlalomName.windowed(point), term_window)


def tail_density_sum(w: Slalom, start: int) -> Fraction:
    """Sigma_{i >= start} |w(i)|/2^i, exact for empty tails, an upper
    envelope otherwise."""
    return w.partial_sum(max(start, 0)) + w.tail_sum_bound(start)


def delta_compare(w: Slalom, points: Sequence[OmegaPoint]) -> list[tuple[OmegaPoint, Fraction, Fraction]]:
    """Per point (T, m): nu_(T,m) of the w-generator minus the Dirac mass
    of the point, with the factorwise tail bound Sigma_{i>=m} |w(i)|/2^i.

    Off the generator both terms vanish; on it the defect is 1 minus a
    product of factors each at least 1 - |w(i)|/2^i.
    """
    out = []
    for p in points:
        val = containment_measure(w, SlalomName.windowed(p)).value
        delta = ONE if all(w.mask(j) & ~p.masks[j] == 0 for j in range(p.level)) else ZERO
        out.append((p, val - delta, tail_density_sum(w, p.level)))
    return out


@dataclass(frozen=True)
class MuResult:
    value: MeasureValue
    strictly_positive: bool
    series_length: int


def mu(positives: Sequence[Slalom], negatives: Sequence[Slalom], series_length: int,
       term_window: Optional[OmegaPoint] = None) -> MuResult:
    """The strictly positive series measure: each trace point (S, n), in
    the fixed level-lexicographic order, contributes its windowed measure
    weighted by 2^-(index+1).

    The partial sum over the first ``series_length`` points is exact and
    the unresolved weight is exactly 2^-series_length, giving the value
    interval.  Terms whose meet is finite get mass zero from every
    summand (the windowed measures vanish on finite sets), so the zero
    class collapses to an exact 0.
    """
    for s in list(positives) + list(negatives):
        if s.tail is not None:
            raise MeasureError("series measure needs empty-tail terms")
    verdict = meet_infinitude(list(positives), term_window,
                              [SetGen(b) for b in negatives])
    if not isinstance(verdict, InfiniteMeet):
        return MuResult(MeasureValue.exact(ZERO), False, series_length)
    partial = ZERO
    weight = Fraction(1, 2)
    for point in itertools.islice(iter_omega_lex(), series_length):
        mv = term_measure(positives, negatives, SlalomName.windowed(point), term_window)
        partial += weight * mv.value
        weight /= 2
    tail = Fraction(1, 1 << series_length)
    return MuResult(MeasureValue(partial, partial, partial + tail), partial > 0,
                    series_length)


# -- destructibility ----------------------------------------------------------


@dataclass(frozen=True)
class DestructCert:
    """Least level past which w's density sum drops under epsilon; the
    bad cylinder union above it has measure at most that sum."""

    level: int
    bound: Fraction


def destructibility_certificate(w: Slalom, eps: Fraction) -> DestructCert:
    if eps <= 0:
        raise MeasureError("epsilon must be positive")
    if verdict(w, "W").status is not Status.YES:
        raise MeasureError("input is not certified summable-and-slalom (W)")
    n = 0
    while True:
        bound = tail_density_sum(w, n + 1)
        if bound < eps:
            return DestructCert(n, bound)
        n += 1


def borel_cantelli_bound(w: Slalom, m: int) -> Fraction:
    """Measure bound for "infinitely many levels >= m hit w": the exact
    tail density sum, monotone to 0 in m."""
    if verdict(w, "W").status is not Status.YES:
        raise MeasureError("input is not certified summable-and-slalom (W)")
    return tail_density_sum(w, m)


# -- majority extraction -------------------------------------------------------


class BudgetError(MeasureError):
    pass


@dataclass(frozen=True)
class MajorityExtract:
    slalom: Slalom
    sizes: tuple[int, ...]
    size_bounds: tuple[int, ...]
    vacuous_levels: tuple[int, ...]

    @property
    def sizes_ok(self) -> bool:
        return all(s < b for s, b in zip(self.sizes, self.size_bounds))


def majority_extract(values: Mapping[tuple[int, int], Fraction],
                     g: Callable[[int], int],
                     levels: Iterable[int]) -> MajorityExtract:
    """Extract per level the columns whose value exceeds 2^n/g(n).

    ``values`` assigns each cell the measure of "the cell enters the
    named slalom"; a slalom name can put at most 2^n - 1 expected columns
    in level n, and that budget is validated per level (violations are
    errors).  Under the budget, |A(n)| < g(n) holds automatically; levels
    where the threshold reaches 1 are flagged as vacuous, which is how a
    slowly growing g (violating g(n)/2^n -> infinity) shows up.
    """
    level_list = sorted(levels)
    horizon = (max(level_list) + 1) if level_list else 0
    masks = [0] * horizon
    sizes = []
    bounds = []
    vacuous = []
    for n in level_list:
        total = ZERO
        for k in range(width(n)):
            v = values.get((n, k), ZERO)
            if not 0 <= v <= 1:
                raise MeasureError(f"value at ({n},{k}) outside [0,1]")
            total += v
        if total > width(n) - 1:
            raise BudgetError(
                f"level {n} value sum {total} exceeds the slalom-name budget {width(n) - 1}")
        gn = g(n)
        if gn <= 0:
            raise MeasureError(f"level bound g({n}) must be positive")
        threshold = Fraction(width(n), gn)
        if threshold >= 1:
            vacuous.append(n)
        mask = 0
        for k in range(width(n)):
            if values.get((n, k), ZERO) > threshold:
                mask |= 1 << k
        masks[n] = mask
        sizes.append(mask.bit_count())
        bounds.append(gn)
    return MajorityExtract(Slalom(tuple(masks)), tuple(sizes), tuple(bounds),
                           tuple(vacuous))
