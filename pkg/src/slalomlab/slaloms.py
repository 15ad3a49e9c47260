"""Slaloms at finite horizon with explicit tail semantics.

A slalom is a subset S of omega x omega whose level-n section S(n) is a
set of columns below 2^n.  Objects here carry a finite table (levels
below the horizon) plus a tail descriptor saying what is asserted about
the unseen levels:

* ``tail=None`` (empty tail): the object is exactly its table; every
  level at or beyond the horizon is empty.
* ``GeometricTail(first_level, bound)``: levels n >= first_level have
  density |S(n)|/2^n at most bound^(n - first_level + 1); levels between
  the horizon and first_level are unconstrained.  The geometric envelope
  gives closed-form tail sums, and the unconstrained gap is what makes
  verdicts honestly undecidable at the horizon.

All arithmetic is exact (``fractions.Fraction``); level sections are
stored as integer bitmasks of width 2^n.  Memory model: a mask costs
one bit per column position up to its highest set column, so dense
sections are practical through level ~24 (a dense level-23 section is a
megabyte), while higher levels must stay column-sparse (all columns
below ~2^20); the hard horizon cap is 32.  Saturation tests go through
bit counts so no full-width mask is ever materialized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

HORIZON_CAP = 32

ZERO = Fraction(0)
ONE = Fraction(1)


class SlalomError(ValueError):
    """Malformed slalom-level input."""


class TailUnknownError(SlalomError):
    """A level beyond the horizon of a rule-tail object was dereferenced."""


def width(n: int) -> int:
    """Number of columns at level n."""
    return 1 << n


def full_mask(n: int) -> int:
    return (1 << (1 << n)) - 1


def mask_of(n: int, cols: Iterable[int]) -> int:
    mask = 0
    for c in cols:
        if not 0 <= c < width(n):
            raise SlalomError(f"column {c} out of range at level {n}")
        mask |= 1 << c
    return mask


def cols_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


@dataclass(frozen=True)
class GeometricTail:
    """Envelope for unseen levels: density <= bound^(n - first_level + 1).

    ``bound`` is a rational in [0, 1).  Levels in [horizon, first_level)
    carry no constraint at all.
    """

    first_level: int
    bound: Fraction

    def __post_init__(self):
        if not isinstance(self.bound, Fraction):
            object.__setattr__(self, "bound", Fraction(self.bound))
        if not (0 <= self.bound < 1):
            raise SlalomError("tail density bound must be a rational in [0,1)")
        if self.first_level < 0:
            raise SlalomError("tail first level must be non-negative")

    def density_bound(self, n: int) -> Fraction:
        if n < self.first_level:
            return ONE
        return self.bound ** (n - self.first_level + 1)

    def sum_bound(self, start: int) -> Fraction:
        """Closed-form upper bound for the density sum over levels >= start."""
        gap = max(0, self.first_level - start)
        if self.bound == 0:
            return Fraction(gap)
        g0 = max(start, self.first_level)
        geo = self.bound ** (g0 - self.first_level + 1) / (1 - self.bound)
        return gap + geo

    def has_gap_beyond(self, horizon: int) -> bool:
        return self.first_level > horizon


def union_tails(a: Optional[GeometricTail], b: Optional[GeometricTail]) -> Optional[GeometricTail]:
    """Sound envelope for a union: sizes add, so the combined rule keeps the
    larger ratio and shifts its anchor until one extra power absorbs the
    factor two (least K with r^K <= 1/2)."""
    if a is None:
        return b
    if b is None:
        return a
    r = max(a.bound, b.bound)
    f = max(a.first_level, b.first_level)
    if r == 0:
        return GeometricTail(f, ZERO)
    k = 0
    p = ONE
    while p > Fraction(1, 2):
        p *= r
        k += 1
    return GeometricTail(f + k, r)


@dataclass(frozen=True)
class Slalom:
    """Finite level table plus tail descriptor.

    ``masks[n]`` is the bitmask of the level-n section; saturation
    (mask == full) is representable, classification decides membership.
    """

    masks: tuple[int, ...]
    tail: Optional[GeometricTail] = None

    def __post_init__(self):
        if len(self.masks) > HORIZON_CAP:
            raise SlalomError(f"horizon {len(self.masks)} exceeds cap {HORIZON_CAP}")
        for n, m in enumerate(self.masks):
            if m < 0 or m.bit_length() > width(n):
                raise SlalomError(f"level {n} mask out of range")

    # -- construction -------------------------------------------------

    @classmethod
    def empty(cls, horizon: int) -> "Slalom":
        return cls(tuple([0] * horizon))

    @classmethod
    def from_levels(cls, horizon: int, levels: Mapping[int, Iterable[int]],
                    tail: Optional[GeometricTail] = None) -> "Slalom":
        masks = [0] * horizon
        for n, cols in levels.items():
            if not 0 <= n < horizon:
                raise SlalomError(f"level {n} outside horizon {horizon}")
            masks[n] = mask_of(n, cols)
        return cls(tuple(masks), tail)

    # -- basic accessors ----------------------------------------------

    @property
    def horizon(self) -> int:
        return len(self.masks)

    @property
    def empty_tail(self) -> bool:
        return self.tail is None

    def mask(self, n: int) -> int:
        if n < len(self.masks):
            return self.masks[n]
        if self.tail is None:
            return 0
        raise TailUnknownError(f"level {n} is beyond the horizon of a rule-tail slalom")

    def level(self, n: int) -> tuple[int, ...]:
        return cols_of(self.mask(n))

    def level_size(self, n: int) -> int:
        return self.mask(n).bit_count()

    def density(self, n: int) -> Fraction:
        return Fraction(self.level_size(n), width(n))

    def is_table_empty(self) -> bool:
        return all(m == 0 for m in self.masks)

    def support(self) -> tuple[int, ...]:
        return tuple(n for n, m in enumerate(self.masks) if m)

    def support_end(self) -> int:
        """One past the last level with table data."""
        for n in range(len(self.masks) - 1, -1, -1):
            if self.masks[n]:
                return n + 1
        return 0

    def first_saturated(self) -> Optional[int]:
        for n, m in enumerate(self.masks):
            if m.bit_count() == width(n):
                return n
        return None

    # -- exact sums ----------------------------------------------------

    def partial_sum(self, start: int = 0) -> Fraction:
        """Sigma_{start <= n < horizon} |S(n)| / 2^n, exact."""
        return sum((Fraction(self.masks[n].bit_count(), width(n))
                    for n in range(start, len(self.masks))), ZERO)

    def tail_sum_bound(self, start: int = 0) -> Fraction:
        """Upper bound for the density sum over unseen levels >= start."""
        if self.tail is None:
            return ZERO
        return self.tail.sum_bound(max(start, self.horizon))

    # -- structural operations ------------------------------------------

    def with_level(self, n: int, cols: Iterable[int]) -> "Slalom":
        masks = list(self.masks)
        masks[n] = mask_of(n, cols)
        return Slalom(tuple(masks), self.tail)

    def with_mask(self, n: int, mask: int) -> "Slalom":
        masks = list(self.masks)
        masks[n] = mask
        return Slalom(tuple(masks), self.tail)

    def padded(self, horizon: int) -> "Slalom":
        if horizon <= self.horizon:
            return self
        if self.tail is not None and self.tail.first_level < horizon:
            raise TailUnknownError("cannot pad a rule-tail slalom into its own tail")
        return Slalom(self.masks + (0,) * (horizon - self.horizon), self.tail)

    def truncated(self, horizon: int) -> "Slalom":
        if horizon >= self.horizon:
            return self
        return Slalom(self.masks[:horizon], self.tail)

    def drop_below(self, k: int) -> "Slalom":
        """Intersection with [k, infinity) x omega."""
        masks = tuple(0 if n < k else m for n, m in enumerate(self.masks))
        return Slalom(masks, self.tail)

    def restrict_levels(self, lo: int, hi: int) -> "Slalom":
        """Intersection with [lo, hi) x omega, keeping the horizon."""
        masks = tuple(m if lo <= n < hi else 0 for n, m in enumerate(self.masks))
        return Slalom(masks, None)

    def prefix_masks(self, n: int) -> tuple[int, ...]:
        """Table data below level n (pads with empties for n past the horizon)."""
        if n <= len(self.masks):
            return self.masks[:n]
        if self.tail is not None:
            raise TailUnknownError("prefix reaches into an unknown tail")
        return self.masks + (0,) * (n - len(self.masks))


def union(a: Slalom, b: Slalom) -> Slalom:
    """Levelwise union; tails combine by the sound envelope rule.

    The result may saturate levels; callers re-classify.
    """
    h = max(a.horizon, b.horizon)
    masks = tuple(a.mask(n) | b.mask(n) for n in range(h))
    return Slalom(masks, union_tails(a.tail, b.tail))


def union_all(slaloms: Sequence[Slalom], horizon: Optional[int] = None) -> Slalom:
    h = horizon if horizon is not None else max((s.horizon for s in slaloms), default=0)
    masks = [0] * h
    tail: Optional[GeometricTail] = None
    for s in slaloms:
        for n in range(min(h, s.horizon)):
            masks[n] |= s.masks[n]
        tail = union_tails(tail, s.tail)
    return Slalom(tuple(masks), tail)


def table_subset(a: Slalom, b: Slalom) -> bool:
    """Literal levelwise containment of the tables (tails ignored)."""
    h = max(a.horizon, b.horizon)
    return all(a.mask(n) & ~b.mask(n) == 0 for n in range(h))


# -- paths ---------------------------------------------------------------


@dataclass(frozen=True)
class PathReal:
    """Element of the product space prod_n 2^n, truncated at the horizon."""

    values: tuple[int, ...]

    def __post_init__(self):
        for n, v in enumerate(self.values):
            if not 0 <= v < width(n):
                raise SlalomError(f"path value {v} out of range at level {n}")

    @property
    def horizon(self) -> int:
        return len(self.values)

    @classmethod
    def constant(cls, horizon: int, value: int = 0) -> "PathReal":
        return cls(tuple(min(value, width(n) - 1) for n in range(horizon)))

    @classmethod
    def from_fn(cls, horizon: int, fn) -> "PathReal":
        return cls(tuple(fn(n) for n in range(horizon)))

    def __call__(self, n: int) -> int:
        return self.values[n]


def graph_of(f: PathReal) -> Slalom:
    """The slalom {(n, f(n)) : 1 <= n < horizon}; level 0 stays empty.

    Its density sum is below 1, so the graph always lands in the
    summable class W.
    """
    masks = [0] * f.horizon
    for n in range(1, f.horizon):
        masks[n] = 1 << f.values[n]
    return Slalom(tuple(masks), None)


# -- the enumeration bijection --------------------------------------------


def cell_to_nat(n: int, i: int) -> int:
    """Send level-n column i to 2^n + i; level n maps onto [2^n, 2^(n+1))."""
    if not 0 <= i < width(n):
        raise SlalomError(f"column {i} out of range at level {n}")
    return (1 << n) + i


def nat_to_cell(m: int) -> tuple[int, int]:
    """Inverse of cell_to_nat; 0 has no preimage."""
    if m <= 0:
        raise SlalomError("0 is outside the image of the cell enumeration")
    n = m.bit_length() - 1
    return n, m - (1 << n)


def level_image(n: int) -> range:
    return range(1 << n, 1 << (n + 1))


def slalom_image(s: Slalom) -> frozenset[int]:
    """Image of the table under the cell enumeration."""
    out = set()
    for n in range(s.horizon):
        for i in s.level(n):
            out.add(cell_to_nat(n, i))
    return frozenset(out)


def slalom_from_image(nats: Iterable[int], horizon: int) -> Slalom:
    levels: dict[int, list[int]] = {}
    for m in nats:
        n, i = nat_to_cell(m)
        if n >= horizon:
            raise SlalomError(f"cell {m} lies beyond horizon {horizon}")
        levels.setdefault(n, []).append(i)
    return Slalom.from_levels(horizon, levels)


# -- ideal classification --------------------------------------------------


class Status(Enum):
    YES = "yes"
    NO = "no"
    UNDETERMINED = "undetermined"


IDEAL_TAGS = ("S", "I", "W", "J", "V", "Z")


@dataclass(frozen=True)
class IdealVerdict:
    ideal: str
    status: Status
    certificate: dict = field(compare=False)

    def __bool__(self):
        return self.status is Status.YES


def classify(s: Slalom) -> list[IdealVerdict]:
    """Membership verdicts for the six ideals, with exact certificates.

    S   no level saturates;
    I   the density sum converges (summable ideal, block form);
    W   = I and S;
    J   densities tend to zero (density-zero ideal, block form);
    V   = J and S;
    Z   same as V (slaloms here always have columns below 2^n).

    Empty-tail objects are decided exactly.  Rule tails decide whatever
    the closed-form envelope settles: the geometric sum keeps I and J
    decided, while an anchor gap (first_level past the horizon) leaves
    saturation open and S/W/V/Z undetermined.
    """
    partial = s.partial_sum()
    sat = s.first_saturated()
    tail = s.tail
    gap = tail is not None and tail.has_gap_beyond(s.horizon)
    tail_bound = s.tail_sum_bound()

    if sat is not None:
        s_verdict = IdealVerdict("S", Status.NO, {"saturated_level": sat})
    elif gap:
        s_verdict = IdealVerdict(
            "S", Status.UNDETERMINED,
            {"unconstrained_levels": (s.horizon, tail.first_level)})
    else:
        s_verdict = IdealVerdict("S", Status.YES, {
            "partial_sum": partial,
            "tail_density_bound": tail.bound if tail else ZERO,
        })

    # The envelope sum is finite in every representable case, so the
    # summability question is always settled upward.
    i_verdict = IdealVerdict("I", Status.YES, {
        "partial_sum": partial,
        "sum_interval": (partial, partial + tail_bound),
    })

    j_verdict = IdealVerdict("J", Status.YES, {
        "limit_bound": tail.bound if tail else ZERO,
        "last_table_density": s.density(s.horizon - 1) if s.horizon else ZERO,
    })

    def conj(tag: str, a: IdealVerdict, b: IdealVerdict) -> IdealVerdict:
        if Status.NO in (a.status, b.status):
            src = a if a.status is Status.NO else b
            return IdealVerdict(tag, Status.NO, dict(src.certificate))
        if Status.UNDETERMINED in (a.status, b.status):
            src = a if a.status is Status.UNDETERMINED else b
            return IdealVerdict(tag, Status.UNDETERMINED, dict(src.certificate))
        cert = {"partial_sum": partial}
        cert.update(a.certificate)
        return IdealVerdict(tag, Status.YES, cert)

    w_verdict = conj("W", s_verdict, i_verdict)
    v_verdict = conj("V", s_verdict, j_verdict)
    z_verdict = IdealVerdict("Z", v_verdict.status, dict(v_verdict.certificate))
    return [s_verdict, i_verdict, w_verdict, j_verdict, v_verdict, z_verdict]


def verdict(s: Slalom, tag: str) -> IdealVerdict:
    for v in classify(s):
        if v.ideal == tag:
            return v
    raise SlalomError(f"unknown ideal tag {tag!r}")


def in_ideal(s: Slalom, tag: str) -> bool:
    return verdict(s, tag).status is Status.YES


# -- almost-inclusion -------------------------------------------------------


@dataclass(frozen=True)
class AlmostVerdict:
    status: Status
    witness_level: Optional[int]
    violations: tuple[int, ...]

    def __bool__(self):
        return self.status is Status.YES


def almost_subset(a: Slalom, b: Slalom) -> AlmostVerdict:
    """Mod-finite containment at the horizon.

    Tables are compared on the shared horizon (the shorter one).  The
    verdict is Yes with the least witness level m whose final segment
    [m, H) is violation-free; a violation at the very last level leaves
    no clean final segment and yields No.  An empty tail on the left is
    compatible with anything; rule tails are compared by their density
    bounds only, anything else is undetermined.
    """
    h = min(a.horizon, b.horizon)
    violations = tuple(n for n in range(h) if a.masks[n] & ~b.masks[n])

    if a.tail is None:
        tails_ok = True
    elif b.tail is not None and a.tail.bound <= b.tail.bound:
        tails_ok = True
    else:
        tails_ok = False

    if not tails_ok:
        return AlmostVerdict(Status.UNDETERMINED, None, violations)
    if violations and violations[-1] == h - 1:
        return AlmostVerdict(Status.NO, None, violations)
    m = violations[-1] + 1 if violations else 0
    return AlmostVerdict(Status.YES, m, violations)


def diagonal_real(s: Slalom) -> PathReal:
    """A path escaping every table level: f(n) is the least column not in S(n).

    Requires every level non-saturated.
    """
    values = []
    for n in range(s.horizon):
        m = s.masks[n]
        if m.bit_count() == width(n):
            raise SlalomError(f"level {n} is saturated; no escape column")
        c = 0
        while m & (1 << c):
            c += 1
        values.append(c)
    return PathReal(tuple(values))


def localizes(s: Slalom, fam: Sequence[PathReal]) -> list[AlmostVerdict]:
    """Per-path localization verdicts: graph_of(f) almost inside s."""
    out = []
    for f in fam:
        g = graph_of(f)
        h = min(g.horizon, s.horizon)
        out.append(almost_subset(g.truncated(h), s.truncated(h)))
    return out
