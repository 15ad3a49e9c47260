"""The trace-point set Omega and the set algebra its generators span.

Omega consists of pairs (S, n) where S is a slalom trace confined to
n x 2^n (columns below 2^j at level j, every level a proper subset).
Two generator families act on it:

* a superset generator for a slalom A holds at (T, n) when A's data
  below n is contained in T;
* a window generator for (S, n) holds at (T, m) when m >= n and T's
  trace below n is exactly S.

Meets of generators are either finite or contain the canonical tail
{(S u A|[n,m), m) : m large}, and that dichotomy is decided here
exactly.  Literal enumeration of Omega explodes (level n alone has
prod_{j<n} (2^(2^j)-1) traces), so alongside the materializing
enumerator there is an exact closed-form point counter and a seeded
point sampler; tests tie all three together at small depth.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Union

from .rng import SplitMix64
from .slaloms import (
    HORIZON_CAP,
    Slalom,
    union_all,
    width,
)

OMEGA_DEPTH_CAP = 10
ENUM_POINT_BUDGET = 2_000_000
CASE_SPLIT_BUDGET = 1 << 16


class OmegaError(ValueError):
    pass


class DepthCapError(OmegaError):
    pass


@dataclass(frozen=True)
class OmegaPoint:
    """A pair (trace, level); ``masks[j]`` is the trace's level-j section."""

    masks: tuple[int, ...]

    def __post_init__(self):
        if len(self.masks) > HORIZON_CAP:
            raise OmegaError(f"point level {len(self.masks)} exceeds cap {HORIZON_CAP}")
        for j, m in enumerate(self.masks):
            if m < 0 or m.bit_length() > width(j) or m.bit_count() >= width(j):
                raise OmegaError(f"trace level {j} must be a proper subset of 2^{j}")

    @property
    def level(self) -> int:
        return len(self.masks)

    def trace_slalom(self) -> Slalom:
        return Slalom(self.masks, None)

    def prefix(self, n: int) -> tuple[int, ...]:
        return self.masks[:n]

    @classmethod
    def root(cls) -> "OmegaPoint":
        return cls(())

    @classmethod
    def from_levels(cls, level: int, levels: dict[int, Iterable[int]]) -> "OmegaPoint":
        return cls(Slalom.from_levels(level, levels).masks)

    @classmethod
    def from_slalom_prefix(cls, s: Slalom, level: int) -> "OmegaPoint":
        return cls(s.prefix_masks(level))


ROOT_WINDOW = OmegaPoint(())


# -- enumeration ------------------------------------------------------------


def traces_at_level(n: int) -> int:
    """Number of valid traces at level n: prod_{j<n} (2^(2^j) - 1)."""
    out = 1
    for j in range(n):
        out *= (1 << (1 << j)) - 1
    return out


def omega_count(depth: int) -> int:
    """Number of points of level <= depth."""
    return sum(traces_at_level(n) for n in range(depth + 1))


def iter_level(n: int) -> Iterator[OmegaPoint]:
    """All level-n points, ascending in the trace bit-string encoding.

    The encoding packs level j into bits [2^j - 1, 2^(j+1) - 1), so the
    top trace level is most significant; valid level-j masks are exactly
    the integers in [0, 2^(2^j) - 1).
    """
    ranges = [range((1 << (1 << j)) - 1) for j in range(n - 1, -1, -1)]
    for combo in itertools.product(*ranges):
        yield OmegaPoint(tuple(reversed(combo)))


def iter_omega_lex(max_level: Optional[int] = None) -> Iterator[OmegaPoint]:
    """Level-lexicographic enumeration of Omega (the fixed total order
    used for weighted measure series)."""
    n = 0
    while max_level is None or n <= max_level:
        yield from iter_level(n)
        n += 1


def enum_omega(depth: int, point_budget: int = ENUM_POINT_BUDGET) -> list[OmegaPoint]:
    """Materialize every point of level <= depth.

    Guarded twice: by the configured depth cap and by the predicted
    point count, since level 5 alone already holds ~7.5e8 traces.
    """
    if depth > OMEGA_DEPTH_CAP:
        raise DepthCapError(f"depth {depth} exceeds cap {OMEGA_DEPTH_CAP}")
    total = omega_count(depth)
    if total > point_budget:
        raise DepthCapError(
            f"enumerating {total} points exceeds the budget {point_budget}; "
            "use point counting or sampling at this depth")
    out = []
    for n in range(depth + 1):
        out.extend(iter_level(n))
    return out


def sample_omega(depth: int, count: int, seed: int, min_level: int = 0) -> list[OmegaPoint]:
    """Deterministic pseudo-random points with levels in [min_level, depth]."""
    rng = SplitMix64(seed)
    out = []
    span = depth - min_level + 1
    for _ in range(count):
        n = min_level + rng.below(span)
        masks = []
        for j in range(n):
            m = rng.bits(width(j))
            if m.bit_count() == width(j):
                m &= ~(1 << rng.below(width(j)))
            masks.append(m)
        out.append(OmegaPoint(tuple(masks)))
    return out


# -- generators and terms ----------------------------------------------------


@dataclass(frozen=True)
class SetGen:
    """Points whose trace contains the slalom's data below their level."""

    slalom: Slalom


@dataclass(frozen=True)
class WindowGen:
    """Points of level >= n whose trace below n is exactly the window's."""

    window: OmegaPoint


Generator = Union[SetGen, WindowGen]


def member(gen: Generator, p: OmegaPoint) -> bool:
    if isinstance(gen, SetGen):
        s = gen.slalom
        if s.tail is not None and p.level > s.horizon:
            raise OmegaError("generator slalom not defined up to the point level")
        return all(s.mask(j) & ~p.masks[j] == 0 for j in range(p.level))
    return p.level >= gen.window.level and p.prefix(gen.window.level) == gen.window.masks


@dataclass(frozen=True)
class Disjunct:
    positives: tuple[Generator, ...]
    negatives: tuple[Generator, ...]


@dataclass(frozen=True)
class AlgebraTerm:
    """Boolean combination of generators in disjunctive normal form.

    No disjuncts is the zero element; a disjunct with no literals is the
    whole of Omega.
    """

    disjuncts: tuple[Disjunct, ...]

    @classmethod
    def zero(cls) -> "AlgebraTerm":
        return cls(())

    @classmethod
    def top(cls) -> "AlgebraTerm":
        return cls((Disjunct((), ()),))

    @classmethod
    def meet(cls, positives: Sequence[Generator], negatives: Sequence[Generator] = ()) -> "AlgebraTerm":
        return cls((Disjunct(tuple(positives), tuple(negatives)),))

    @classmethod
    def of_slalom(cls, s: Slalom) -> "AlgebraTerm":
        return cls.meet([SetGen(s)])

    def complement_of_meet(self) -> "AlgebraTerm":
        """De Morgan complement of a single-disjunct term."""
        if len(self.disjuncts) != 1:
            raise OmegaError("complement_of_meet needs a single disjunct")
        d = self.disjuncts[0]
        parts = [Disjunct((), (g,)) for g in d.positives]
        parts += [Disjunct((g,), ()) for g in d.negatives]
        return AlgebraTerm(tuple(parts))


def eval_term(term: AlgebraTerm, p: OmegaPoint) -> bool:
    for d in term.disjuncts:
        if all(member(g, p) for g in d.positives) and not any(member(g, p) for g in d.negatives):
            return True
    return False


# -- meet infinitude ---------------------------------------------------------


@dataclass(frozen=True)
class InfiniteMeet:
    """The meet contains the canonical minimal-trace tail.

    ``witness(m)`` is the point whose trace follows the resolved window
    below ``base.level`` and the positive union above it; every witness
    from ``start_level`` on satisfies the meet.
    """

    start_level: int
    base: OmegaPoint
    union: Slalom

    @property
    def kind(self) -> str:
        return "infinite"

    def witness(self, m: int) -> OmegaPoint:
        if m < self.start_level:
            raise OmegaError(f"witnesses start at level {self.start_level}")
        masks = list(self.base.masks)
        masks += [self.union.mask(j) for j in range(self.base.level, m)]
        return OmegaPoint(tuple(masks))


@dataclass(frozen=True)
class FiniteMeet:
    bound: int
    reason: str

    @property
    def kind(self) -> str:
        return "finite"


@dataclass(frozen=True)
class EmptyMeet:
    reason: str

    @property
    def kind(self) -> str:
        return "empty"


MeetVerdict = Union[InfiniteMeet, FiniteMeet, EmptyMeet]


def _require_empty_tail(s: Slalom, role: str) -> None:
    if s.tail is not None:
        raise OmegaError(f"{role} must have an empty tail (rule tails are rejected)")


def _escape_levels(b: Slalom, base_masks: Sequence[int], base_level: int, u: Slalom) -> Optional[int]:
    """Least level at which the negated generator escapes the meet, where
    an escape below the base level counts as immediately available.

    Returns the least m such that every witness of level > ... precisely:
    ``base_level`` if b has a point outside the fixed trace, else
    k + 1 for the least level k >= base_level with b's data not inside u,
    else None (no escape: the negation annihilates the meet)."""
    for k in range(min(base_level, b.horizon)):
        if b.masks[k] & ~base_masks[k]:
            return base_level
    for k in range(base_level, b.horizon):
        if b.masks[k] & ~u.mask(k):
            return k + 1
    return None


def meet_infinitude(positives: Sequence[Slalom],
                    window: Optional[OmegaPoint] = None,
                    negatives: Sequence[Generator] = (),
                    case_budget: int = CASE_SPLIT_BUDGET) -> MeetVerdict:
    """Decide whether a meet of generators is infinite, finite, or empty.

    The decision follows the homomorphism case analysis: a saturated
    level of the positive union bounds the meet (no point above it), a
    violated window trace empties it, a negated superset generator
    whose data is swallowed by the window-plus-union empties it, and
    otherwise the minimal-trace witnesses run off to infinity.  Negated
    window generators above the base window are eliminated by a finite
    case split on the trace at their top level.
    """
    for s in positives:
        _require_empty_tail(s, "positive generator")
    u = union_all(positives) if positives else Slalom.empty(0)
    base = window if window is not None else ROOT_WINDOW
    n = base.level

    # window gate
    for j in range(min(n, u.horizon)):
        if u.masks[j] & ~base.masks[j]:
            return EmptyMeet("positive union sticks out of the window trace")

    # saturation bound
    for j in range(n, u.horizon):
        if u.masks[j].bit_count() == width(j):
            return FiniteMeet(j, f"positive union saturates level {j}")

    neg_sets: list[Slalom] = []
    pending_windows: list[OmegaPoint] = []
    for g in negatives:
        if isinstance(g, SetGen):
            _require_empty_tail(g.slalom, "negated generator")
            neg_sets.append(g.slalom)
            continue
        wpt = g.window
        if wpt.level <= n:
            if base.prefix(wpt.level) == wpt.masks:
                return EmptyMeet("negated window matches the base trace")
            continue  # negation holds at every point of the meet
        # incompatible forbidden windows never match a meet point
        if wpt.prefix(n) != base.masks:
            continue
        if any(u.mask(j) & ~wpt.masks[j] for j in range(n, wpt.level)):
            continue
        pending_windows.append(wpt)

    if not pending_windows:
        return _decide_pure(u, base, neg_sets)

    n_star = max(w.level for w in pending_windows)
    free_counts = []
    for j in range(n, n_star):
        free_counts.append((1 << (width(j) - u.mask(j).bit_count())) - 1)
    cases = 1
    for c in free_counts:
        cases *= c
    if cases > case_budget:
        raise DepthCapError(f"window case split of size {cases} exceeds budget {case_budget}")

    choice_sets = []
    for j in range(n, n_star):
        um = u.mask(j)
        free = [b for b in range(width(j)) if not um & (1 << b)]
        opts = []
        for extra in range(1 << len(free)):
            m = um
            for t, b in enumerate(free):
                if extra & (1 << t):
                    m |= 1 << b
            if m.bit_count() < width(j):
                opts.append(m)
        choice_sets.append(opts)

    forbidden = {w.level: set() for w in pending_windows}
    for w in pending_windows:
        forbidden[w.level].add(w.masks)

    for combo in itertools.product(*choice_sets):
        masks = base.masks + combo
        if any(masks[:lvl] in traces for lvl, traces in forbidden.items()):
            continue
        resolved = OmegaPoint(masks)
        verdict = _decide_pure(u, resolved, neg_sets)
        if isinstance(verdict, InfiniteMeet):
            return verdict
    return FiniteMeet(n_star - 1, "every window case above the split level dies")


def _decide_pure(u: Slalom, base: OmegaPoint, neg_sets: Sequence[Slalom]) -> MeetVerdict:
    start = base.level
    for b in neg_sets:
        e = _escape_levels(b, base.masks, base.level, u)
        if e is None:
            return EmptyMeet("a negated generator is contained in the window and union")
        start = max(start, e)
    return InfiniteMeet(start, base, u.truncated(max(u.horizon, 0)))


def term_from_meet(positives: Sequence[Slalom],
                   window: Optional[OmegaPoint],
                   negatives: Sequence[Generator]) -> AlgebraTerm:
    pos: list[Generator] = [SetGen(s) for s in positives]
    if window is not None:
        pos.append(WindowGen(window))
    return AlgebraTerm.meet(pos, list(negatives))


# -- exact point counting ----------------------------------------------------


def _merge_windows(windows: Sequence[OmegaPoint]) -> Optional[OmegaPoint]:
    """Common refinement of window constraints, or None when inconsistent."""
    if not windows:
        return ROOT_WINDOW
    top = max(windows, key=lambda w: w.level)
    for w in windows:
        if top.prefix(w.level) != w.masks:
            return None
    return top


def _count_contained(r: Slalom, base: OmegaPoint, p: int) -> int:
    """Number of level-p points with trace fixed below base.level that
    contain r's data levelwise."""
    n = base.level
    if p < n:
        return 0
    for j in range(min(n, r.horizon)):
        if r.masks[j] & ~base.masks[j]:
            return 0
    total = 1
    for j in range(n, p):
        free = width(j) - r.mask(j).bit_count()
        if free == 0:
            return 0
        total *= (1 << free) - 1
    return total


def count_meet_points(positives: Sequence[Slalom],
                      window: Optional[OmegaPoint],
                      negatives: Sequence[Generator],
                      depth: int) -> int:
    """Exact number of points of level <= depth in the meet.

    Inclusion-exclusion over the negated generators reduces everything
    to products of per-level superset counts; no materialization, so
    this scales to the depths the infinitude verdicts are checked at.
    """
    for s in positives:
        _require_empty_tail(s, "positive generator")
    u = union_all(positives) if positives else Slalom.empty(0)
    base = window if window is not None else ROOT_WINDOW
    neg_sets = [g.slalom for g in negatives if isinstance(g, SetGen)]
    for b in neg_sets:
        _require_empty_tail(b, "negated generator")
    neg_windows = [g.window for g in negatives if isinstance(g, WindowGen)]

    total = 0
    for js in range(1 << len(neg_sets)):
        picked = [neg_sets[i] for i in range(len(neg_sets)) if js & (1 << i)]
        r = union_all([u, *picked]) if picked else u
        sign_sets = -1 if bin(js).count("1") % 2 else 1
        for ks in range(1 << len(neg_windows)):
            wpicked = [base] + [neg_windows[i] for i in range(len(neg_windows)) if ks & (1 << i)]
            merged = _merge_windows(wpicked)
            if merged is None:
                continue
            sign = sign_sets * (-1 if bin(ks).count("1") % 2 else 1)
            for p in range(depth + 1):
                total += sign * _count_contained(r, merged, p)
    return total


def count_term_points(term: AlgebraTerm, depth: int) -> int:
    """Exact satisfying-point count of a DNF term via inclusion-exclusion
    over its disjuncts (meant for small terms)."""
    ds = term.disjuncts
    total = 0
    for pick in range(1, 1 << len(ds)):
        chosen = [ds[i] for i in range(len(ds)) if pick & (1 << i)]
        positives: list[Slalom] = []
        windows: list[OmegaPoint] = []
        negatives: list[Generator] = []
        for d in chosen:
            for g in d.positives:
                if isinstance(g, SetGen):
                    positives.append(g.slalom)
                else:
                    windows.append(g.window)
            negatives.extend(d.negatives)
        merged = _merge_windows(windows)
        if merged is None:
            continue
        sign = -1 if bin(pick).count("1") % 2 == 0 else 1
        total += sign * count_meet_points(positives, merged, negatives, depth)
    return total


# -- canonical pi-base elements ----------------------------------------------


class CanonicalizeError(OmegaError):
    pass


@dataclass(frozen=True)
class PiBaseElement:
    """Canonical representative of an infinite meet of one superset
    generator with one window generator.

    Canonical form: the set part contains the window trace as its own
    prefix, and its section at the window level misses at least two
    columns.  Equal canonical forms characterize mod-finite equality of
    the represented meets.
    """

    set_part: Slalom
    window: OmegaPoint

    def __post_init__(self):
        a, w = self.set_part, self.window
        if a.tail is not None:
            raise CanonicalizeError("canonical elements need an empty tail")
        if a.prefix_masks(w.level) != w.masks:
            raise CanonicalizeError("set part must carry the window trace as its prefix")
        if a.level_size(w.level) >= width(w.level) - 1:
            raise CanonicalizeError("set part too dense at the window level")
        if a.first_saturated() is not None:
            raise CanonicalizeError("set part saturates a level; the meet is finite")

    @property
    def key(self) -> tuple:
        return (self.window.masks, self.set_part.masks)

    def as_meet(self) -> tuple[list[Slalom], OmegaPoint, list]:
        return [self.set_part], self.window, []

    def term(self) -> AlgebraTerm:
        return term_from_meet([self.set_part], self.window, [])


def canonicalize(a: Slalom, window: OmegaPoint) -> PiBaseElement:
    """Canonical form of the meet of a superset generator with a window.

    Raises unless the meet is infinite.  The window slides up to the
    least level where the merged set part misses two columns; along the
    way each skipped level is pinned at exactly one missing column, so
    the canonical pair is unique on the mod-finite class.
    """
    verdict = meet_infinitude([a], window, [])
    if not isinstance(verdict, InfiniteMeet):
        raise CanonicalizeError(f"meet is not infinite: {verdict}")
    merged = union_all([a, window.trace_slalom()])
    m = max(window.level, 1)
    while merged.level_size(m) >= width(m) - 1:
        m += 1
    h = max(merged.support_end(), m)
    merged = merged.truncated(h) if merged.horizon > h else merged.padded(h)
    return PiBaseElement(merged, OmegaPoint(merged.prefix_masks(m)))


def pibase_enum(family: Sequence[Slalom], depth: int,
                point_budget: int = ENUM_POINT_BUDGET) -> list[PiBaseElement]:
    """All infinite canonical meets of family members with windows of
    level <= depth, deduplicated by canonical form."""
    seen: dict[tuple, PiBaseElement] = {}
    for w in enum_omega(depth, point_budget):
        for b in family:
            if not isinstance(meet_infinitude([b], w, []), InfiniteMeet):
                continue
            el = canonicalize(b, w)
            seen.setdefault(el.key, el)
    return [seen[k] for k in sorted(seen)]


# -- generator-identity spot checks -------------------------------------------


def _random_sparse_slalom(rng: SplitMix64, horizon: int) -> Slalom:
    masks = [0] * horizon
    for n in range(1, horizon):
        size = rng.below(min(width(n), 4))
        masks[n] = rng.subset_mask(width(n), size)
    return Slalom(tuple(masks))


def fact_check(depth: int = 8, trials: int = 50, seed: int = 2016,
               points_per_trial: int = 200) -> dict:
    """Pointwise checks of the generator identities.

    For random pairs A, B: the superset generator of the union agrees
    with the meet of the two generators, and containment of slaloms
    reverses on generators.  Checked exhaustively at depth 3 and on a
    seeded point sample up to ``depth``.  The infinitude criterion for a
    single generator is checked through point counts: the count grows
    strictly with depth exactly when no level saturates.
    """
    rng = SplitMix64(seed)
    horizon = min(depth, 7)
    base_points = enum_omega(3)
    failures: list[str] = []
    checked = 0
    for t in range(trials):
        a = _random_sparse_slalom(rng, horizon)
        b = _random_sparse_slalom(rng, horizon)
        ab = union_all([a, b])
        sup = union_all([a, _random_sparse_slalom(rng, horizon)])  # a subseteq sup
        pts = base_points + sample_omega(depth, points_per_trial, seed=rng.next_u64())
        for p in pts:
            checked += 1
            lhs = member(SetGen(ab), p)
            rhs = member(SetGen(a), p) and member(SetGen(b), p)
            if lhs != rhs:
                failures.append(f"union identity fails at trial {t}")
                break
            if member(SetGen(sup), p) and not member(SetGen(a), p):
                failures.append(f"antitonicity fails at trial {t}")
                break
        counts = [count_meet_points([a], None, [], d) for d in range(4, 9)]
        growing = all(x < y for x, y in zip(counts, counts[1:]))
        saturated = a.first_saturated() is not None
        if growing == saturated:
            failures.append(f"growth criterion fails at trial {t}")
    # a saturating section freezes the count at its level
    sat = Slalom.from_levels(4, {2: range(4)})
    sat_counts = [count_meet_points([sat], None, [], d) for d in range(2, 7)]
    if not all(c == sat_counts[0] for c in sat_counts):
        failures.append("saturating generator count did not stabilize")
    return {
        "trials": trials,
        "points_checked": checked,
        "failures": failures,
    }
