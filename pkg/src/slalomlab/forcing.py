"""The canonical poset of window conditions, its projection onto Cohen
forcing, and its embedding into a Mathias-style poset.

Conditions are the canonical infinite meets (set part carrying the
window trace as a prefix, two columns missing at the window level),
ordered by mod-finite inclusion of the represented sets, which the four
closed rules decide: window level drops, set part shrinks, traces agree
below the lower window, and the data between the windows is pinned.

The projection reads, per level, whether the condition forces the
lower half of the columns into the generic slalom; the closed form for
that is cross-validated against an extension-enumerating oracle, and
any disagreement is a hard error rather than a trusted shortcut.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .omega import OmegaPoint, PiBaseElement
from .slaloms import (
    Slalom,
    Status,
    full_mask,
    nat_to_cell,
    table_subset,
    verdict,
    width,
)


class ForcingError(ValueError):
    pass


class ProjectionDisagreement(ForcingError):
    """The closed-form projection and the extension oracle disagree."""

    def __init__(self, level: int, shortcut, oracle):
        super().__init__(
            f"projection disagreement at level {level}: "
            f"shortcut={shortcut!r} oracle={oracle!r}")
        self.level = level
        self.shortcut = shortcut
        self.oracle = oracle


def low_mask(m: int) -> int:
    """Columns [0, 2^(m-1)) of level m."""
    return (1 << (1 << (m - 1))) - 1


def high_mask(m: int) -> int:
    return full_mask(m) ^ low_mask(m)


def d_value(m: int, column_mask: int) -> int:
    """1 when the set contains every column of the lower half, else 0."""
    lo = low_mask(m)
    return 1 if column_mask & lo == lo else 0


def d_split_witnesses(m: int, column_mask: int) -> Optional[tuple[int, int]]:
    """For a set of size under 2^(m-1), two supersets of size 2^m - 1
    taking both d-values (the splitting property of the level maps)."""
    if column_mask.bit_count() >= 1 << (m - 1):
        return None
    lo, full = low_mask(m), full_mask(m)
    missing_high = high_mask(m) & ~column_mask
    one = column_mask | lo | (high_mask(m) ^ (missing_high & -missing_high))
    missing_low = lo & ~column_mask
    zero = full ^ (missing_low & -missing_low)
    if d_value(m, one) != 1 or d_value(m, zero) != 0:
        return None
    return one, zero


# -- canonical conditions -------------------------------------------------------


@dataclass(frozen=True)
class QCondition:
    """Canonical meet of one superset generator with one window generator."""

    set_part: Slalom
    window: OmegaPoint

    def __post_init__(self):
        a, w = self.set_part, self.window
        if a.tail is not None:
            raise ForcingError("conditions carry empty-tail set parts")
        if a.prefix_masks(w.level) != w.masks:
            raise ForcingError("set part must extend the window trace")
        if a.level_size(w.level) >= width(w.level) - 1:
            raise ForcingError("set part too dense at the window level")
        if a.first_saturated() is not None:
            raise ForcingError("set part saturates a level")

    @property
    def level(self) -> int:
        return self.window.level

    @property
    def in_dense(self) -> bool:
        return self.window.level > 1

    @classmethod
    def from_pibase(cls, el: PiBaseElement) -> "QCondition":
        return cls(el.set_part, el.window)

    def key(self) -> tuple:
        return (self.window.masks, self.set_part.masks)


def q_order(p: QCondition, q: QCondition) -> bool:
    """Mod-finite inclusion of the represented meets, p below q.

    Holds exactly when q's window sits no higher, the traces agree below
    it, and q's set part is contained in p's (which pins the data
    between the windows as a by-product).
    """
    n, m = p.level, q.level
    if n < m:
        return False
    if p.set_part.prefix_masks(m) != q.window.masks:
        return False
    return table_subset(q.set_part, p.set_part)


# -- Cohen conditions ------------------------------------------------------------


@dataclass(frozen=True)
class CohenCondition:
    """Finite partial function from levels >= 2 to {0, 1}."""

    entries: tuple[tuple[int, int], ...]

    def __post_init__(self):
        doms = [m for m, _ in self.entries]
        if sorted(doms) != list(doms) or len(set(doms)) != len(doms):
            raise ForcingError("entries must be sorted with distinct levels")
        for m, i in self.entries:
            if m < 2 or i not in (0, 1):
                raise ForcingError("domain starts at level 2 with bit values")

    @classmethod
    def of(cls, mapping: dict[int, int]) -> "CohenCondition":
        return cls(tuple(sorted(mapping.items())))

    def as_dict(self) -> dict[int, int]:
        return dict(self.entries)

    def domain(self) -> tuple[int, ...]:
        return tuple(m for m, _ in self.entries)


def cohen_leq(tau: CohenCondition, sigma: CohenCondition) -> bool:
    """Reverse inclusion: tau extends sigma as a partial function."""
    t = tau.as_dict()
    return all(t.get(m) == i for m, i in sigma.entries)


def all_cohen_conditions(levels: Sequence[int]) -> list[CohenCondition]:
    out = []
    for values in itertools.product((None, 0, 1), repeat=len(levels)):
        out.append(CohenCondition.of(
            {m: v for m, v in zip(levels, values) if v is not None}))
    return out


# -- the projection ---------------------------------------------------------------


ORACLE_EXHAUSTIVE_BUDGET = 1 << 10


def _realizable_level_traces(p: QCondition, m: int,
                             budget: int = ORACLE_EXHAUSTIVE_BUDGET) -> list[int]:
    """Level-m sections the generic slalom can take below p.

    Below the window the trace is frozen.  Above it, an extension with a
    higher window realizes any proper superset of the set part's level;
    those are enumerated outright when they fit the budget and otherwise
    replaced by the distinguishing family (the level itself, the level
    joined with each half, and one-column probes), which realizes both
    d-values whenever they are realizable at all.
    """
    am = p.set_part.mask(m)
    if m < p.level:
        return [am]
    free = full_mask(m) & ~am
    free_bits = [b for b in range(width(m)) if free & (1 << b)]
    if 1 << len(free_bits) <= budget:
        out = []
        for combo in range(1 << len(free_bits)):
            y = am
            for t, b in enumerate(free_bits):
                if combo & (1 << t):
                    y |= 1 << b
            if y != full_mask(m):
                out.append(y)
        return out
    cands = {am}
    for extra in (low_mask(m), high_mask(m), free & -free):
        y = am | extra
        if y != full_mask(m):
            cands.add(y)
    lo_missing = low_mask(m) & ~am
    if lo_missing:
        cands.add(am | (lo_missing & -lo_missing))
    return sorted(cands)


def _oracle_decided(p: QCondition, m: int,
                    budget: int = ORACLE_EXHAUSTIVE_BUDGET) -> Optional[int]:
    values = {d_value(m, y) for y in _realizable_level_traces(p, m, budget)}
    if len(values) == 1:
        return values.pop()
    return None


def cohen_project(p: QCondition, validate: bool = True,
                  search_depth: Optional[int] = None,
                  oracle_budget: int = ORACLE_EXHAUSTIVE_BUDGET) -> CohenCondition:
    """The forced part of the level maps along the generic slalom.

    Below the window the generic's trace is frozen, so every level there
    is decided by the trace.  At or above the window, the level map is
    forced to 1 exactly when the set part already holds the lower half,
    and forced to 0 exactly when it holds the upper half (then no
    proper-superset extension can complete the lower half).  Levels past
    the set part's support are empty and never decided.  The closed form
    is cross-checked per level against the extension oracle.
    """
    if not p.in_dense:
        raise ForcingError("projection lives on the dense subposet (window level > 1)")
    a = p.set_part
    top = max(p.level, a.support_end())
    entries: dict[int, int] = {}
    for m in range(2, top):
        am = a.mask(m)
        if m < p.level:
            entries[m] = d_value(m, am)
        elif am & low_mask(m) == low_mask(m):
            entries[m] = 1
        elif am & high_mask(m) == high_mask(m):
            entries[m] = 0
    if validate:
        limit = top if search_depth is None else min(top, search_depth)
        for m in range(2, limit):
            oracle = _oracle_decided(p, m, oracle_budget)
            if oracle != entries.get(m):
                raise ProjectionDisagreement(m, entries.get(m), oracle)
    return CohenCondition.of(entries)


def lift(p: QCondition, tau: CohenCondition) -> QCondition:
    """A condition below p whose projection is exactly tau (which must
    extend p's projection).

    The new window rises to the least level past p's window outside
    tau's domain; levels that tau decides get the matching half joined
    into the set part, so they become trace-decided or half-forced, and
    the window level itself stays two columns short by undecidedness.
    """
    sigma = cohen_project(p, validate=False)
    if not cohen_leq(tau, sigma):
        raise ForcingError("tau does not extend the projection of p")
    n = p.level
    t = tau.as_dict()
    s = sigma.as_dict()
    m = n if n >= 2 else 2
    while m in t:
        m += 1
    horizon = max(p.set_part.horizon, m, max(t, default=0) + 1)
    masks = list(p.set_part.padded(horizon).masks)
    for k, bit in t.items():
        if k in s:
            continue
        if k < n:
            raise ForcingError("tau rewrites a trace-decided level")
        masks[k] |= low_mask(k) if bit else high_mask(k)
    b = Slalom(tuple(masks))
    return QCondition(b, OmegaPoint(b.prefix_masks(m)))


# -- condition universes for sweeps -----------------------------------------------


def trace_shapes(j: int) -> tuple[int, ...]:
    """Per-level section shapes for sweep universes: empty, a singleton,
    each half, the near-full edges."""
    if j == 0:
        return (0,)
    if j == 1:
        return (0b00, 0b01, 0b10)
    lo, hi, full = low_mask(j), high_mask(j), full_mask(j)
    shapes = (0, 1, lo, hi, lo | (hi & -hi), full ^ (1 << (width(j) - 1)))
    return tuple(dict.fromkeys(shapes))


def set_shapes(j: int) -> tuple[int, ...]:
    if j <= 1:
        return trace_shapes(j)
    return (0, 1, low_mask(j), high_mask(j))


def enumerate_conditions(window_levels: Iterable[int], support_end: int) -> list[QCondition]:
    """Every canonical condition whose trace and set sections come from
    the documented shape catalogs, windows over the given levels, set
    data below ``support_end``."""
    out = []
    for n in window_levels:
        window_opts = tuple(m for m in set_shapes(n) if m.bit_count() < width(n) - 1)
        upper = [window_opts] + [set_shapes(j) for j in range(n + 1, support_end)]
        for tr in itertools.product(*[trace_shapes(j) for j in range(n)]):
            for combo in itertools.product(*upper):
                masks = tr + combo
                out.append(QCondition(Slalom(masks), OmegaPoint(tr)))
    return out


@dataclass(frozen=True)
class SweepReport:
    conditions: int
    pairs_checked: int
    lifts_checked: int
    oracle_validated: int
    findings: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.findings


def verify_projection(window_max: int = 5, cohen_top: int = 6,
                      support_end: int = 6,
                      lift_oracle_stride: int = 50) -> SweepReport:
    """Exhaustive projection check over the catalog universe.

    Confirms: the closed form agrees with the extension oracle on every
    condition; the projection is order-preserving on every comparable
    pair; every Cohen condition with domain in [2, cohen_top) is the
    exact projection of a lift, both from a root condition (image
    density) and from every condition it extends (the lifting property).
    """
    findings: list[str] = []
    conds = enumerate_conditions(range(2, window_max + 1), support_end)
    projections: dict[tuple, CohenCondition] = {}
    oracle_validated = 0
    for c in conds:
        try:
            projections[c.key()] = cohen_project(c, validate=True)
            oracle_validated += 1
        except ProjectionDisagreement as e:
            findings.append(str(e))
            projections[c.key()] = cohen_project(c, validate=False)

    buckets: dict[tuple, list[QCondition]] = {}
    for c in conds:
        buckets.setdefault((c.level, c.window.masks), []).append(c)

    pairs = 0
    for p in conds:
        fp = projections[p.key()]
        for m in range(2, p.level + 1):
            key = (m, p.set_part.prefix_masks(m))
            for q in buckets.get(key, ()):
                if not table_subset(q.set_part, p.set_part):
                    continue
                pairs += 1
                if not cohen_leq(fp, projections[q.key()]):
                    findings.append(
                        f"projection not order-preserving on a pair with windows "
                        f"{p.level}, {q.level}")

    cohen_levels = tuple(range(2, cohen_top))
    taus = all_cohen_conditions(cohen_levels)
    root = QCondition(Slalom((0, 0)), OmegaPoint((0, 0)))
    for tau in taus:
        q = lift(root, tau)
        if cohen_project(q, validate=False) != tau:
            findings.append(f"density lift misses {tau.entries}")

    lifts = 0
    for i, p in enumerate(conds):
        sigma = projections[p.key()]
        sd = sigma.as_dict()
        if any(m not in cohen_levels for m in sd):
            continue
        free = [m for m in cohen_levels if m not in sd]
        for values in itertools.product((None, 0, 1), repeat=len(free)):
            ext = dict(sd)
            ext.update({m: v for m, v in zip(free, values) if v is not None})
            tau = CohenCondition.of(ext)
            q = lift(p, tau)
            lifts += 1
            if not q_order(q, p):
                findings.append("lift is not below its condition")
                continue
            validate = lifts % lift_oracle_stride == 0
            if cohen_project(q, validate=validate) != tau:
                findings.append(f"lift projects wrongly for {tau.entries}")
    return SweepReport(len(conds), pairs, lifts, oracle_validated, tuple(findings))


# -- Mathias side -------------------------------------------------------------------


@dataclass(frozen=True)
class MathiasCondition:
    """Pair (stem, side set); the side set is co-small per block, stored
    as the level slalom it excludes under the cell enumeration."""

    stem: tuple[int, ...]
    base_exponent: int
    excluded: Slalom

    def __post_init__(self):
        if list(self.stem) != sorted(set(self.stem)):
            raise ForcingError("stem must be sorted and duplicate-free")
        if self.excluded.tail is not None:
            raise ForcingError("side sets are stored with empty tails")
        if self.stem and self.stem[-1] >= (1 << self.base_exponent):
            raise ForcingError("side set must start past the stem")

    @property
    def base(self) -> int:
        return 1 << self.base_exponent

    def side_mask(self, j: int) -> int:
        """Columns of level j whose cells lie in the side set."""
        if j < self.base_exponent:
            return 0
        return full_mask(j) ^ self.excluded.mask(j)

    def side_contains(self, x: int) -> bool:
        if x < self.base:
            return False
        j, i = nat_to_cell(x)
        return bool(self.side_mask(j) & (1 << i))

    def poset_violations(self, horizon: int) -> list[str]:
        """The Mathias-poset conditions, including the per-block hitting
        requirement (stem or side set meets every block below the horizon).

        Blocks below the base exponent get nothing from the side set, so
        the stem alone must hit them; from the base on the side set is
        co-small per block and only a saturated excluded level kills it.
        """
        bad = []
        for j in range(horizon):
            hit = any((1 << j) <= x < (1 << (j + 1)) for x in self.stem)
            hit = hit or bool(self.side_mask(j))
            if not hit:
                bad.append(f"block {j} missed by stem and side set")
        return bad


def mathias_leq(a: MathiasCondition, b: MathiasCondition,
                horizon: Optional[int] = None) -> bool:
    """(stem grows, side set shrinks, new stem comes from the old side set)."""
    if not set(b.stem) <= set(a.stem):
        return False
    if any(x not in b.stem and not b.side_contains(x) for x in a.stem):
        return False
    if a.base_exponent < b.base_exponent:
        return False
    top = horizon if horizon is not None else max(
        a.excluded.horizon, b.excluded.horizon, a.base_exponent) + 1
    for j in range(a.base_exponent, top):
        if a.side_mask(j) & ~b.side_mask(j):
            return False
    return True


def mathias_embed(p: QCondition) -> MathiasCondition:
    """Image of a canonical condition: the stem collects 0 and the cells
    the window trace omits below the window; the side set is the co-set
    of the set part's cells from the window block on."""
    n = p.level
    stem = [0]
    for j in range(n):
        missing = full_mask(j) ^ p.window.masks[j]
        for i in range(width(j)):
            if missing & (1 << i):
                stem.append((1 << j) + i)
    return MathiasCondition(tuple(sorted(stem)), n, p.set_part)


def mathias_range_check(c: MathiasCondition) -> bool:
    """The image characterization: stem below the base block, side set
    above it, and the base block keeps at least two side cells."""
    n = c.base_exponent
    if any(x >= (1 << n) for x in c.stem):
        return False
    return c.side_mask(n).bit_count() > 1


def mathias_order_check(window_max: int = 4, support_end: int = 5) -> SweepReport:
    """Exhaustive order-equivalence sweep over the catalog universe:
    the embedding is injective, lands in the characterized range, meets
    the poset conditions, and carries the condition order to the Mathias
    order in both directions."""
    findings: list[str] = []
    conds = enumerate_conditions(range(2, window_max + 1), support_end)
    images = [mathias_embed(c) for c in conds]
    seen: dict[tuple, int] = {}
    for i, (c, mc) in enumerate(zip(conds, images)):
        key = (mc.stem, mc.base_exponent, mc.excluded.masks)
        if key in seen:
            findings.append(f"embedding collides at conditions {seen[key]} and {i}")
        seen[key] = i
        if not mathias_range_check(mc):
            findings.append(f"image {i} misses the range characterization")
        viol = mc.poset_violations(max(support_end, mc.excluded.horizon))
        if viol:
            findings.append(f"image {i}: " + "; ".join(viol))
        if verdict(mc.excluded, "J").status is not Status.YES:
            findings.append(f"image {i}: excluded slalom leaves the density-zero class")
    pairs = 0
    horizon = support_end + 1
    for i, p in enumerate(conds):
        for j, q in enumerate(conds):
            pairs += 1
            lhs = q_order(p, q)
            rhs = mathias_leq(images[i], images[j], horizon)
            if lhs != rhs:
                findings.append(
                    f"order mismatch between conditions {i} and {j}: "
                    f"q_order={lhs} mathias={rhs}")
    return SweepReport(len(conds), pairs, 0, 0, tuple(findings))
