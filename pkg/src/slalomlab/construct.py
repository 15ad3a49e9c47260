"""Desk-scale builds of the slalom families behind the main results:
the one-step chain extension, block-based independent families, and
the search for bounding slaloms.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .chaincond import SaturationWitness, saturation_witness
from .omega import AlgebraTerm, OmegaPoint, SetGen, eval_term, term_from_meet
from .slaloms import (
    PathReal,
    Slalom,
    Status,
    almost_subset,
    graph_of,
    table_subset,
    union_all,
    verdict,
)

ZERO = Fraction(0)
ONE = Fraction(1)


class ConstructError(ValueError):
    pass


# -- chain extension step ------------------------------------------------------


@dataclass(frozen=True)
class ChainStepReport:
    """Everything the extension step constructs, for exact re-checking.

    ``g_alphas[a][n]`` is the least level past which input a's density
    sum drops under 2^-n; ``g`` dominates them all strictly; window n is
    the level range [g[n], g[n+1]); ``phi[n]`` holds the distinct input
    blocks admitted at window n (inputs join in priority order, at most
    n of them); ``merged`` is the union of all admitted blocks and
    ``extended`` adds the new path's graph from the cutoff on.
    """

    horizon: int
    g_alphas: tuple[tuple[int, ...], ...]
    g: tuple[int, ...]
    blocks: tuple[tuple[Slalom, ...], ...]      # per input, per window
    phi: tuple[tuple[Slalom, ...], ...]         # per window, distinct blocks
    merged: Slalom                              # A
    extended: Slalom                            # A_beta
    cutoff: int
    window_sums: tuple[Fraction, ...]
    settle: tuple[int, ...]                     # m_alpha per input

    @property
    def windows(self) -> int:
        return len(self.g) - 1


def _tail_sum(s: Slalom, start: int) -> Fraction:
    return s.partial_sum(start)


def _least_tail_level(s: Slalom, eps: Fraction) -> int:
    """Least t with the density sum from t on under eps."""
    t = 0
    for i in range(s.horizon):
        if _tail_sum(s, i) >= eps:
            t = i + 1
    return t


def chain_step(existing: Sequence[Slalom], f_beta: PathReal, horizon: int) -> ChainStepReport:
    """One extension round: localize the inputs' window blocks, merge the
    admitted blocks into a summable slalom above all inputs, and adjoin
    the new path's graph from the least admissible cutoff.

    Inputs need not be pairwise comparable.  Window n admits the blocks
    of the first n inputs, so the window-n density sum stays under
    n/2^n, and the total stays under the series constant 2; each input
    is almost-contained in the merge with witness level g[m_alpha].
    """
    for i, s in enumerate(existing):
        if s.tail is not None:
            raise ConstructError(f"input {i} has a rule tail")
        if verdict(s, "W").status is not Status.YES:
            raise ConstructError(f"input {i} is not in W")
    members = [s.padded(horizon) if s.horizon < horizon else s.truncated(horizon)
               for s in existing]

    # dominating strictly increasing g, with exact domination of each g_alpha
    g: list[int] = []
    g_alphas: list[list[int]] = [[] for _ in members]
    n = 0
    while not g or g[-1] < horizon:
        for a, s in enumerate(members):
            g_alphas[a].append(_least_tail_level(s, Fraction(1, 1 << n)))
        level = max((ga[n] for ga in g_alphas), default=n)
        level = max(level + 1, (g[-1] + 1) if g else 0)
        g.append(level)
        n += 1
        if n > horizon + len(members) + 2:
            break
    windows = len(g) - 1
    # every input needs a window past its priority index to settle into
    if members and windows < len(members) + 1:
        raise ConstructError(
            f"horizon {horizon} yields only {windows} windows; "
            f"{len(members)} inputs cannot all settle (needs at least "
            f"{len(members) + 1})")

    blocks: list[list[Slalom]] = []
    for a, s in enumerate(members):
        row = []
        for w in range(windows):
            row.append(s.restrict_levels(g[w], g[w + 1]))
        blocks.append(row)

    phi: list[tuple[Slalom, ...]] = []
    for w in range(windows):
        admitted: list[Slalom] = []
        for a in range(min(w, len(members))):
            blk = blocks[a][w]
            if not blk.is_table_empty() and blk not in admitted:
                admitted.append(blk)
        phi.append(tuple(admitted))

    merged = union_all([blk for row in phi for blk in row], horizon=horizon) \
        if any(phi) else Slalom.empty(horizon)

    window_sums = []
    for w in range(windows):
        lo, hi = g[w], min(g[w + 1], horizon)
        window_sums.append(sum((merged.density(i) for i in range(lo, hi)), ZERO))

    settle: list[int] = []
    for a in range(len(members)):
        m_a = windows
        for m in range(windows, -1, -1):
            ok = all(table_subset(blocks[a][w], merged) for w in range(m, windows))
            if ok:
                m_a = m
            else:
                break
        settle.append(m_a)

    graph = graph_of(f_beta)
    candidate = union_all([merged, graph], horizon=max(horizon, graph.horizon))
    budget = _tail_sum(merged, 0) + 1
    k = 0
    while True:
        ext = candidate.drop_below(k)
        if ext.first_saturated() is None and _tail_sum(ext, 0) <= budget:
            break
        k += 1
    extended = candidate.drop_below(k)

    return ChainStepReport(
        horizon=horizon,
        g_alphas=tuple(tuple(ga) for ga in g_alphas),
        g=tuple(g),
        blocks=tuple(tuple(row) for row in blocks),
        phi=tuple(phi),
        merged=merged,
        extended=extended,
        cutoff=k,
        window_sums=tuple(window_sums),
        settle=tuple(settle),
    )


def verify_chain_report(existing: Sequence[Slalom], f_beta: PathReal,
                        report: ChainStepReport) -> list[str]:
    """Exact re-check of every chain-step certificate."""
    bad: list[str] = []
    members = [s.padded(report.horizon) if s.horizon < report.horizon
               else s.truncated(report.horizon) for s in existing]
    g = report.g
    for a, s in enumerate(members):
        for n, t in enumerate(report.g_alphas[a]):
            if not _tail_sum(s, t) < Fraction(1, 1 << n):
                bad.append(f"input {a}: tail level g_alpha({n}) fails its bound")
            if g[n] < t:
                bad.append(f"g({n}) does not dominate input {a}")
    if any(x >= y for x, y in zip(g, g[1:])):
        bad.append("g is not strictly increasing")
    for w, admitted in enumerate(report.phi):
        if len(admitted) > w:
            bad.append(f"window {w} admits more than {w} blocks")
        for blk in admitted:
            if not any(blk == report.blocks[a][w] for a in range(len(members))):
                bad.append(f"window {w} holds a block that is no input's block")
    for w, ws in enumerate(report.window_sums):
        if w == 0:
            if ws != 0:
                bad.append("window 0 is not empty")
        elif not ws < Fraction(w, 1 << w):
            bad.append(f"window {w} sum {ws} reaches {w}/2^{w}")
    if not sum(report.window_sums, ZERO) < 2:
        bad.append("total window sum reaches the series constant 2")
    if verdict(report.merged, "W").status is not Status.YES:
        bad.append("merged slalom left W")
    if verdict(report.extended, "W").status is not Status.YES:
        bad.append("extended slalom left W")
    for a, s in enumerate(members):
        lim = g[report.settle[a]] if report.settle[a] < len(g) else report.horizon
        for i in range(lim + 1, report.horizon):
            if s.masks[i] & ~report.merged.mask(i):
                bad.append(f"input {a} escapes the merge above its settling window")
                break
        if not almost_subset(s, report.merged.padded(s.horizon)):
            bad.append(f"input {a} is not almost inside the merge")
    ga = almost_subset(graph_of(f_beta), report.extended.padded(f_beta.horizon))
    if not ga:
        bad.append("the new path's graph is not almost inside the extension")
    return bad


# -- independent families ---------------------------------------------------------


def independent_subsets(count: int, universe: int, min_witnesses: int = 1) -> list[tuple[int, ...]]:
    """Representatives of an independent family on [0, universe).

    Point x carries the evaluation pattern x mod 2^count (bit i gives
    x's verdict on set i), so every sign pattern over the sets recurs
    once per full residue cycle: each pattern has at least
    floor(universe / 2^count) witnesses, which must reach min_witnesses.
    """
    if count < 1:
        raise ConstructError("need at least one set")
    cycle = 1 << count
    if universe // cycle < min_witnesses:
        raise ConstructError(
            f"universe {universe} too small for {min_witnesses} witnesses "
            f"per pattern (needs at least {min_witnesses * cycle})")
    return [tuple(x for x in range(universe) if (x % cycle) >> i & 1)
            for i in range(count)]


@dataclass(frozen=True)
class BlockPair:
    """A base slalom with two disjoint nonempty column blocks per level
    above 1; selections between the blocks build the independent family."""

    base: Slalom
    z0: Slalom
    z1: Slalom

    def __post_init__(self):
        b, z0, z1 = self.base, self.z0, self.z1
        if b.tail is not None:
            raise ConstructError("base must have an empty tail")
        if b.masks[:2] != (0, 0) if b.horizon >= 2 else b.masks != b.masks[:0]:
            raise ConstructError("base must be empty below level 2")
        if verdict(b, "W").status is not Status.YES:
            raise ConstructError("base must be in W")
        for n in range(2, b.horizon):
            if b.masks[n].bit_count() < 2:
                raise ConstructError(f"base level {n} needs at least 2 columns")
            m0, m1 = z0.mask(n), z1.mask(n)
            if not m0 or not m1:
                raise ConstructError(f"blocks at level {n} must be nonempty")
            if m0 & m1:
                raise ConstructError(f"blocks at level {n} must be disjoint")
            if (m0 | m1) & ~b.masks[n]:
                raise ConstructError(f"blocks at level {n} stick out of the base")

    @property
    def horizon(self) -> int:
        return self.base.horizon


def halved_block_pair(horizon: int) -> BlockPair:
    """The minimal admissible block pair: columns 0 and 1 at every level
    above 1, split into singletons."""
    base = Slalom.from_levels(horizon, {n: (0, 1) for n in range(2, horizon)})
    z0 = Slalom.from_levels(horizon, {n: (0,) for n in range(2, horizon)})
    z1 = Slalom.from_levels(horizon, {n: (1,) for n in range(2, horizon)})
    return BlockPair(base, z0, z1)


def build_S_alpha(bp: BlockPair, selector: Sequence[int]) -> Slalom:
    """Level n takes block one when n is selected, block zero otherwise."""
    sel = set(selector)
    masks = [0] * bp.horizon
    for n in range(2, bp.horizon):
        masks[n] = bp.z1.masks[n] if n in sel else bp.z0.masks[n]
    return Slalom(tuple(masks))


@dataclass(frozen=True)
class IndependenceWitnesses:
    pattern: tuple[tuple[int, ...], tuple[int, ...]]
    common: tuple[int, ...]          # Y
    trace: Slalom                    # T
    points: tuple[OmegaPoint, ...]
    term: AlgebraTerm


def independence_check(bp: BlockPair, alphas: Sequence[Slalom],
                       selectors: Sequence[Sequence[int]],
                       positives: Sequence[int], negatives: Sequence[int],
                       horizon: int,
                       common: Optional[Sequence[int]] = None) -> IndependenceWitnesses:
    """Witness stream for one signed meet of the block family.

    The trace takes block one on the common index set Y and the whole
    base elsewhere, so it swallows every positive member while meeting
    each negative member in a nonempty-but-avoided block on Y; its
    prefixes at all levels past min Y land in the signed meet.  Every
    emitted point is re-verified through term evaluation.
    """
    sel = [set(s) for s in selectors]
    if common is None:
        y = [n for n in range(2, min(horizon, bp.horizon))
             if all(n in sel[i] for i in positives)
             and all(n not in sel[j] for j in negatives)]
    else:
        y = sorted(common)
        for n in y:
            if not (all(n in sel[i] for i in positives)
                    and all(n not in sel[j] for j in negatives)):
                raise ConstructError(f"common index {n} breaks the sign pattern")
    if not y:
        raise ConstructError("no common index below the horizon for this pattern")
    ys = set(y)
    masks = [0] * bp.horizon
    for n in range(2, bp.horizon):
        masks[n] = bp.z1.masks[n] if n in ys else bp.base.masks[n]
    trace = Slalom(tuple(masks))
    term = term_from_meet([alphas[i] for i in positives], None,
                          [SetGen(alphas[j]) for j in negatives])
    points = []
    for k in range(min(y) + 1, horizon + 1):
        p = OmegaPoint(trace.prefix_masks(k))
        if not eval_term(term, p):
            raise ConstructError(f"witness at level {k} fails the signed meet")
        points.append(p)
    return IndependenceWitnesses(
        (tuple(positives), tuple(negatives)), tuple(y), trace, tuple(points), term)


# -- bounding slaloms ----------------------------------------------------------------


@dataclass(frozen=True)
class BoundingResult:
    bound: Optional[Slalom]
    witness: Optional[SaturationWitness]


def bounding_search(fam: Sequence[Slalom]) -> BoundingResult:
    """The levelwise union is the minimal levelwise bound; it works iff
    it never saturates."""
    if not fam:
        return BoundingResult(Slalom.empty(0), None)
    u = union_all(list(fam))
    w = saturation_witness(list(fam))
    if w is not None:
        return BoundingResult(None, w)
    return BoundingResult(u, None)
