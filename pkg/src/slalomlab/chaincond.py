"""Chain conditions at desk scale: centredness, intersection numbers,
linked and star partitions, and the diagonal escapes that defeat them.

Centredness of finitely many terms means the meet class is nonzero,
i.e. the literal meet of the represented sets is infinite; everything
here reduces to the exact infinitude decision of :mod:`slalomlab.omega`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .omega import (
    AlgebraTerm,
    Disjunct,
    EmptyMeet,
    Generator,
    InfiniteMeet,
    MeetVerdict,
    OmegaPoint,
    SetGen,
    WindowGen,
    meet_infinitude,
)
from .rng import SplitMix64
from .slaloms import (
    PathReal,
    Slalom,
    Status,
    table_subset,
    union_all,
    verdict,
    width,
)

ONE_THIRD = Fraction(1, 3)
KELLEY_LENGTH_CAP = 8


class ChainError(ValueError):
    pass


class CentrednessFailure(ChainError):
    """A sampled class subset failed the centredness check (a verified
    finding, not an input problem)."""


# -- centredness -------------------------------------------------------------


def _merge_meets(disjuncts: Sequence[Disjunct]) -> Optional[tuple[list[Slalom], Optional[OmegaPoint], list[Generator]]]:
    """Conjunction of meets as one meet; None when the positive windows clash."""
    positives: list[Slalom] = []
    windows: list[OmegaPoint] = []
    negatives: list[Generator] = []
    for d in disjuncts:
        for g in d.positives:
            if isinstance(g, SetGen):
                positives.append(g.slalom)
            else:
                windows.append(g.window)
        negatives.extend(d.negatives)
    window: Optional[OmegaPoint] = None
    if windows:
        top = max(windows, key=lambda w: w.level)
        for w in windows:
            if top.prefix(w.level) != w.masks:
                return None
        window = top
    return positives, window, negatives


def conjunction_verdicts(terms: Sequence[AlgebraTerm]) -> list[MeetVerdict]:
    """Infinitude verdicts of every distributed disjunct of the conjunction."""
    out: list[MeetVerdict] = []
    for combo in itertools.product(*[t.disjuncts for t in terms]):
        merged = _merge_meets(combo)
        if merged is None:
            out.append(EmptyMeet("clashing positive windows"))
            continue
        positives, window, negatives = merged
        out.append(meet_infinitude(positives, window, negatives))
    return out


def is_centered(terms: Sequence[AlgebraTerm]) -> bool:
    """True when the conjunction of the terms is a nonzero class, i.e.
    some distributed disjunct has an infinite meet."""
    if not terms:
        return True
    return any(isinstance(v, InfiniteMeet) for v in conjunction_verdicts(terms))


def term_is_zero(term: AlgebraTerm) -> bool:
    return not is_centered([term])


# -- saturation witnesses ------------------------------------------------------


@dataclass(frozen=True)
class SaturationWitness:
    level: int
    indices: tuple[int, ...]


def saturation_witness(fam: Sequence[Slalom]) -> Optional[SaturationWitness]:
    """If the union of the family saturates some level, pick one member
    per column of the least such level; the superset generators of the
    chosen members then have a finite meet (no point above the level).
    """
    if not fam:
        return None
    u = union_all(list(fam))
    for m in range(u.horizon):
        if u.masks[m].bit_count() != width(m):
            continue
        chosen: list[int] = []
        for col in range(width(m)):
            for idx, s in enumerate(fam):
                if s.mask(m) & (1 << col):
                    if idx not in chosen:
                        chosen.append(idx)
                    break
        return SaturationWitness(m, tuple(sorted(chosen)))
    return None


# -- intersection number --------------------------------------------------------


def kelley_number(terms: Sequence[AlgebraTerm], max_len: int = KELLEY_LENGTH_CAP) -> Fraction:
    """Brute-force intersection number over multisets of length <= max_len:
    the minimum of (largest centered sub-multiset)/(length).

    An upper approximation of the true infimum, non-increasing in
    max_len.  Centredness of a sub-multiset only depends on its support,
    so supports are memoized.
    """
    if max_len > KELLEY_LENGTH_CAP:
        raise ChainError(f"multiset length {max_len} exceeds cap {KELLEY_LENGTH_CAP}")
    for i, t in enumerate(terms):
        if term_is_zero(t):
            raise ChainError(f"term {i} is the zero class")
    centered_cache: dict[frozenset[int], bool] = {}

    def centered(support: frozenset[int]) -> bool:
        if support not in centered_cache:
            centered_cache[support] = is_centered([terms[i] for i in support])
        return centered_cache[support]

    best = Fraction(1)
    idx = range(len(terms))
    for length in range(1, max_len + 1):
        for multiset in itertools.combinations_with_replacement(idx, length):
            mult: dict[int, int] = {}
            for i in multiset:
                mult[i] = mult.get(i, 0) + 1
            support = sorted(mult)
            largest = 0
            for r in range(len(support), 0, -1):
                for sub in itertools.combinations(support, r):
                    if centered(frozenset(sub)):
                        largest = max(largest, sum(mult[i] for i in sub))
                if largest:
                    break
            best = min(best, Fraction(largest, length))
    return best


# -- sigma-n-linked partition ----------------------------------------------------


@dataclass(frozen=True)
class BucketKey:
    """Cutoff level, the data below it, and the density threshold that
    holds from the cutoff on."""

    cutoff: int
    prefix: tuple[int, ...]
    threshold: Fraction


@dataclass(frozen=True)
class LinkedPartition:
    arity: int
    keys: tuple[BucketKey, ...]
    violations: tuple[tuple[int, ...], ...] = ()

    def buckets(self) -> dict[BucketKey, tuple[int, ...]]:
        out: dict[BucketKey, list[int]] = {}
        for i, k in enumerate(self.keys):
            out.setdefault(k, []).append(i)
        return {k: tuple(v) for k, v in out.items()}

    @property
    def verified(self) -> bool:
        return not self.violations


def density_cutoff(s: Slalom, threshold: Fraction) -> int:
    """Least level k with |s(m)|/2^m < threshold for every m >= k."""
    k = 0
    for m in range(s.horizon):
        if Fraction(s.masks[m].bit_count(), width(m)) >= threshold:
            k = m + 1
    return k


def linked_partition(fam: Sequence[Slalom], arity: int,
                     verify: bool = True) -> LinkedPartition:
    """Assign each member its least density-1/n cutoff and prefix, and
    (by default) verify the assignment: any up-to-n members sharing a
    key must have a union below 2^m everywhere.  Below the cutoff the
    union is the shared prefix, above it the n summands each contribute
    under 2^m/n columns, so the violations tuple stays empty.
    """
    if arity < 2:
        raise ChainError("arity must be at least 2")
    threshold = Fraction(1, arity)
    keys = []
    for i, s in enumerate(fam):
        if s.tail is not None:
            raise ChainError(f"member {i} has a rule tail")
        if verdict(s, "Z").status is not Status.YES:
            raise ChainError(f"member {i} is not in the density-zero class Z")
        k = density_cutoff(s, threshold)
        keys.append(BucketKey(k, s.masks[:k], threshold))
    part = LinkedPartition(arity, tuple(keys))
    if not verify:
        return part
    violations: list[tuple[int, ...]] = []
    for key, idx in part.buckets().items():
        for combo in verify_linked_bucket([fam[i] for i in idx], key, arity):
            violations.append(tuple(idx[i] for i in combo))
    return LinkedPartition(arity, tuple(keys), tuple(violations))


def verify_linked_bucket(members: Sequence[Slalom], key: BucketKey,
                         arity: int) -> list[tuple[int, ...]]:
    """Exact levelwise check of every <=arity-subset of a bucket; returns
    the subsets whose union saturates somewhere (empty means verified)."""
    bad = []
    for r in range(1, arity + 1):
        for combo in itertools.combinations(range(len(members)), r):
            u = union_all([members[i] for i in combo])
            if u.first_saturated() is not None:
                bad.append(combo)
    return bad


# -- property (*) refinement -------------------------------------------------------


@dataclass(frozen=True)
class StarStep:
    """One round of the refinement: the chosen index n_i, the block start
    k_i, the surviving index set Q_i, the block T_i on [k_i, k_end), and
    the next survivors."""

    n: int
    k: int
    q: tuple[int, ...]
    block: Slalom
    k_end: int
    q_next: tuple[int, ...]


@dataclass(frozen=True)
class StarTrace:
    cutoff: int
    threshold: Fraction
    steps: tuple[StarStep, ...]


@dataclass(frozen=True)
class StarResult:
    indices: tuple[int, ...]
    union: Slalom
    trace: StarTrace


def _block_of(s: Slalom, lo: int, hi: int) -> Slalom:
    return s.restrict_levels(lo, min(hi, s.horizon))


def star_refine(members: Sequence[Slalom], cutoff: int, horizon: int,
                threshold: Fraction = Fraction(1, 9)) -> StarResult:
    """Finite-scale run of the inductive centred-refinement construction.

    All members must share their prefix below the cutoff and stay under
    the density threshold from it on.  Each round stretches the block
    end until the current member's density drops under 3^-(i+1), applies
    the pigeonhole over candidate blocks (the current member's data
    joined with one other member's, densities under 1/3), keeps the
    survivors whose block data the winner swallows, and moves to the
    next surviving index.  The returned index set has a union that stays
    a slalom levelwise; the trace records every round for re-checking.
    """
    if len(members) < 2:
        raise ChainError("bucket must have at least 2 members")
    prefix = members[0].masks[:cutoff]
    problems = []
    for i, s in enumerate(members):
        if s.tail is not None:
            problems.append(f"member {i} has a rule tail")
        if s.masks[:cutoff] != prefix:
            problems.append(f"member {i} disagrees with the shared prefix below {cutoff}")
        if density_cutoff(s, threshold) > cutoff:
            problems.append(f"member {i} breaks the density threshold past the cutoff")
        if verdict(s, "V").status is not Status.YES:
            problems.append(f"member {i} is not in V")
    if problems:
        raise ChainError("; ".join(problems))

    steps: list[StarStep] = []
    chosen = [0]
    k_i = cutoff
    q_i = tuple(range(len(members)))
    i = 0
    while k_i < horizon:
        n_i = chosen[-1]
        bound = Fraction(1, 3 ** (i + 1))
        k_end = k_i + 1
        for j in range(k_i + 1, min(horizon, members[n_i].horizon)):
            if members[n_i].density(j) >= bound:
                k_end = j + 1
        candidates = []
        base_block = _block_of(members[n_i], k_i, k_end)
        for m in q_i:
            cand = union_all([base_block, _block_of(members[m], k_i, k_end)])
            if any(cand.density(j) >= ONE_THIRD for j in range(k_i, min(k_end, cand.horizon))):
                continue
            survivors = tuple(m2 for m2 in q_i
                              if table_subset(_block_of(members[m2], k_i, k_end), cand))
            candidates.append((-len(survivors), cand.masks, cand, survivors))
        if not candidates:
            break
        candidates.sort(key=lambda c: (c[0], c[1]))
        _, _, block, q_next = candidates[0]
        steps.append(StarStep(n_i, k_i, q_i, block, k_end, q_next))
        nxt = next((m for m in q_next if m > n_i), None)
        if nxt is None:
            break
        chosen.append(nxt)
        q_i = q_next
        k_i = k_end
        i += 1

    union = union_all([members[n] for n in chosen])
    sat = union.first_saturated()
    if sat is not None:
        raise ChainError(f"refined union saturates level {sat}")
    trace = StarTrace(cutoff, threshold, tuple(steps))
    return StarResult(tuple(chosen), union, trace)


def verify_star_trace(members: Sequence[Slalom], result: StarResult,
                      horizon: int) -> list[str]:
    """Re-check the construction conditions of the recorded rounds:
    (1) block starts strictly increase, (2) blocks live on their range at
    density under 1/3, (3) survivor sets shrink and stay nonempty,
    (4) the chosen index survives its own round and the next choice is
    larger, (5) survivors' block data sits inside the block,
    (6) the chosen member's density drops under 3^-(i+1) past the block.
    """
    bad: list[str] = []
    steps = result.trace.steps
    for i, st in enumerate(steps):
        if st.k_end <= st.k:
            bad.append(f"step {i}: block range empty")
        if i + 1 < len(steps) and steps[i + 1].k != st.k_end:
            bad.append(f"step {i}: block ranges do not chain")
        for j in range(st.block.horizon):
            if not st.k <= j < st.k_end and st.block.masks[j]:
                bad.append(f"step {i}: block data outside its range at level {j}")
        for j in range(st.k, min(st.k_end, st.block.horizon)):
            if st.block.density(j) >= ONE_THIRD:
                bad.append(f"step {i}: block density at level {j} reaches 1/3")
        if not set(st.q_next) <= set(st.q) or not st.q_next:
            bad.append(f"step {i}: survivors do not refine")
        if st.n not in st.q_next:
            bad.append(f"step {i}: chosen index dropped by its own round")
        if i + 1 < len(steps) and steps[i + 1].n <= st.n:
            bad.append(f"step {i}: chosen indices not increasing")
        for m in st.q_next:
            if not table_subset(_block_of(members[m], st.k, st.k_end), st.block):
                bad.append(f"step {i}: survivor {m} sticks out of the block")
        bound = Fraction(1, 3 ** (i + 1))
        for j in range(st.k_end + 1, min(horizon, members[st.n].horizon)):
            if members[st.n].density(j) >= bound:
                bad.append(f"step {i}: tail density of member {st.n} at {j} too big")
    return bad


# -- diagonal escapes ---------------------------------------------------------------


@dataclass(frozen=True)
class DiagonalReport:
    path: PathReal
    escapes: tuple[tuple[int, int], ...]  # (class index, escaping column)


def diagonal_witness(class_unions: Sequence[Slalom]) -> DiagonalReport:
    """A path with f(n) outside the n-th class union's level n; its graph
    then leaves every class union, with the violation at that very level."""
    values = []
    escapes = []
    for n, c in enumerate(class_unions):
        m = c.mask(n)
        if m.bit_count() == width(n):
            raise ChainError(f"class union {n} is saturated at its own level {n}")
        col = 0
        while m & (1 << col):
            col += 1
        values.append(col)
        escapes.append((n, col))
    return DiagonalReport(PathReal(tuple(values)), tuple(escapes))


# -- centred decomposition ------------------------------------------------------------


@dataclass(frozen=True)
class CenteredDecomposition:
    bound: Slalom
    windows: tuple[OmegaPoint, ...]
    classes: dict
    checked_subsets: int


def centered_decomposition(bound: Slalom, fam: Sequence[Slalom],
                           windows: Sequence[OmegaPoint],
                           sample_subsets: int = 20,
                           subset_size: int = 3,
                           seed: int = 7) -> CenteredDecomposition:
    """Assign every (member, window) pair with an infinite meet to the
    class of its window, and verify centredness on sampled finite
    subsets of each class.

    Members must sit inside the bounding slalom levelwise; the class of
    a window is centred because every finite union of members stays
    inside the bound, whose own meet with the window is infinite.
    """
    for i, b in enumerate(fam):
        if not table_subset(b, bound):
            lvl = next(n for n in range(max(b.horizon, bound.horizon))
                       if b.mask(n) & ~bound.mask(n))
            raise ChainError(f"member {i} sticks out of the bound at level {lvl}")
    rng = SplitMix64(seed)
    classes: dict[tuple, tuple[int, ...]] = {}
    checked = 0
    for w in windows:
        if not isinstance(meet_infinitude([bound], w, []), InfiniteMeet):
            continue
        idx = tuple(i for i, b in enumerate(fam)
                    if isinstance(meet_infinitude([b], w, []), InfiniteMeet))
        classes[w.masks] = idx
        for _ in range(sample_subsets):
            if not idx:
                break
            pick = sorted({idx[rng.below(len(idx))] for _ in range(subset_size)})
            terms = [AlgebraTerm.meet([SetGen(fam[i]), WindowGen(w)]) for i in pick]
            checked += 1
            if not is_centered(terms):
                raise CentrednessFailure(
                    f"class at window level {w.level} failed centredness")
    return CenteredDecomposition(bound, tuple(windows), classes, checked)
