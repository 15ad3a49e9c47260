import itertools
from fractions import Fraction

import pytest

from slalomlab.chaincond import (
    ChainError,
    centered_decomposition,
    density_cutoff,
    diagonal_witness,
    is_centered,
    kelley_number,
    linked_partition,
    saturation_witness,
    star_refine,
    verify_linked_bucket,
    verify_star_trace,
)
from slalomlab.families import random_bucket_member, random_z_member
from slalomlab.omega import (
    AlgebraTerm,
    FiniteMeet,
    OmegaPoint,
    SetGen,
    WindowGen,
    eval_term,
    meet_infinitude,
    sample_omega,
)
from slalomlab.rng import SplitMix64
from slalomlab.slaloms import Slalom, Status, graph_of, PathReal, union_all, verdict


def term_of(s: Slalom) -> AlgebraTerm:
    return AlgebraTerm.of_slalom(s)


class TestCentered:
    def test_compatible_union_is_centered(self):
        a = Slalom.from_levels(4, {2: [0]})
        b = Slalom.from_levels(4, {2: [1], 3: [2]})
        assert verdict(union_all([a, b]), "S").status is Status.YES
        assert is_centered([term_of(a), term_of(b)])

    def test_complement_pair_not_centered(self):
        a = Slalom.from_levels(4, {2: [0]})
        assert not is_centered([term_of(a), term_of(a).complement_of_meet()])

    def test_saturation_family_not_centered(self):
        fam = [Slalom.from_levels(4, {2: [i]}) for i in range(4)]
        assert not is_centered([term_of(s) for s in fam])

    def test_antitone_under_added_terms(self, frozen_seed):
        rng = SplitMix64(frozen_seed)
        a = Slalom.from_levels(5, {2: [0]})
        b = Slalom.from_levels(5, {3: [1]})
        c = Slalom.from_levels(5, {2: [1, 2, 3]})
        assert is_centered([term_of(a), term_of(b)])
        assert not is_centered([term_of(a), term_of(b), term_of(c)])

    def test_agrees_with_enumeration_counting(self):
        a = Slalom.from_levels(4, {2: [0, 1]})
        b = Slalom.from_levels(4, {2: [2, 3]})
        from slalomlab.omega import count_meet_points
        centered = is_centered([term_of(a), term_of(b)])
        c10 = count_meet_points([a, b], None, [], 10)
        c12 = count_meet_points([a, b], None, [], 12)
        assert centered == (c10 < c12)


class TestSaturationWitness:
    def test_sparse_pair_has_none(self):
        fam = [Slalom.from_levels(4, {2: [0]}), Slalom.from_levels(4, {3: [1]})]
        assert saturation_witness(fam) is None

    def test_covering_singletons(self):
        fam = [Slalom.from_levels(4, {2: [i]}) for i in range(4)]
        fam.append(Slalom.from_levels(4, {2: [0], 3: [1]}))
        w = saturation_witness(fam)
        assert w is not None and w.level == 2
        assert len(w.indices) <= (1 << 2) + 1
        # the chosen generators really have a finite meet
        v = meet_infinitude([fam[i] for i in w.indices])
        assert isinstance(v, FiniteMeet) and v.bound == 2

    def test_duplicate_graphs_never_saturate(self):
        g = graph_of(PathReal((0, 0, 0, 0)))
        assert saturation_witness([g, g, g]) is None


class TestKelley:
    def test_single_nonzero_term(self):
        a = Slalom.from_levels(4, {2: [0]})
        assert kelley_number([term_of(a)], 3) == 1

    def test_complement_pair_half(self):
        a = Slalom.from_levels(4, {2: [0]})
        terms = [term_of(a), term_of(a).complement_of_meet()]
        assert kelley_number(terms, 2) == Fraction(1, 2)
        # exhaustive multiset oracle at length 2: {aa}->1, {a,a^c}->1/2, {a^c,a^c}->1
        ratios = []
        for ms in itertools.combinations_with_replacement(range(2), 2):
            best = 0
            for r in (2, 1):
                for sub in itertools.combinations(ms, r):
                    if is_centered([terms[i] for i in set(sub)]):
                        best = max(best, r)
                if best:
                    break
            ratios.append(Fraction(best, 2))
        assert min(ratios) == Fraction(1, 2)

    def test_three_disjoint_terms_third(self):
        terms = [AlgebraTerm.meet([WindowGen(OmegaPoint((0, m)))]) for m in (0, 1, 2)]
        assert kelley_number(terms, 3) == Fraction(1, 3)

    def test_length_cap(self):
        a = Slalom.from_levels(4, {2: [0]})
        with pytest.raises(ChainError):
            kelley_number([term_of(a)], 9)

    def test_zero_term_rejected(self):
        a = Slalom.from_levels(4, {2: [0]})
        zero = AlgebraTerm.meet([SetGen(a)], [SetGen(a)])
        with pytest.raises(ChainError):
            kelley_number([zero], 2)

    def test_matches_centredness_at_full_length(self):
        a = Slalom.from_levels(4, {2: [0]})
        b = Slalom.from_levels(4, {3: [1]})
        terms = [term_of(a), term_of(b)]
        assert (kelley_number(terms, 2) == 1) == is_centered(terms)


class TestLinkedPartition:
    def test_identical_members_share_key(self):
        s = Slalom.from_levels(6, {2: [0], 4: [1]})
        part = linked_partition([s, s, s], 2)
        assert len(part.buckets()) == 1
        key = part.keys[0]
        assert verify_linked_bucket([s, s], key, 2) == []

    def test_cutoff_definition(self):
        s = Slalom.from_levels(6, {2: [0, 1], 4: [0]})
        # density 1/2 at level 2 blocks thresholds 1/2 and below
        assert density_cutoff(s, Fraction(1, 2)) == 3
        assert density_cutoff(s, Fraction(1, 3)) == 3
        part = linked_partition([s], 3)
        assert part.keys[0].cutoff == 3
        assert part.keys[0].prefix == s.masks[:3]

    def test_distinct_prefixes_distinct_keys(self):
        a = Slalom.from_levels(6, {1: [0], 2: [0, 1]})
        b = Slalom.from_levels(6, {1: [1], 2: [0, 1]})
        part = linked_partition([a, b], 2)
        assert part.keys[0] != part.keys[1]

    def test_same_key_unions_stay_slaloms(self, frozen_seed):
        rng = SplitMix64(frozen_seed)
        for arity in (2, 3, 4):
            fam = [random_z_member(9, rng) for _ in range(25)]
            part = linked_partition(fam, arity)
            for key, idx in part.buckets().items():
                members = [fam[i] for i in idx]
                assert verify_linked_bucket(members, key, arity) == []

    def test_saturating_member_rejected(self):
        s = Slalom.from_levels(4, {2: range(4)})
        with pytest.raises(ChainError):
            linked_partition([s], 2)


def make_bucket(seed: int, size: int = 8, horizon: int = 32, cutoff: int = 2):
    rng = SplitMix64(seed)
    prefix = Slalom.from_levels(cutoff, {1: [0]})
    return [random_bucket_member(horizon, rng, cutoff, prefix) for _ in range(size)]


class TestStarRefine:
    def test_identical_members_keep_everyone(self):
        rng = SplitMix64(3)
        prefix = Slalom.from_levels(2, {1: [0]})
        m = random_bucket_member(16, rng, 2, prefix)
        res = star_refine([m] * 6, 2, 16)
        assert res.indices == tuple(range(6))
        assert res.union == m

    def test_random_bucket_union_is_slalom(self, frozen_seed):
        bucket = make_bucket(frozen_seed)
        res = star_refine(bucket, 2, 32)
        assert len(res.indices) >= 2
        assert res.union.first_saturated() is None
        assert verify_star_trace(bucket, res, 32) == []

    def test_two_member_bucket(self, frozen_seed):
        bucket = make_bucket(frozen_seed + 1, size=2, horizon=16)
        res = star_refine(bucket, 2, 16)
        assert len(res.indices) == 2
        assert res.union.first_saturated() is None

    def test_three_part_level_bound(self, frozen_seed):
        bucket = make_bucket(frozen_seed + 2)
        res = star_refine(bucket, 2, 32)
        steps = res.trace.steps
        for i, st in enumerate(steps):
            for j in range(st.k, min(st.k_end, 32)):
                block_part = union_all(
                    [bucket[n].restrict_levels(st.k, st.k_end)
                     for n in res.indices if n in st.q_next])
                hist = union_all(
                    [bucket[res.indices[m]] for m in range(i)]) \
                    if i else Slalom.empty(32)
                w = 1 << j
                assert Fraction(block_part.level_size(j), w) < Fraction(1, 3)
                cap = sum((Fraction(1, 3 ** (m + 1)) for m in range(i)), Fraction(0))
                assert Fraction(hist.level_size(j), w) <= cap or j <= st.k

    def test_precondition_violations_reported(self):
        a = Slalom.from_levels(8, {1: [0], 4: [0]})
        b = Slalom.from_levels(8, {1: [1], 4: [1]})  # different prefix below 2
        with pytest.raises(ChainError, match="prefix"):
            star_refine([a, b], 2, 8)
        dense = Slalom.from_levels(8, {4: range(4)})  # density 1/4 >= 1/9
        with pytest.raises(ChainError, match="threshold"):
            star_refine([Slalom.empty(8), dense], 2, 8)


class TestDiagonalWitness:
    def test_all_empty_classes(self):
        rep = diagonal_witness([Slalom.empty(4)] * 4)
        assert rep.path.values == (0, 0, 0, 0)

    def test_all_but_top_column(self):
        unions = [Slalom.from_levels(5, {n: range((1 << n) - 1)}) for n in range(5)]
        rep = diagonal_witness(unions)
        assert rep.path.values == tuple((1 << n) - 1 for n in range(5))

    def test_graph_escapes_each_class(self, frozen_seed):
        rng = SplitMix64(frozen_seed)
        unions = [random_z_member(6, rng) for _ in range(6)]
        rep = diagonal_witness(unions)
        g = graph_of(rep.path)
        for n in range(1, 6):
            assert g.mask(n) & ~unions[n].mask(n)

    def test_saturated_class_rejected(self):
        unions = [Slalom.empty(4), Slalom.from_levels(4, {1: [0, 1]})]
        with pytest.raises(ChainError, match="1"):
            diagonal_witness(unions)


class TestCenteredDecomposition:
    def test_single_member_equal_to_bound(self):
        s = Slalom.from_levels(4, {2: [0], 3: [1]})
        windows = [OmegaPoint(()), OmegaPoint((0,)), OmegaPoint((0, 0))]
        dec = centered_decomposition(s, [s], windows)
        assert len(dec.classes) == len(windows)
        assert all(idx == (0,) for idx in dec.classes.values())

    def test_chain_inside_bound(self, frozen_seed):
        b1 = Slalom.from_levels(5, {2: [0]})
        b2 = Slalom.from_levels(5, {2: [0], 3: [1]})
        bound = Slalom.from_levels(5, {2: [0], 3: [1], 4: [2]})
        windows = sample_omega(3, 6, frozen_seed)
        dec = centered_decomposition(bound, [b1, b2], windows, sample_subsets=8)
        for masks, idx in dec.classes.items():
            assert idx == (0, 1)

    def test_unbounded_member_rejected_with_level(self):
        bound = Slalom.from_levels(4, {2: [0]})
        stray = Slalom.from_levels(4, {3: [5]})
        with pytest.raises(ChainError, match="level 3"):
            centered_decomposition(bound, [stray], [OmegaPoint(())])
