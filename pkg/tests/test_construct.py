from fractions import Fraction

import pytest

from slalomlab.construct import (
    BlockPair,
    ConstructError,
    bounding_search,
    build_S_alpha,
    chain_step,
    halved_block_pair,
    independence_check,
    independent_subsets,
    verify_chain_report,
)
from slalomlab.families import random_path, random_w_member
from slalomlab.omega import eval_term
from slalomlab.rng import SplitMix64
from slalomlab.slaloms import (
    PathReal,
    Slalom,
    Status,
    almost_subset,
    graph_of,
    table_subset,
    union_all,
    verdict,
)


class TestChainStep:
    def test_no_existing_members(self):
        f = PathReal((0,) * 10)
        rep = chain_step([], f, 10)
        assert verify_chain_report([], f, rep) == []
        assert rep.merged.is_table_empty()
        # the extension is the graph from the cutoff on
        assert rep.extended == graph_of(f).drop_below(rep.cutoff)

    def test_single_graph_then_same_path(self):
        f = PathReal((0,) * 12)
        g = graph_of(f)
        rep = chain_step([g], f, 12)
        assert verify_chain_report([g], f, rep) == []
        assert almost_subset(g, rep.merged).status is Status.YES
        assert almost_subset(graph_of(f), rep.extended).status is Status.YES

    def test_random_instances_all_invariants(self, frozen_seed):
        rng = SplitMix64(frozen_seed)
        for trial in range(8):
            count = rng.below(4)
            existing = [random_w_member(16, rng) for _ in range(count)]
            f = random_path(16, rng)
            rep = chain_step(existing, f, 16)
            assert verify_chain_report(existing, f, rep) == []
            # merged partial sum stays under the series constant
            assert rep.merged.partial_sum() < 2
            for s in existing:
                assert almost_subset(s.padded(16), rep.merged)

    def test_window_sums_under_bounds(self, frozen_seed):
        rng = SplitMix64(frozen_seed + 5)
        existing = [random_w_member(16, rng) for _ in range(3)]
        f = random_path(16, rng)
        rep = chain_step(existing, f, 16)
        assert rep.window_sums[0] == 0
        for w, s in enumerate(rep.window_sums):
            if w:
                assert s < Fraction(w, 1 << w)

    def test_non_w_input_rejected(self):
        bad = Slalom.from_levels(6, {2: range(4)})
        with pytest.raises(ConstructError):
            chain_step([bad], PathReal((0,) * 6), 6)


class TestIndependentSubsets:
    def test_single_set(self):
        (x,) = independent_subsets(1, 8, 2)
        inside = len(x)
        assert inside >= 2 and 8 - inside >= 2

    def test_two_sets_all_patterns(self):
        xs = independent_subsets(2, 16, 2)
        for pattern in range(4):
            hits = sum(1 for v in range(16)
                       if all(((v in xs[i]) == bool(pattern >> i & 1))
                              for i in range(2)))
            assert hits >= 2

    def test_five_sets_four_witnesses(self):
        xs = independent_subsets(5, 128, 4)
        for pattern in range(32):
            hits = sum(1 for v in range(128)
                       if all(((v in xs[i]) == bool(pattern >> i & 1))
                              for i in range(5)))
            assert hits >= 4

    def test_too_small_universe(self):
        with pytest.raises(ConstructError):
            independent_subsets(5, 100, 4)


class TestBlockSelection:
    def test_empty_selector_takes_block_zero(self):
        bp = halved_block_pair(8)
        s = build_S_alpha(bp, [])
        assert s == bp.z0

    def test_full_selector_takes_block_one(self):
        bp = halved_block_pair(8)
        s = build_S_alpha(bp, range(8))
        assert s == bp.z1

    def test_alternating_containment(self):
        bp = halved_block_pair(8)
        s = build_S_alpha(bp, [n for n in range(8) if n % 2 == 0])
        assert table_subset(s, bp.base)
        assert verdict(s, "W").status is Status.YES
        for n in range(2, 8):
            expect = bp.z1.masks[n] if n % 2 == 0 else bp.z0.masks[n]
            assert s.masks[n] == expect

    def test_block_pair_validation(self):
        base = Slalom.from_levels(5, {n: (0, 1) for n in range(2, 5)})
        z = Slalom.from_levels(5, {n: (0,) for n in range(2, 5)})
        with pytest.raises(ConstructError):
            BlockPair(base, z, z)  # blocks not disjoint


def family_fixture(horizon=16, count=5, span=10):
    bp = halved_block_pair(horizon)
    cycle = 1 << count
    selectors = [tuple(n for n in range(2, 2 + span)
                       if ((n - 2) % cycle) >> i & 1) for i in range(count)]
    alphas = [build_S_alpha(bp, sel) for sel in selectors]
    return bp, selectors, alphas


class TestIndependenceCheck:
    def test_single_positive(self):
        bp, sels, alphas = family_fixture()
        wit = independence_check(bp, alphas, sels, [0], [], 16)
        assert len(wit.points) == 16 - min(wit.common)
        for p in wit.points:
            assert eval_term(wit.term, p)

    def test_positive_negative_pair(self):
        bp, sels, alphas = family_fixture()
        wit = independence_check(bp, alphas, sels, [0], [1], 16)
        for p in wit.points:
            assert eval_term(wit.term, p)
        # the witness trace meets each negative in a nonempty avoided block
        for n in wit.common:
            assert alphas[1].masks[n] and not (wit.trace.masks[n] & alphas[1].masks[n])

    def test_empty_common_set_rejected(self):
        bp, sels, alphas = family_fixture(span=2)  # only patterns 1 and 2 appear
        with pytest.raises(ConstructError):
            independence_check(bp, alphas, sels, list(range(5)), [], 16)

    def test_supplied_common_set_validated(self):
        bp, sels, alphas = family_fixture()
        with pytest.raises(ConstructError):
            independence_check(bp, alphas, sels, [0], [1], 16, common=[2])


class TestBoundingSearch:
    def test_singleton(self):
        s = Slalom.from_levels(4, {2: [0]})
        res = bounding_search([s])
        assert res.bound == s

    def test_saturating_union(self):
        fam = [Slalom.from_levels(4, {2: [i]}) for i in range(4)]
        res = bounding_search(fam)
        assert res.bound is None
        assert res.witness.level == 2

    def test_nested_chain_returns_top(self):
        a = Slalom.from_levels(5, {2: [0]})
        b = Slalom.from_levels(5, {2: [0], 3: [1]})
        c = Slalom.from_levels(5, {2: [0], 3: [1], 4: [2]})
        res = bounding_search([a, b, c])
        assert res.bound == c

    def test_agrees_with_saturation_witness(self, frozen_seed):
        from slalomlab.chaincond import saturation_witness
        rng = SplitMix64(frozen_seed)
        for _ in range(15):
            fam = [random_w_member(6, rng) for _ in range(4)]
            res = bounding_search(fam)
            assert (res.bound is None) == (saturation_witness(fam) is not None)
            if res.bound is not None:
                assert res.bound == union_all(fam)
