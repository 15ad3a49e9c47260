from fractions import Fraction

import pytest

from slalomlab.omega import (
    AlgebraTerm,
    CanonicalizeError,
    DepthCapError,
    EmptyMeet,
    FiniteMeet,
    InfiniteMeet,
    OmegaError,
    OmegaPoint,
    SetGen,
    WindowGen,
    canonicalize,
    count_meet_points,
    count_term_points,
    enum_omega,
    eval_term,
    fact_check,
    iter_omega_lex,
    meet_infinitude,
    member,
    omega_count,
    pibase_enum,
    sample_omega,
    term_from_meet,
    traces_at_level,
)
from slalomlab.rng import SplitMix64
from slalomlab.slaloms import Slalom, union_all


def sparse(rng: SplitMix64, horizon: int, max_cols: int = 3) -> Slalom:
    masks = [0] * horizon
    for n in range(1, horizon):
        size = rng.below(1 + min(max_cols, (1 << n) - 1))
        masks[n] = rng.subset_mask(1 << n, size)
    return Slalom(tuple(masks))


class TestEnumeration:
    def test_point_counts_small_depths(self):
        assert omega_count(0) == 1
        assert omega_count(1) == 2
        assert omega_count(2) == 5
        assert len(enum_omega(0)) == 1
        assert len(enum_omega(1)) == 2
        assert len(enum_omega(2)) == 5

    def test_materialized_matches_formula_to_depth_four(self):
        for n in range(5):
            assert len(list(__import__("slalomlab.omega", fromlist=["iter_level"])
                            .iter_level(n))) == traces_at_level(n)
        assert len(enum_omega(4)) == omega_count(4) == 11525

    def test_distinctness_and_validity(self):
        pts = enum_omega(3)
        assert len(set(pts)) == len(pts)
        for p in pts:
            for j in range(p.level):
                assert p.masks[j].bit_count() < (1 << j)

    def test_depth_cap(self):
        with pytest.raises(DepthCapError):
            enum_omega(11)
        with pytest.raises(DepthCapError):
            enum_omega(6)  # blows the point budget

    def test_lex_order_is_stable(self):
        import itertools
        first = list(itertools.islice(iter_omega_lex(), 10))
        assert first[0] == OmegaPoint(())
        assert first[1] == OmegaPoint((0,))
        assert first[2:5] == [OmegaPoint((0, 0)), OmegaPoint((0, 1)), OmegaPoint((0, 2))]
        assert first[5] == OmegaPoint((0, 0, 0))

    def test_invalid_trace_rejected(self):
        with pytest.raises(OmegaError):
            OmegaPoint((1,))  # level-0 section saturated
        with pytest.raises(OmegaError):
            OmegaPoint((0, 3))  # level-1 section saturated


class TestMembership:
    def test_empty_generator_holds_everywhere(self):
        g = SetGen(Slalom.empty(4))
        assert all(member(g, p) for p in enum_omega(3))

    def test_window_level_guard(self):
        w = WindowGen(OmegaPoint((0, 1)))
        assert not member(w, OmegaPoint((0,)))
        assert member(w, OmegaPoint((0, 1)))
        assert member(w, OmegaPoint((0, 1, 5)))
        assert not member(w, OmegaPoint((0, 2, 5)))

    def test_setgen_containment_example(self):
        a = Slalom.from_levels(3, {1: [0]})
        p = OmegaPoint((0, 0b01))
        assert member(SetGen(a), p)

    def test_antitone_in_the_slalom(self, frozen_seed):
        rng = SplitMix64(frozen_seed)
        for _ in range(10):
            a = sparse(rng, 5)
            b = union_all([a, sparse(rng, 5)])
            for p in sample_omega(6, 40, rng.next_u64()):
                if member(SetGen(b), p):
                    assert member(SetGen(a), p)

    def test_eval_term_constants(self):
        for p in enum_omega(3):
            assert not eval_term(AlgebraTerm.zero(), p)
            assert eval_term(AlgebraTerm.top(), p)
        a = SetGen(Slalom.from_levels(3, {2: [1]}))
        contradiction = AlgebraTerm.meet([a], [a])
        assert not any(eval_term(contradiction, p) for p in enum_omega(3))


class TestMeetInfinitude:
    def test_saturating_pair_is_finite_with_no_points_above(self):
        a = Slalom.from_levels(4, {2: [0, 1]})
        b = Slalom.from_levels(4, {2: [2, 3]})
        v = meet_infinitude([a, b])
        assert isinstance(v, FiniteMeet) and v.bound == 2
        term = term_from_meet([a, b], None, [])
        hits = [p for p in enum_omega(4) if eval_term(term, p)]
        assert all(p.level <= v.bound for p in hits)

    def test_self_negation_is_empty(self):
        a = Slalom.from_levels(4, {2: [0]})
        v = meet_infinitude([a], None, [SetGen(a)])
        assert isinstance(v, EmptyMeet)
        assert count_meet_points([a], None, [SetGen(a)], 6) == 0

    def test_infinite_meet_counts_grow(self):
        a = Slalom.from_levels(4, {2: [0, 1]})
        c = Slalom.from_levels(4, {2: [0], 3: [1]})
        v = meet_infinitude([a, c])
        assert isinstance(v, InfiniteMeet)
        counts = [count_meet_points([a, c], None, [], n) for n in range(8, 13)]
        assert all(x < y for x, y in zip(counts, counts[1:]))
        term = term_from_meet([a, c], None, [])
        for m in range(v.start_level, 13):
            assert eval_term(term, v.witness(m))

    def test_window_gate_empties_meet(self):
        a = Slalom.from_levels(4, {1: [1]})
        w = OmegaPoint((0, 0b01))  # level-1 trace {0}, missing a's column
        v = meet_infinitude([a], w, [])
        assert isinstance(v, EmptyMeet)
        assert count_meet_points([a], w, [], 8) == 0

    def test_negated_window_case_analysis(self):
        a = Slalom.from_levels(4, {2: [0]})
        base = OmegaPoint((0, 0b01))
        forbidden = WindowGen(OmegaPoint((0, 0b01, 0b0001)))
        v = meet_infinitude([a], base, [forbidden])
        assert isinstance(v, InfiniteMeet)
        term = term_from_meet([a], base, [forbidden])
        for m in range(v.start_level, 10):
            assert eval_term(term, v.witness(m))

    def test_verdicts_against_materialized_counts(self, frozen_seed):
        rng = SplitMix64(frozen_seed)
        for trial in range(60):
            positives = [sparse(rng, 4, max_cols=2)
                         for _ in range(1 + rng.below(2))]
            negatives = []
            if rng.below(2):
                negatives.append(SetGen(sparse(rng, 4, max_cols=2)))
            window = None
            if rng.below(2):
                lvl = 1 + rng.below(2)
                masks = tuple(union_all(positives).mask(j) for j in range(lvl))
                if all(m.bit_count() < (1 << j) for j, m in enumerate(masks)):
                    window = OmegaPoint(masks)
            v = meet_infinitude(positives, window, negatives)
            term = term_from_meet(positives, window, negatives)
            hits = [p for p in enum_omega(3) if eval_term(term, p)]
            formula = count_meet_points(positives, window, negatives, 3)
            assert len(hits) == formula
            if isinstance(v, EmptyMeet):
                assert formula == 0
            elif isinstance(v, FiniteMeet):
                deeper = count_meet_points(positives, window, negatives,
                                           max(6, v.bound))
                at_bound = count_meet_points(positives, window, negatives, v.bound)
                assert deeper == at_bound
            else:
                c8 = count_meet_points(positives, window, negatives, 8)
                c9 = count_meet_points(positives, window, negatives, 9)
                assert c8 < c9


class TestCountingOracleAnchor:
    def test_formula_equals_materialization_with_negated_windows(self, frozen_seed):
        rng = SplitMix64(frozen_seed)
        pts = enum_omega(3)
        for _ in range(40):
            positives = [sparse(rng, 3, max_cols=1)]
            negs = []
            if rng.below(2):
                negs.append(SetGen(sparse(rng, 3, max_cols=1)))
            if rng.below(2):
                negs.append(WindowGen(sample_omega(2, 1, rng.next_u64())[0]))
            window = sample_omega(1, 1, rng.next_u64())[0] if rng.below(2) else None
            term = term_from_meet(positives, window, negs)
            mat = sum(1 for p in pts if eval_term(term, p))
            assert mat == count_meet_points(positives, window, negs, 3)

    def test_dnf_term_counts(self):
        a = Slalom.from_levels(3, {2: [0]})
        b = Slalom.from_levels(3, {2: [1]})
        term = AlgebraTerm((
            AlgebraTerm.of_slalom(a).disjuncts[0],
            AlgebraTerm.of_slalom(b).disjuncts[0],
        ))
        mat = sum(1 for p in enum_omega(3) if eval_term(term, p))
        assert mat == count_term_points(term, 3)


class TestCanonicalize:
    def test_idempotent(self):
        a = Slalom.from_levels(4, {2: [0], 3: [1]})
        el = canonicalize(a, OmegaPoint((0, 0)))
        again = canonicalize(el.set_part, el.window)
        assert again.key == el.key

    def test_window_slides_past_dense_levels(self):
        a = Slalom.from_levels(4, {2: [0, 1, 2], 3: [0]})
        el = canonicalize(a, OmegaPoint((0, 0)))
        assert el.window.level == 3
        assert el.set_part.level_size(3) < 7

    def test_modfinite_equal_meets_share_canonical_form(self):
        s = OmegaPoint((0, 0b01))
        a = Slalom.from_levels(4, {3: [2]})
        a_with_trace = union_all([a, s.trace_slalom()])
        el1 = canonicalize(a, s)
        el2 = canonicalize(a_with_trace, s)
        assert el1.key == el2.key
        term1 = term_from_meet([a], s, [])
        term2 = term_from_meet([a_with_trace], s, [])
        for p in enum_omega(3):
            assert eval_term(term1, p) == eval_term(term2, p)

    def test_distinct_classes_get_distinct_forms(self, frozen_seed):
        rng = SplitMix64(frozen_seed)
        seen = {}
        for _ in range(30):
            a = sparse(rng, 4, max_cols=2)
            v = meet_infinitude([a], OmegaPoint((0,)), [])
            if not isinstance(v, InfiniteMeet):
                continue
            el = canonicalize(a, OmegaPoint((0,)))
            term = term_from_meet([el.set_part], el.window, [])
            sig = tuple(eval_term(term, p) for p in enum_omega(3))
            if el.key in seen:
                assert seen[el.key] == sig
        # different canonical keys must disagree somewhere at depth 4
        a = Slalom.from_levels(4, {2: [0]})
        b = Slalom.from_levels(4, {2: [1]})
        ka = canonicalize(a, OmegaPoint((0,))).key
        kb = canonicalize(b, OmegaPoint((0,))).key
        assert ka != kb

    def test_finite_meet_rejected(self):
        a = Slalom.from_levels(4, {2: range(4)})
        with pytest.raises(CanonicalizeError):
            canonicalize(a, OmegaPoint((0, 0)))


class TestPiBase:
    def test_empty_family_gives_all_windows(self):
        els = pibase_enum([Slalom.empty(4)], 3)
        expected = sum(traces_at_level(n) for n in range(1, 4))
        assert len(els) == expected

    def test_sparse_member_contributes(self):
        a = Slalom.from_levels(4, {2: [0]})
        assert pibase_enum([a], 2)

    def test_saturating_member_contributes_nothing(self):
        # a saturating section makes the member's generator itself finite,
        # so no window meet with it survives; the sparse halves of the
        # union still contribute at every level
        a = Slalom.from_levels(4, {2: [0, 1]})
        b = Slalom.from_levels(4, {2: [2, 3]})
        u = union_all([a, b])
        assert pibase_enum([u], 3) == []
        els = pibase_enum([a, b, u], 3)
        assert els
        for el in els:
            assert el.set_part.first_saturated() is None


def test_fact_check_clean(frozen_seed):
    report = fact_check(depth=7, trials=12, seed=frozen_seed, points_per_trial=60)
    assert report["failures"] == []
    assert report["points_checked"] > 0
