import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from papp_lab.constructions import build_divisor_mp_counterexample, build_seq_thiele_counterexample, build_thiele_counterexample
from papp_lab.core import Committee, PartyPermutation, Profile, apply_party_permutation, parse_ballot
from papp_lab.rules import (
    AVVariantK2Rule,
    DivisorFunction,
    PortioningWeights,
    TieBreakOrder,
    WeightVector,
    av_variant_k2_select,
    divisor_apportion,
    majoritarian_portioning,
    parse_rule,
    seq_thiele_select,
    thiele_score,
    thiele_select,
    thiele_select_scored,
)

P = Profile.from_counts
C = Committee.from_parties
PAV, AV, CCAV = WeightVector.pav(), WeightVector.av(), WeightVector.ccav()


def oracle_score(w, seats, voters):
    total = Fraction(0)
    for ballot in voters:
        covered = sum(s for x, s in enumerate(seats) if ballot >> x & 1)
        total += sum((w[j] for j in range(1, covered + 1)), Fraction(0))
    return total


def oracle_select(w, A, k, order):
    """Brute force over all seat vectors; ties go to the rank-lexicographically smallest committee."""
    rank = {x: r for r, x in enumerate(order)}
    best = None
    for combo in itertools.product(range(k + 1), repeat=A.m):
        if sum(combo) != k:
            continue
        score = oracle_score(w, combo, A.ballots)
        key = sorted(rank[x] for x, s in enumerate(combo) for _ in range(s))
        if best is None or score > best[0] or (score == best[0] and key < best[1]):
            best = (score, key, combo)
    return Committee(best[2]), best[0]


weights_strategy = st.sampled_from(
    [AV, PAV, CCAV, WeightVector.parse("1,1,0"), WeightVector.parse("1,2/3,1/3"), WeightVector.parse("1,1/2,1/2,0")]
)


@st.composite
def profile_and_order(draw, max_m=4, max_n=6):
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(1, max_n))
    ballots = draw(st.lists(st.integers(1, (1 << m) - 1), min_size=n, max_size=n))
    order = tuple(draw(st.permutations(range(m))))
    return Profile.from_ballots(m, ballots), TieBreakOrder(order)


class TestWeightVector:
    def test_validation(self):
        with pytest.raises(ValueError):
            WeightVector.parse("1,2")
        with pytest.raises(ValueError):
            WeightVector.parse("1/2,1/3")
        with pytest.raises(TypeError):
            WeightVector((1.0, 0.5))

    def test_extension(self):
        w = WeightVector.parse("1,1/2")
        assert w[5] == Fraction(1, 2)
        assert CCAV.is_ccav() and AV.is_av()
        assert PAV.first_below_one() == 2


class TestThiele:
    def test_thm3_scores(self):
        bundle = build_thiele_counterexample(PAV)
        A = bundle.profile
        W_A, W_B = C(4, [0, 1]), C(4, [2, 3])
        assert thiele_score(PAV, W_A, A) == Fraction(19, 2)
        assert thiele_score(PAV, W_B, A) == 9
        assert thiele_select(PAV, A, 2) == W_A

    def test_thm3_manipulated_under_swapped_order(self):
        bundle = build_thiele_counterexample(PAV)
        swapped = TieBreakOrder((2, 3, 0, 1))
        A2 = bundle.manipulated
        assert thiele_score(PAV, C(4, [0, 1]), A2) == thiele_score(PAV, C(4, [2, 3]), A2)
        assert thiele_select(PAV, A2, 2, swapped) == C(4, [2, 3])

    def test_zero_score(self):
        assert thiele_score(PAV, C(4, "ccc"), P(4, {"a": 5})) == 0

    def test_ccav_direct(self):
        assert thiele_score(CCAV, C(2, "aab"), P(2, {"a": 1, "b": 1})) == 2

    def test_av_wr_failure_profile(self):
        A = P(4, {"a": 4, "d": 2})
        W, score = thiele_select_scored(AV, A, 3)
        assert W == C(4, "aaa") and score == 12
        assert thiele_score(AV, C(4, "aad"), A) == 10

    def test_k0(self):
        assert thiele_select(PAV, P(3, {"a": 1}), 0) == Committee((0, 0, 0))

    @pytest.mark.property
    @settings(max_examples=10_000, deadline=None)
    @given(profile_and_order(max_m=4, max_n=5), weights_strategy, st.integers(1, 3))
    def test_argmax_matches_bruteforce(self, data, w, k):
        A, order = data
        W, score = thiele_select_scored(w, A, k, order)
        oracle_W, oracle_score_value = oracle_select(w, A, k, order.party_order)
        assert score == oracle_score_value
        assert W == oracle_W

    @pytest.mark.property
    @settings(max_examples=10_000, deadline=None)
    @given(profile_and_order(max_m=4, max_n=6), weights_strategy, st.integers(1, 3), st.data())
    def test_label_equivariance(self, data, w, k, draw):
        A, order = data
        tau = PartyPermutation(tuple(draw.draw(st.permutations(range(A.m)))))
        permuted_order = TieBreakOrder(tuple(tau.mapping[x] for x in order.party_order))
        tA = apply_party_permutation(A, tau)
        left = thiele_select(w, tA, k, permuted_order)
        W = thiele_select(w, A, k, order)
        assert left == tau.committee(W)
        assert thiele_score(w, tau.committee(W), tA) == thiele_score(w, W, A)


class TestSeqThiele:
    def test_seqpav_bundle(self):
        bundle = build_seq_thiele_counterexample(PAV)
        assert bundle.n == 21
        assert seq_thiele_select(PAV, bundle.profile, 2) == C(4, "bc")
        assert seq_thiele_select(PAV, bundle.manipulated, 2) == C(4, "ad")

    @settings(max_examples=500, deadline=None)
    @given(profile_and_order(), weights_strategy)
    def test_k1_is_av_winner(self, data, w):
        A, order = data
        W = seq_thiele_select(w, A, 1, order)
        scores = [A.approval_score(x) for x in range(A.m)]
        best = max(scores)
        assert W[order.best([x for x in range(A.m) if scores[x] == best])] == 1

    @settings(max_examples=2000, deadline=None)
    @given(profile_and_order(), st.integers(1, 3))
    def test_seq_av_equals_av_with_unique_maximizer(self, data, k):
        A, order = data
        scores = [A.approval_score(x) for x in range(A.m)]
        if scores.count(max(scores)) != 1:
            return
        assert seq_thiele_select(AV, A, k, order) == thiele_select(AV, A, k, order)


class TestPortioning:
    def test_divisor_bundle_weights(self):
        bundle = build_divisor_mp_counterexample(DivisorFunction.jefferson())
        assert majoritarian_portioning(bundle.profile).weights == (0, 6, 8, 2)
        assert majoritarian_portioning(bundle.manipulated).weights == (8, 0, 2, 6)

    def test_single_ballot_type(self):
        assert majoritarian_portioning(P(3, {"b": 7})).weights == (0, 7, 0)

    @settings(max_examples=2000, deadline=None)
    @given(profile_and_order())
    def test_weights_sum_to_n(self, data):
        A, order = data
        assert sum(majoritarian_portioning(A, order).weights) == A.n


class TestDivisor:
    def test_jefferson_examples(self):
        g = DivisorFunction.jefferson()
        assert divisor_apportion(PortioningWeights((0, 6, 8, 2)), g, 2) == C(4, "bc")
        assert divisor_apportion(PortioningWeights((8, 0, 2, 6)), g, 2) == C(4, "ad")

    def test_single_positive_weight(self):
        assert divisor_apportion(PortioningWeights((0, 3, 0)), DivisorFunction.jefferson(), 4) == Committee((0, 4, 0))

    def test_all_zero(self):
        with pytest.raises(ValueError):
            divisor_apportion(PortioningWeights((0, 0)), DivisorFunction.jefferson(), 1)

    def test_table(self):
        g = DivisorFunction.parse("1,2,3")
        assert g(2) == 3
        with pytest.raises(ValueError):
            g(3)
        with pytest.raises(ValueError):
            DivisorFunction.parse("2,1")

    @settings(max_examples=3000, deadline=None)
    @given(
        st.lists(st.integers(0, 9), min_size=1, max_size=5).filter(any),
        st.integers(0, 6),
        st.sampled_from([DivisorFunction.jefferson(), DivisorFunction.webster(), DivisorFunction.parse("1,3,3,4,9,9,9")]),
    )
    def test_seat_totals_and_zero_weights(self, weights, k, g):
        W = divisor_apportion(PortioningWeights(tuple(weights)), g, k)
        assert W.k == k
        assert all(s == 0 for s, w in zip(W.seats, weights) if w == 0)


class TestAVVariant:
    def test_unique_winner(self):
        assert av_variant_k2_select(P(2, {"a": 3, "b": 1})) == C(2, "aa")

    def test_clone_removal_then_unique(self):
        assert av_variant_k2_select(P(4, {"ab": 2, "c": 1, "d": 1})) == C(4, "aa")

    def test_two_at_half(self):
        assert av_variant_k2_select(P(2, {"a": 2, "b": 2})) == C(2, "ab")

    def test_only_k2(self):
        with pytest.raises(ValueError):
            AVVariantK2Rule()(P(2, {"a": 1}), 3)


class TestExactness:
    def test_near_tie_is_detected_exactly(self):
        # 0.1 + 0.2 != 0.3 in floats; exact weights keep the tie
        w = WeightVector.parse("1,3/10,2/10,1/10")
        assert w[3] + w[4] == w[2]
        A = P(2, {"a": 1, "b": 1})
        assert thiele_score(w, C(2, "aab"), A) == thiele_score(w, C(2, "abb"), A)

    def test_scores_are_fractions(self):
        score = thiele_score(PAV, C(3, "abc"), P(3, {"abc": 1}))
        assert isinstance(score, Fraction) and score == Fraction(11, 6)


class TestParseRule:
    @pytest.mark.parametrize(
        "name",
        ["av", "pav", "ccav", "thiele:1,1/2", "seq-pav", "seq-thiele:1,0", "mp-jefferson", "mp-divisor:1,2,3", "av-variant-k2"],
    )
    def test_known(self, name):
        rule = parse_rule(name)
        assert rule(P(3, {"a": 2, "bc": 2}), 2).k == 2

    def test_unknown(self):
        with pytest.raises(ValueError):
            parse_rule("phragmen")

    def test_tie_order(self):
        order = TieBreakOrder((1, 0))
        assert parse_rule("av", order)(P(2, {"a": 1, "b": 1}), 1) == C(2, "b")

    def test_ballot_helper(self):
        assert parse_ballot("b") == 2
