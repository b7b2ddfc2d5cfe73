from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from papp_lab.constructions import (
    build_divisor_mp_counterexample,
    build_seq_thiele_counterexample,
    build_thiele_counterexample,
    divisor_parameters,
    is_sp_unrepresented_violation,
    seq_thiele_parameters,
    thiele_j0,
)
from papp_lab.core import Committee
from papp_lab.rules import DivisorFunction, TieBreakOrder, WeightVector, thiele_score

C = Committee.from_parties

THIELE_WEIGHTS = ["1,1/2", "1,1/3", "1,9/10", "1,1,0", "1,1,1/2", "1,3/4,1/4"]


def independent_gain(bundle, order):
    """Seats on the true ballot along the path, recomputed from the rule directly."""
    f = bundle.rule(order)
    return [f(p, bundle.k).seats_in(bundle.true_ballot) for p in bundle.path]


class TestThiele:
    def test_j0(self):
        assert thiele_j0(WeightVector.pav()) == 2
        assert thiele_j0(WeightVector.parse("1,1,0")) == 3
        with pytest.raises(ValueError):
            thiele_j0(WeightVector.av())
        with pytest.raises(ValueError):
            thiele_j0(WeightVector.ccav())

    def test_pav_bundle(self):
        bundle = build_thiele_counterexample(WeightVector.pav())
        assert (bundle.m, bundle.n, bundle.k) == (4, 10, 2)
        assert bundle.names == ("a1", "a2", "b1", "b2")
        assert bundle.params["score_W_A"] == Fraction(19, 2)
        assert bundle.params["score_W_B"] == 9
        identity, swapped = bundle.tie_orders
        assert bundle.find_violation(identity) is None
        w = bundle.find_violation(swapped)
        assert w is not None and w.committee == C(4, [0, 1]) and w.deviated_committee == C(4, [2, 3])
        assert independent_gain(bundle, swapped) == [0, 1]
        assert "a1" in bundle.narrative()

    def test_ccav_like_weights(self):
        bundle = build_thiele_counterexample(WeightVector.parse("1,1,0"))
        assert (bundle.params["j0"], bundle.n, bundle.m) == (3, 38, 6)

    @pytest.mark.parametrize("text", THIELE_WEIGHTS)
    def test_expected_committees(self, text):
        w = WeightVector.parse(text)
        bundle = build_thiele_counterexample(w)
        for order, expected in zip(bundle.tie_orders, bundle.expected):
            got = bundle.committees(order)
            assert (got[0], got[-1]) == expected
        W_A, W_B = bundle.expected[1]
        assert thiele_score(w, W_A, bundle.profile) == bundle.params["score_W_A"]
        assert thiele_score(w, W_B, bundle.profile) == bundle.params["score_W_B"]
        assert is_sp_unrepresented_violation(bundle)


class TestSeqThiele:
    def test_parameters(self):
        assert seq_thiele_parameters(WeightVector.pav()) == (2, 5)
        assert seq_thiele_parameters(WeightVector.parse("1,2/3")) == (2, 7)
        assert seq_thiele_parameters(WeightVector.ccav()) == (2, 4)
        with pytest.raises(ValueError):
            seq_thiele_parameters(WeightVector.av())

    def test_seqpav(self):
        bundle = build_seq_thiele_counterexample(WeightVector.pav())
        assert bundle.n == 21
        (order,) = bundle.tie_orders
        assert bundle.committees(order) == (C(4, "bc"), C(4, "ad"))
        assert independent_gain(bundle, order) == [0, 1]

    @pytest.mark.parametrize("text", ["1,1/2", "1,2/3", "1,0", "1,1,1/2", "1,1,1,9/10"])
    def test_violation(self, text):
        bundle = build_seq_thiele_counterexample(WeightVector.parse(text))
        (order,) = bundle.tie_orders
        got = bundle.committees(order)
        assert (got[0], got[-1]) == bundle.expected[0]
        assert is_sp_unrepresented_violation(bundle)


class TestDivisor:
    def test_jefferson(self):
        g = DivisorFunction.jefferson()
        assert divisor_parameters(g) == (1, 1, 3)
        bundle = build_divisor_mp_counterexample(g)
        assert bundle.n == 16 and len(bundle.path) == 3
        (order,) = bundle.tie_orders
        assert bundle.committees(order) == (C(4, "bc"), C(4, "bc"), C(4, "ad"))
        w = bundle.find_violation(order)
        assert w is not None and w.details["step"] == 1

    @pytest.mark.parametrize(
        "g", [DivisorFunction.webster(), DivisorFunction.parse("1,2,3"), DivisorFunction.parse("1,1,5"), DivisorFunction.parse("2,3")]
    )
    def test_other_divisors(self, g):
        bundle = build_divisor_mp_counterexample(g)
        (order,) = bundle.tie_orders
        got = bundle.committees(order)
        assert (got[0], got[-1]) == bundle.expected[0]
        assert is_sp_unrepresented_violation(bundle)

    @settings(max_examples=500, deadline=None)
    @given(st.lists(st.integers(1, 6), min_size=1, max_size=4), st.integers(1, 5), st.integers(1, 4))
    def test_random_monotone_tables(self, flat, base, step):
        # g(0) repeated, then a strict increase, then anything monotone
        values = [base] * len(flat) + [base + step]
        for inc in flat:
            values.append(values[-1] + inc - 1)
        g = DivisorFunction.from_table(values)
        bundle = build_divisor_mp_counterexample(g)
        (order,) = bundle.tie_orders
        got = bundle.committees(order)
        assert (got[0], got[-1]) == bundle.expected[0]
        assert is_sp_unrepresented_violation(bundle)

    def test_tight_inequality_is_avoided(self):
        # l=2 meets (l+1)/g(1) <= l/g(0) only with equality
        assert divisor_parameters(DivisorFunction.parse("2,3")) == (1, 2, 3)

    def test_constant_divisor_has_no_counterexample(self):
        with pytest.raises(ValueError):
            divisor_parameters(DivisorFunction.parse("1,1,1"))

    def test_large_ell(self):
        j, ell_min, ell = divisor_parameters(DivisorFunction.parse("1,101/100"))
        assert (j, ell_min, ell) == (1, 100, 101)


class TestCap:
    def test_committee_enumeration_cap(self):
        w = WeightVector.parse("1,1,1,1,1,1,1/2")
        bundle = build_thiele_counterexample(w)
        assert bundle.m == 14
        with pytest.raises(ValueError):
            bundle.committees(TieBreakOrder.identity(14))
