"""Builders for the sp-unrepresented counterexamples against Thiele, sequential Thiele and MP divisor rules."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .axioms import ViolationWitness
from .core import Ballot, Committee, Profile, ballot_of, format_ballot, move_ballot
from .rules import (
    DivisorFunction,
    DivisorMPRule,
    RuleOracle,
    SeqThieleRule,
    ThieleRule,
    TieBreakOrder,
    WeightVector,
)

MAX_VERIFY_PARTIES = 12
DIVISOR_MAX_J = 64
DIVISOR_MAX_ELL = 2**16


@dataclass(frozen=True)
class CounterexampleBundle:
    """A manipulation scenario: a path of single-voter moves from A to A'.

    ``expected`` holds, per tie-break order, the committees the rule should
    choose at the first and last profile of the path.
    """

    name: str
    k: int
    names: tuple[str, ...]
    path: tuple[Profile, ...]
    true_ballot: Ballot
    tie_orders: tuple[TieBreakOrder, ...]
    expected: tuple[tuple[Committee, Committee], ...]
    rule_factory: Callable[[TieBreakOrder], RuleOracle] = field(repr=False, compare=False)
    params: Mapping[str, object] = field(default_factory=dict)

    @property
    def profile(self) -> Profile:
        return self.path[0]

    @property
    def manipulated(self) -> Profile:
        return self.path[-1]

    @property
    def m(self) -> int:
        return self.profile.m

    @property
    def n(self) -> int:
        return self.profile.n

    def rule(self, order: TieBreakOrder) -> RuleOracle:
        return self.rule_factory(order)

    def committees(self, order: TieBreakOrder) -> tuple[Committee, ...]:
        if self.m > MAX_VERIFY_PARTIES:
            raise ValueError(f"verification enumerates committees and is capped at m={MAX_VERIFY_PARTIES}")
        f = self.rule(order)
        return tuple(f(p, self.k) for p in self.path)

    def find_violation(self, order: TieBreakOrder) -> ViolationWitness | None:
        """First step of the path at which an unrepresented deviator gains a seat."""
        committees = self.committees(order)
        B = self.true_ballot
        for i in range(len(self.path) - 1):
            before = committees[i].seats_in(B)
            after = committees[i + 1].seats_in(B)
            if before == 0 and after > 0:
                return ViolationWitness(
                    "sp-unrepresented", self.k, self.path[i], committees[i], B, self.path[i + 1], committees[i + 1],
                    {"seats_before": before, "seats_after": after, "step": i},
                )
        return None

    def narrative(self) -> str:
        names = self.names
        lines = [f"{self.name}: m={self.m}, n={self.n}, k={self.k}"]
        if self.params:
            lines.append("  parameters: " + ", ".join(f"{k}={v}" for k, v in self.params.items()))
        for i, p in enumerate(self.path):
            label = "A" if i == 0 else ("A'" if i == len(self.path) - 1 else f"A{i}")
            lines.append(f"  {label} = {p.format(names)}")
        lines.append(f"  deviators' true ballot: {format_ballot(self.true_ballot, names)}")
        return "\n".join(lines)


def _swap_move(profile: Profile, source: Ballot, target: Ballot, times: int) -> tuple[Profile, ...]:
    path = [profile]
    for _ in range(times):
        path.append(move_ballot(path[-1], source, target))
    return tuple(path)


def _committee(m: int, seats: Mapping[int, int]) -> Committee:
    out = [0] * m
    for x, s in seats.items():
        out[x] += s
    return Committee(tuple(out))


# -- Thiele rules ---------------------------------------------------------------------


def thiele_j0(w: WeightVector) -> int:
    j0 = w.first_below_one()
    if j0 is None:
        raise ValueError("AV admits no such counterexample (all weights are 1)")
    if w[j0] == 0 and j0 < 3:
        raise ValueError("CCAV admits no such counterexample (w_2 = 0)")
    return j0


def build_thiele_counterexample(w: WeightVector) -> CounterexampleBundle:
    j0 = thiele_j0(w)
    m = 2 * j0
    names = tuple(f"a{i}" for i in range(1, j0 + 1)) + tuple(f"b{i}" for i in range(1, j0 + 1))
    all_a = ballot_of(range(j0))
    all_b = ballot_of(range(j0, m))
    b1 = 1 << j0
    ballots = [all_a, b1]
    for subset in itertools.combinations(range(m), j0):
        X = ballot_of(subset)
        if X not in (all_a, all_b):
            ballots += [X, X]
    A = Profile.from_ballots(m, ballots)
    path = (A, move_ballot(A, b1, all_b))
    W_A = _committee(m, {x: 1 for x in range(j0)})
    W_B = _committee(m, {x: 1 for x in range(j0, m)})
    identity = TieBreakOrder.identity(m)
    swapped = TieBreakOrder(tuple(range(j0, m)) + tuple(range(j0)))
    n_c = 2 * math.comb(2 * j0 - 1, j0 - 1) - 2
    return CounterexampleBundle(
        name=f"thiele {w.label()}",
        k=j0,
        names=names,
        path=path,
        true_ballot=b1,
        tie_orders=(identity, swapped),
        expected=((W_A, W_A), (W_A, W_B)),
        rule_factory=lambda order: ThieleRule(w, order),
        params={"j0": j0, "n_c": n_c, "score_W_A": j0 * n_c + j0 - 1 + w[j0], "score_W_B": j0 * n_c + 1},
    )


# -- sequential Thiele rules ------------------------------------------------------------


def seq_thiele_parameters(w: WeightVector) -> tuple[int, int]:
    """(j*, l): first index with w_j < 1 and the smallest l >= 4 with w_j* < (l-2)/l."""
    j_star = w.first_below_one()
    if j_star is None:
        raise ValueError("sequential AV admits no such counterexample (all weights are 1)")
    wj = w[j_star]
    # (l-2)/l > wj  <=>  l > 2/(1-wj)
    ell = max(4, math.floor(Fraction(2) / (1 - wj)) + 1)
    assert wj < Fraction(ell - 2, ell) and (ell == 4 or not wj < Fraction(ell - 3, ell - 1))
    return j_star, ell


def build_seq_thiele_counterexample(w: WeightVector) -> CounterexampleBundle:
    j_star, ell = seq_thiele_parameters(w)
    m = 4
    a, b, c, d = (1 << x for x in range(4))
    A = Profile.from_counts(m, {b: 1, a | b: ell, b | d: ell, a | c: ell, c | d: ell - 1, d: 1})
    path = (A, move_ballot(A, d, a | d))
    identity = TieBreakOrder.identity(m)
    before = _committee(m, {1: j_star - 1, 2: 1})
    after = _committee(m, {0: j_star - 1, 3: 1})
    return CounterexampleBundle(
        name=f"seq-thiele {w.label()}",
        k=j_star,
        names=("a", "b", "c", "d"),
        path=path,
        true_ballot=d,
        tie_orders=(identity,),
        expected=((before, after),),
        rule_factory=lambda order: SeqThieleRule(w, order),
        params={"j_star": j_star, "ell": ell},
    )


# -- divisor methods on majoritarian portioning ----------------------------------------------


def divisor_parameters(
    g: DivisorFunction, max_j: int = DIVISOR_MAX_J, max_ell: int = DIVISOR_MAX_ELL
) -> tuple[int, int, int]:
    """(j*, smallest l for j*, l* actually used).

    l* is the smallest l >= 3 with (l+1)/g(j*) < l/g(0) strictly.  A tight
    inequality or l = 2 leaves a tie in A' that lexicographic tie-breaking
    resolves against d, so the smallest l alone is not always enough.
    """
    top = g.defined_up_to()
    limit = max_j if top is None else min(max_j, top)
    g0 = g(0)
    for j in range(1, limit + 1):
        gj = g(j)
        if gj <= g0:
            continue
        # (l+1)/g(j) <= l/g(0)  <=>  l >= g(0) / (g(j) - g(0))
        ell = math.ceil(g0 / (gj - g0))
        if ell <= max_ell:
            assert Fraction(ell + 1) / gj <= Fraction(ell) / g0
            strict = max(3, math.floor(g0 / (gj - g0)) + 1)
            assert Fraction(strict + 1) / gj < Fraction(strict) / g0
            return j, ell, strict
    raise ValueError(
        f"no (l, j) with (l+1)/g(j) <= l/g(0) for j <= {limit}, l <= {max_ell}; the method behaves like AV"
    )


def build_divisor_mp_counterexample(g: DivisorFunction) -> CounterexampleBundle:
    j_star, ell_found, ell = divisor_parameters(g)
    m = 4
    a, b, c, d = (1 << x for x in range(4))
    A = Profile.from_counts(m, {c: 2, d: 2, a | c: ell, c | d: ell, a | b: ell, b | d: ell})
    # the two d-voters deviate one after the other
    path = _swap_move(A, d, a | d, 2)
    identity = TieBreakOrder.identity(m)
    before = _committee(m, {2: j_star, 1: 1})
    after = _committee(m, {0: j_star, 3: 1})
    return CounterexampleBundle(
        name=f"mp-{g.name}",
        k=j_star + 1,
        names=("a", "b", "c", "d"),
        path=path,
        true_ballot=d,
        tie_orders=(identity,),
        expected=((before, after),),
        rule_factory=lambda order: DivisorMPRule(g, order),
        params={"j_star": j_star, "ell_star": ell, "ell_min": ell_found},
    )


def is_sp_unrepresented_violation(bundle: CounterexampleBundle, orders: Sequence[TieBreakOrder] | None = None) -> bool:
    return any(bundle.find_violation(o) is not None for o in (orders or bundle.tie_orders))
