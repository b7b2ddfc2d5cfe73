"""Party-approval rules with exact rational scoring and lexicographic tie-breaking."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Protocol, Sequence

from .core import Ballot, Committee, Profile, committee_tuples

RuleOracle = Callable[[Profile, int], Committee]


def _to_fraction(value: object) -> Fraction:
    if isinstance(value, float):
        raise TypeError("floating point weights are not accepted; pass a Fraction, int or string")
    return Fraction(value)  # type: ignore[arg-type]


@dataclass(frozen=True)
class WeightVector:
    """Thiele weights w_1 >= w_2 >= ... >= 0 with w_1 = 1.

    Entries past the stored prefix repeat the last entry, so ``(1, 0)`` is
    CCAV for every committee size and ``(1,)`` is AV.
    """

    entries: tuple[Fraction, ...]
    name: str = ""

    def __post_init__(self) -> None:
        entries = tuple(_to_fraction(e) for e in self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValueError("weight vector needs at least one entry")
        if entries[0] != 1:
            raise ValueError(f"w_1 must be 1, got {entries[0]}")
        for a, b in zip(entries, entries[1:]):
            if b > a:
                raise ValueError(f"weights must be non-increasing, got {a} then {b}")
        if entries[-1] < 0:
            raise ValueError("weights must be non-negative")

    @classmethod
    def av(cls) -> WeightVector:
        return cls((Fraction(1),), "av")

    @classmethod
    def ccav(cls) -> WeightVector:
        return cls((Fraction(1), Fraction(0)), "ccav")

    @classmethod
    def pav(cls, length: int = 64) -> WeightVector:
        return cls(tuple(Fraction(1, j) for j in range(1, length + 1)), "pav")

    @classmethod
    def parse(cls, text: str) -> WeightVector:
        """Parse ``"1,1/2,1/3"``; the last entry is repeated beyond the list."""
        try:
            entries = tuple(Fraction(t.strip()) for t in text.split(",") if t.strip())
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"cannot parse weight vector {text!r}") from None
        return cls(entries)

    def __getitem__(self, j: int) -> Fraction:
        """w_j, 1-indexed."""
        if j < 1:
            raise IndexError("weights are 1-indexed")
        return self.entries[min(j, len(self.entries)) - 1]

    def prefix(self, length: int) -> tuple[Fraction, ...]:
        return tuple(self[j] for j in range(1, length + 1))

    def cumulative(self, k: int) -> tuple[Fraction, ...]:
        """c[t] = w_1 + ... + w_t for t = 0..k."""
        out = [Fraction(0)]
        for j in range(1, k + 1):
            out.append(out[-1] + self[j])
        return tuple(out)

    def is_av(self, k: int | None = None) -> bool:
        return all(e == 1 for e in (self.entries if k is None else self.prefix(k)))

    def is_ccav(self) -> bool:
        return len(self.entries) >= 2 and all(e == 0 for e in self.entries[1:])

    def first_below_one(self) -> int | None:
        """Smallest j with w_j < 1, or None when the vector is AV."""
        for j, e in enumerate(self.entries, start=1):
            if e < 1:
                return j
        return None

    def label(self) -> str:
        return self.name or "thiele:" + ",".join(str(e) for e in self.entries)


@dataclass(frozen=True)
class TieBreakOrder:
    """A linear order on parties, best first.

    Committees compare lexicographically as party sequences sorted by this
    order, which makes ``[a,a,a]`` the best size-3 committee under the
    identity order.
    """

    party_order: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.party_order) != list(range(len(self.party_order))):
            raise ValueError(f"{self.party_order} is not a permutation")

    @classmethod
    def identity(cls, m: int) -> TieBreakOrder:
        return cls(tuple(range(m)))

    @property
    def m(self) -> int:
        return len(self.party_order)

    def rank(self, party: int) -> int:
        return self.party_order.index(party)

    def best(self, parties: Sequence[int]) -> int:
        return min(parties, key=self.party_order.index)

    def committees(self, k: int) -> tuple[Committee, ...]:
        """All size-k committees, best first."""
        return _ordered_committees(self.party_order, k)


@lru_cache(maxsize=256)
def _ordered_committees(order: tuple[int, ...], k: int) -> tuple[Committee, ...]:
    m = len(order)
    out = []
    for ranks in committee_tuples(m, k):
        seats = [0] * m
        for r in ranks:
            seats[order[r]] += 1
        out.append(Committee(tuple(seats)))
    return tuple(out)


def _order_for(profile: Profile, tb: TieBreakOrder | None) -> TieBreakOrder:
    if tb is None:
        return TieBreakOrder.identity(profile.m)
    if tb.m != profile.m:
        raise ValueError(f"tie-break order covers {tb.m} parties, profile has {profile.m}")
    return tb


# -- Thiele rules --------------------------------------------------------------


def thiele_score(w: WeightVector, committee: Committee, profile: Profile) -> Fraction:
    cum = w.cumulative(committee.k)
    return sum((c * cum[committee.seats_in(b)] for b, c in profile.counts), Fraction(0))


def _scaled_cumulative(w: WeightVector, k: int) -> tuple[tuple[int, ...], int]:
    cum = w.cumulative(k)
    scale = math.lcm(*(c.denominator for c in cum))
    return tuple(int(c * scale) for c in cum), scale


def thiele_select(w: WeightVector, profile: Profile, k: int, tb: TieBreakOrder | None = None) -> Committee:
    return thiele_select_scored(w, profile, k, tb)[0]


def thiele_select_scored(
    w: WeightVector, profile: Profile, k: int, tb: TieBreakOrder | None = None
) -> tuple[Committee, Fraction]:
    """Winning committee and its exact score."""
    tb = _order_for(profile, tb)
    cum, scale = _scaled_cumulative(w, k)
    counts = profile.counts
    best: Committee | None = None
    best_score = -1
    for committee in tb.committees(k):
        seats = committee.seats
        score = 0
        for b, c in counts:
            t = 0
            x = 0
            while b:
                if b & 1:
                    t += seats[x]
                b >>= 1
                x += 1
            score += c * cum[t]
        if score > best_score:
            best, best_score = committee, score
    assert best is not None
    return best, Fraction(best_score, scale)


def seq_thiele_select(w: WeightVector, profile: Profile, k: int, tb: TieBreakOrder | None = None) -> Committee:
    tb = _order_for(profile, tb)
    seats = [0] * profile.m
    for _ in range(k):
        best_party = -1
        best_gain: Fraction | None = None
        for x in tb.party_order:
            gain = Fraction(0)
            for b, c in profile.counts:
                if b >> x & 1:
                    covered = sum(seats[y] for y in range(profile.m) if b >> y & 1)
                    gain += c * w[covered + 1]
            if best_gain is None or gain > best_gain:
                best_party, best_gain = x, gain
        seats[best_party] += 1
    return Committee(tuple(seats))


# -- majoritarian portioning + divisor methods ---------------------------------


@dataclass(frozen=True)
class PortioningWeights:
    weights: tuple[int, ...]

    def __getitem__(self, party: int) -> int:
        return self.weights[party]


def majoritarian_portioning(profile: Profile, tb: TieBreakOrder | None = None) -> PortioningWeights:
    tb = _order_for(profile, tb)
    weights = [0] * profile.m
    remaining = dict(profile.counts)
    done: set[int] = set()
    while remaining:
        best_party, best_score = -1, -1
        for x in tb.party_order:
            if x in done:
                continue
            score = sum(c for b, c in remaining.items() if b >> x & 1)
            if score > best_score:
                best_party, best_score = x, score
        weights[best_party] = best_score
        done.add(best_party)
        remaining = {b: c for b, c in remaining.items() if not b >> best_party & 1}
    return PortioningWeights(tuple(weights))


@dataclass(frozen=True)
class DivisorFunction:
    """A divisor sequence g(0), g(1), ... of positive rationals, non-decreasing.

    Presets are closed forms; a table covers only its listed indices and
    raises past the end rather than guessing an extension.
    """

    name: str
    table: tuple[Fraction, ...] = ()
    offset: Fraction | None = None

    def __post_init__(self) -> None:
        if self.offset is None:
            if not self.table:
                raise ValueError("divisor table is empty")
            table = tuple(_to_fraction(t) for t in self.table)
            object.__setattr__(self, "table", table)
            if any(t <= 0 for t in table):
                raise ValueError("divisor values must be positive")
            if any(b < a for a, b in zip(table, table[1:])):
                raise ValueError("divisor values must be non-decreasing")
        elif self.offset <= 0:
            raise ValueError("affine divisor offset must be positive")

    @classmethod
    def jefferson(cls) -> DivisorFunction:
        return cls("jefferson", offset=Fraction(1))

    @classmethod
    def webster(cls) -> DivisorFunction:
        return cls("webster", offset=Fraction(1, 2))

    @classmethod
    def from_table(cls, values: Sequence[object]) -> DivisorFunction:
        table = tuple(_to_fraction(v) for v in values)
        return cls("divisor:" + ",".join(str(t) for t in table), table=table)

    @classmethod
    def parse(cls, text: str) -> DivisorFunction:
        if text in ("jefferson", "dhondt", "d'hondt"):
            return cls.jefferson()
        if text in ("webster", "sainte-lague"):
            return cls.webster()
        try:
            return cls.from_table([Fraction(t.strip()) for t in text.split(",") if t.strip()])
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"cannot parse divisor function {text!r}") from None

    def defined_up_to(self) -> int | None:
        """Largest index with a defined value, or None if unbounded."""
        return None if self.offset is not None else len(self.table) - 1

    def __call__(self, t: int) -> Fraction:
        if t < 0:
            raise ValueError("divisor index must be non-negative")
        if self.offset is not None:
            return t + self.offset
        if t >= len(self.table):
            raise ValueError(f"divisor table {self.name} has no value for index {t}")
        return self.table[t]


def divisor_apportion(
    weights: PortioningWeights, g: DivisorFunction, k: int, tb: TieBreakOrder | None = None
) -> Committee:
    m = len(weights.weights)
    tb = tb or TieBreakOrder.identity(m)
    if not any(weights.weights):
        raise ValueError("all portioning weights are zero")
    seats = [0] * m
    for _ in range(k):
        best_party, best_q = -1, Fraction(-1)
        for x in tb.party_order:
            q = Fraction(weights[x]) / g(seats[x])
            if q > best_q:
                best_party, best_q = x, q
        seats[best_party] += 1
    return Committee(tuple(seats))


# -- the k=2 AV variant ----------------------------------------------------------


def remove_clones(profile: Profile, tb: TieBreakOrder | None = None) -> tuple[int, ...]:
    """Parties kept after clone removal: the best of each group with identical approvers."""
    tb = _order_for(profile, tb)
    seen: set[frozenset[Ballot]] = set()
    kept = []
    for x in tb.party_order:
        key = profile.approvers(x)
        if key not in seen:
            seen.add(key)
            kept.append(x)
    return tuple(kept)


def av_variant_k2_select(profile: Profile, tb: TieBreakOrder | None = None) -> Committee:
    tb = _order_for(profile, tb)
    kept = remove_clones(profile, tb)  # already in tie-break order
    scores = {x: profile.approval_score(x) for x in kept}
    top = max(scores.values())
    winner = next(x for x in kept if scores[x] == top)
    seats = [0] * profile.m
    half = [x for x in kept if 2 * scores[x] == profile.n]
    if 2 * top != profile.n or len(half) == 1:
        seats[winner] = 2
    else:
        seats[half[0]] += 1
        seats[half[1]] += 1
    return Committee(tuple(seats))


# -- rule objects -----------------------------------------------------------------


class Rule(Protocol):
    name: str

    def __call__(self, profile: Profile, k: int) -> Committee: ...


@dataclass(frozen=True)
class ThieleRule:
    weights: WeightVector
    tie_order: TieBreakOrder | None = None

    @property
    def name(self) -> str:
        return self.weights.label()

    def __call__(self, profile: Profile, k: int) -> Committee:
        return thiele_select(self.weights, profile, k, self.tie_order)

    def score(self, committee: Committee, profile: Profile) -> Fraction:
        return thiele_score(self.weights, committee, profile)


@dataclass(frozen=True)
class SeqThieleRule:
    weights: WeightVector
    tie_order: TieBreakOrder | None = None

    @property
    def name(self) -> str:
        return "seq-" + self.weights.label()

    def __call__(self, profile: Profile, k: int) -> Committee:
        return seq_thiele_select(self.weights, profile, k, self.tie_order)


@dataclass(frozen=True)
class DivisorMPRule:
    divisor: DivisorFunction
    tie_order: TieBreakOrder | None = None

    @property
    def name(self) -> str:
        return "mp-" + self.divisor.name

    def __call__(self, profile: Profile, k: int) -> Committee:
        weights = majoritarian_portioning(profile, self.tie_order)
        return divisor_apportion(weights, self.divisor, k, self.tie_order)


@dataclass(frozen=True)
class AVVariantK2Rule:
    tie_order: TieBreakOrder | None = None
    name: str = "av-variant-k2"

    def __call__(self, profile: Profile, k: int) -> Committee:
        if k != 2:
            raise ValueError(f"av-variant-k2 is defined for k=2 only, got k={k}")
        return av_variant_k2_select(profile, self.tie_order)


RULE_NAMES = ("av", "pav", "ccav", "thiele:<w>", "seq-pav", "seq-thiele:<w>", "mp-jefferson", "mp-divisor:<g>", "av-variant-k2")


def parse_rule(name: str, tie_order: TieBreakOrder | None = None) -> Rule:
    if name == "av":
        return ThieleRule(WeightVector.av(), tie_order)
    if name == "pav":
        return ThieleRule(WeightVector.pav(), tie_order)
    if name == "ccav":
        return ThieleRule(WeightVector.ccav(), tie_order)
    if name.startswith("thiele:"):
        return ThieleRule(WeightVector.parse(name[len("thiele:"):]), tie_order)
    if name == "seq-pav":
        return SeqThieleRule(WeightVector.pav(), tie_order)
    if name == "seq-av":
        return SeqThieleRule(WeightVector.av(), tie_order)
    if name.startswith("seq-thiele:"):
        return SeqThieleRule(WeightVector.parse(name[len("seq-thiele:"):]), tie_order)
    if name == "mp-jefferson":
        return DivisorMPRule(DivisorFunction.jefferson(), tie_order)
    if name == "mp-webster":
        return DivisorMPRule(DivisorFunction.webster(), tie_order)
    if name.startswith("mp-divisor:"):
        return DivisorMPRule(DivisorFunction.parse(name[len("mp-divisor:"):]), tie_order)
    if name == "av-variant-k2":
        return AVVariantK2Rule(tie_order)
    raise ValueError(f"unknown rule {name!r}; expected one of {', '.join(RULE_NAMES)}")
