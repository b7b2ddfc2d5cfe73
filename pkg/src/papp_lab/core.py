"""Parties, ballots, anonymous profiles and committees.

Ballots are subset bitmasks over party indices (party ``i`` is bit ``i``), so
``0b011`` is the ballot ``ab``.  A profile is a multiset of ballots, stored as a
tuple of ``(ballot, count)`` pairs sorted by ascending bitmask.  Because every
value here is immutable and canonical, profiles can be used directly as dict
keys and iteration order is reproducible run to run.
"""

from __future__ import annotations

import itertools
from bisect import bisect_right
import json
import string
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

Ballot = int


def ballot_of(parties: Iterable[int]) -> Ballot:
    mask = 0
    for x in parties:
        if x < 0:
            raise ValueError(f"negative party index {x}")
        mask |= 1 << x
    return mask


def ballot_parties(ballot: Ballot) -> tuple[int, ...]:
    return tuple(i for i in range(ballot.bit_length()) if ballot >> i & 1)


def ballot_size(ballot: Ballot) -> int:
    return bin(ballot).count("1")


def default_party_names(m: int) -> tuple[str, ...]:
    if m <= 26:
        return tuple(string.ascii_lowercase[:m])
    return tuple(f"p{i}" for i in range(m))


def parse_ballot(text: str, names: Sequence[str] | None = None) -> Ballot:
    """Parse ``"abd"`` (single-letter names) or ``"a1,a2"`` into a bitmask."""
    text = text.strip()
    if not text:
        raise ValueError("empty ballot")
    if names is None:
        tokens = text.split(",") if "," in text else list(text)
        return ballot_of(string.ascii_lowercase.index(t.strip()) for t in tokens)
    index = {name: i for i, name in enumerate(names)}
    if "," in text:
        tokens = [t.strip() for t in text.split(",")]
    elif text in index:
        tokens = [text]
    else:
        tokens = list(text)
    try:
        return ballot_of(index[t] for t in tokens)
    except KeyError as exc:
        raise ValueError(f"unknown party {exc.args[0]!r} in ballot {text!r}") from None


def format_ballot(ballot: Ballot, names: Sequence[str] | None = None) -> str:
    parties = ballot_parties(ballot)
    if names is None:
        names = default_party_names(max(parties, default=0) + 1)
    labels = [names[x] for x in parties]
    if all(len(label) == 1 for label in labels):
        return "".join(labels)
    return ",".join(labels)


@dataclass(frozen=True)
class DomainSpec:
    """Election parameters plus the optional restrictions on admissible profiles.

    The restriction defaults are the ones used for the n=6, m=4, k=3 base case;
    :meth:`unrestricted` turns all of them off.
    """

    n: int
    m: int
    k: int
    forbid_full_ballot: bool = True
    max_approvals_per_party: int | None = 4
    max_total_approvals: int | None = 11

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 1 or self.k < 1:
            raise ValueError(f"need n, m, k >= 1, got n={self.n} m={self.m} k={self.k}")
        if self.forbid_full_ballot and self.m == 1:
            raise ValueError("with m=1 the only ballot is the full ballot")

    @classmethod
    def unrestricted(cls, n: int, m: int, k: int) -> DomainSpec:
        return cls(n, m, k, forbid_full_ballot=False, max_approvals_per_party=None, max_total_approvals=None)

    @property
    def full_ballot(self) -> Ballot:
        return (1 << self.m) - 1

    def admits(self, profile: Profile) -> bool:
        if profile.m != self.m or profile.n != self.n:
            return False
        return self.admits_ballots(profile.ballots)

    def admits_ballots(self, ballots: Sequence[Ballot]) -> bool:
        """Restriction check on a raw ballot sequence (length and m are not checked)."""
        full = self.full_ballot
        cap = self.max_approvals_per_party
        total_cap = self.max_total_approvals
        total = 0
        per_party = [0] * self.m if cap is not None else None
        for b in ballots:
            if b <= 0 or b > full:
                return False
            if self.forbid_full_ballot and b == full:
                return False
            if total_cap is not None:
                total += ballot_size(b)
            if per_party is not None:
                for x in range(self.m):
                    if b >> x & 1:
                        per_party[x] += 1
        if total_cap is not None and total > total_cap:
            return False
        if per_party is not None and max(per_party) > cap:
            return False
        return True


@dataclass(frozen=True)
class Profile:
    """Anonymous approval profile: a multiset of non-empty ballots over ``m`` parties."""

    m: int
    counts: tuple[tuple[Ballot, int], ...]

    def __post_init__(self) -> None:
        full = (1 << self.m) - 1
        last = 0
        for ballot, count in self.counts:
            if not 0 < ballot <= full:
                raise ValueError(f"ballot {ballot:#b} is empty or uses parties outside range(m={self.m})")
            if count < 1:
                raise ValueError(f"ballot {ballot:#b} has non-positive count {count}")
            if ballot <= last:
                raise ValueError("counts must be strictly ascending by ballot; use Profile.from_ballots")
            last = ballot

    @classmethod
    def from_ballots(cls, m: int, ballots: Iterable[Ballot | str]) -> Profile:
        counter = Counter(parse_ballot(b) if isinstance(b, str) else b for b in ballots)
        return cls(m, tuple(sorted(counter.items())))

    @classmethod
    def from_counts(cls, m: int, counts: Mapping[Ballot | str, int]) -> Profile:
        counter: Counter[int] = Counter()
        for b, c in counts.items():
            counter[parse_ballot(b) if isinstance(b, str) else b] += c
        return cls(m, tuple(sorted((b, c) for b, c in counter.items() if c)))

    @cached_property
    def n(self) -> int:
        return sum(c for _, c in self.counts)

    @cached_property
    def ballots(self) -> tuple[Ballot, ...]:
        """The profile as a non-decreasing tuple of ``n`` ballots."""
        return tuple(b for b, c in self.counts for _ in range(c))

    @cached_property
    def _count_map(self) -> dict[Ballot, int]:
        return dict(self.counts)

    def count(self, ballot: Ballot) -> int:
        return self._count_map.get(ballot, 0)

    def support(self) -> tuple[Ballot, ...]:
        return tuple(b for b, _ in self.counts)

    def approval_score(self, party: int) -> int:
        return sum(c for b, c in self.counts if b >> party & 1)

    def approvers(self, party: int) -> frozenset[Ballot]:
        """The ballot types containing ``party``."""
        return frozenset(b for b, _ in self.counts if b >> party & 1)

    def total_approvals(self) -> int:
        return sum(ballot_size(b) * c for b, c in self.counts)

    def format(self, names: Sequence[str] | None = None) -> str:
        names = names or default_party_names(self.m)
        return "{" + ", ".join(f"{format_ballot(b, names)}:{c}" for b, c in self.counts) + "}"

    def __str__(self) -> str:
        return self.format()


def canonical(m: int, ballots: Iterable[Ballot]) -> Profile:
    """Canonical profile of a ballot sequence.  Idempotent on ``Profile.ballots``."""
    return Profile.from_ballots(m, ballots)


@dataclass(frozen=True)
class Committee:
    """A multiset of parties, stored as a per-party seat vector of length m."""

    seats: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(s < 0 for s in self.seats):
            raise ValueError(f"negative seat count in {self.seats}")

    @classmethod
    def from_parties(cls, m: int, parties: Iterable[int | str]) -> Committee:
        seats = [0] * m
        for x in parties:
            seats[string.ascii_lowercase.index(x) if isinstance(x, str) else x] += 1
        return cls(tuple(seats))

    @property
    def m(self) -> int:
        return len(self.seats)

    @property
    def k(self) -> int:
        return sum(self.seats)

    def __getitem__(self, party: int) -> int:
        return self.seats[party]

    def seats_in(self, ballot: Ballot) -> int:
        """W(X): total seats held by the parties in ``ballot``."""
        return sum(s for x, s in enumerate(self.seats) if ballot >> x & 1)

    def support_mask(self) -> Ballot:
        return ballot_of(x for x, s in enumerate(self.seats) if s)

    def members(self) -> tuple[int, ...]:
        """Party indices with multiplicity, ascending."""
        return tuple(x for x, s in enumerate(self.seats) for _ in range(s))

    def format(self, names: Sequence[str] | None = None) -> str:
        names = names or default_party_names(self.m)
        return "[" + ",".join(names[x] for x in self.members()) + "]"

    def __str__(self) -> str:
        return self.format()


@dataclass(frozen=True)
class PartyPermutation:
    """A relabelling of parties: party ``x`` becomes ``mapping[x]``."""

    mapping: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ValueError(f"{self.mapping} is not a permutation of range({len(self.mapping)})")

    @classmethod
    def identity(cls, m: int) -> PartyPermutation:
        return cls(tuple(range(m)))

    @classmethod
    def swap(cls, m: int, x: int, y: int) -> PartyPermutation:
        mapping = list(range(m))
        mapping[x], mapping[y] = y, x
        return cls(tuple(mapping))

    @property
    def m(self) -> int:
        return len(self.mapping)

    def inverse(self) -> PartyPermutation:
        inv = [0] * self.m
        for x, y in enumerate(self.mapping):
            inv[y] = x
        return PartyPermutation(tuple(inv))

    def then(self, other: PartyPermutation) -> PartyPermutation:
        """Apply ``self`` first, then ``other``."""
        return PartyPermutation(tuple(other.mapping[y] for y in self.mapping))

    def ballot(self, ballot: Ballot) -> Ballot:
        return ballot_of(self.mapping[x] for x in ballot_parties(ballot))

    def committee(self, committee: Committee) -> Committee:
        seats = [0] * self.m
        for x, s in enumerate(committee.seats):
            seats[self.mapping[x]] = s
        return Committee(tuple(seats))


# -- enumeration -------------------------------------------------------------


def enumerate_ballots(spec: DomainSpec) -> tuple[Ballot, ...]:
    return _ballots(spec.m, spec.forbid_full_ballot)


@lru_cache(maxsize=None)
def _ballots(m: int, forbid_full: bool) -> tuple[Ballot, ...]:
    top = (1 << m) - 1 if forbid_full else 1 << m
    return tuple(range(1, top))


def profile_tuples(spec: DomainSpec) -> Iterator[tuple[Ballot, ...]]:
    """Admissible profiles as non-decreasing ballot tuples, lexicographically.

    Per-party and total approval caps are pruned during the recursion, so the
    cost tracks the size of the restricted domain rather than the full one.
    """
    ballots = enumerate_ballots(spec)
    sizes = [ballot_size(b) for b in ballots]
    members = [ballot_parties(b) for b in ballots]
    n, m = spec.n, spec.m
    cap = spec.max_approvals_per_party if spec.max_approvals_per_party is not None else n
    total_cap = spec.max_total_approvals if spec.max_total_approvals is not None else n * m
    per_party = [0] * m
    chosen: list[Ballot] = []

    def rec(start: int, remaining: int, total: int) -> Iterator[tuple[Ballot, ...]]:
        if remaining == 0:
            yield tuple(chosen)
            return
        for i in range(start, len(ballots)):
            # every later voter approves at least one party
            if total + sizes[i] + (remaining - 1) > total_cap:
                continue
            parties = members[i]
            if any(per_party[x] >= cap for x in parties):
                continue
            for x in parties:
                per_party[x] += 1
            chosen.append(ballots[i])
            yield from rec(i, remaining - 1, total + sizes[i])
            chosen.pop()
            for x in parties:
                per_party[x] -= 1

    yield from rec(0, n, 0)


def enumerate_profiles(spec: DomainSpec) -> Iterator[Profile]:
    """Lazily yield every admissible anonymous profile in canonical order."""
    for ballots in profile_tuples(spec):
        yield Profile.from_ballots(spec.m, ballots)


@lru_cache(maxsize=None)
def committee_tuples(m: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Committees of size k as sorted party sequences, lexicographically ascending."""
    return tuple(itertools.combinations_with_replacement(range(m), k))


def enumerate_committees(m: int, k: int) -> tuple[Committee, ...]:
    """All size-k multisets over m parties; the order doubles as the default tie-break."""
    if m < 1 or k < 0:
        raise ValueError(f"need m >= 1 and k >= 0, got m={m} k={k}")
    return _committees(m, k)


@lru_cache(maxsize=None)
def _committees(m: int, k: int) -> tuple[Committee, ...]:
    return tuple(Committee.from_parties(m, c) for c in committee_tuples(m, k))


# -- profile transformations -------------------------------------------------


def move_ballot(profile: Profile, source: Ballot, target: Ballot) -> Profile:
    """A^{source -> target}: one voter switches from ``source`` to ``target``."""
    if profile.count(source) < 1:
        raise ValueError(f"no voter reports {source:#b}")
    counts = Counter(dict(profile.counts))
    counts[source] -= 1
    counts[target] += 1
    return Profile(profile.m, tuple(sorted((b, c) for b, c in counts.items() if c)))


def manipulation_neighbors(profile: Profile, spec: DomainSpec) -> Iterator[tuple[Ballot, Profile]]:
    """Yield ``(true_ballot, deviated_profile)`` for every single-voter deviation inside the domain."""
    ballots = enumerate_ballots(spec)
    for source, _ in profile.counts:
        for target in ballots:
            if target == source:
                continue
            deviated = move_ballot(profile, source, target)
            if spec.admits(deviated):
                yield source, deviated


def clone_party(profile: Profile, x: int, y: int | None = None) -> Profile:
    """Add party ``y`` to every ballot containing ``x`` (y defaults to the fresh index m)."""
    if not 0 <= x < profile.m:
        raise ValueError(f"party {x} outside range(m={profile.m})")
    if y is None:
        y = profile.m
    if y < profile.m and profile.approval_score(y) > 0:
        raise ValueError(f"party {y} is already approved in the profile")
    if y == x:
        raise ValueError("cannot clone a party onto itself")
    m = max(profile.m, y + 1)
    return Profile.from_ballots(m, (b | (1 << y) if b >> x & 1 else b for b in profile.ballots))


def delete_party(profile: Profile, y: int) -> Profile:
    """Remove party ``y`` from every ballot and shift higher indices down by one."""
    low = (1 << y) - 1

    def shrink(b: Ballot) -> Ballot:
        out = (b & low) | ((b >> (y + 1)) << y)
        if out == 0:
            raise ValueError(f"deleting party {y} empties ballot {b:#b}")
        return out

    return Profile.from_ballots(profile.m - 1, (shrink(b) for b in profile.ballots))


def replicate_voters(profile: Profile, ell: int) -> Profile:
    if ell < 1:
        raise ValueError(f"replication factor must be >= 1, got {ell}")
    return Profile(profile.m, tuple((b, c * ell) for b, c in profile.counts))


def add_ballots(profile: Profile, ballot: Ballot, count: int) -> Profile:
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    counts = Counter(dict(profile.counts))
    counts[ballot] += count
    return Profile(profile.m, tuple(sorted(counts.items())))


def apply_party_permutation(profile: Profile, tau: PartyPermutation) -> Profile:
    if tau.m != profile.m:
        raise ValueError(f"permutation on {tau.m} parties applied to a profile with m={profile.m}")
    return Profile.from_ballots(profile.m, (tau.ballot(b) for b in profile.ballots))


# -- JSON profile format -------------------------------------------------------


@dataclass(frozen=True)
class NamedProfile:
    profile: Profile
    names: tuple[str, ...] = field(default=())

    def party_names(self) -> tuple[str, ...]:
        return self.names or default_party_names(self.profile.m)


def profile_to_json(profile: Profile, names: Sequence[str] | None = None) -> str:
    names = tuple(names) if names else default_party_names(profile.m)
    obj: dict = {"m": profile.m}
    if names != default_party_names(profile.m):
        obj["parties"] = list(names)
    obj["ballots"] = [
        {"parties": [names[x] for x in ballot_parties(b)], "count": c} for b, c in profile.counts
    ]
    return json.dumps(obj) + "\n"


def profile_from_json(text: str) -> NamedProfile:
    """Parse the JSON profile format.  Party names are indexed in alphabetical order."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict) or "ballots" not in obj:
        raise ValueError("profile JSON must be an object with a 'ballots' list")
    m = obj.get("m")
    listed = obj.get("parties")
    if listed is not None:
        names = tuple(sorted(listed))
        if len(set(names)) != len(names):
            raise ValueError("duplicate party names")
        if m is None:
            m = len(names)
        elif m != len(names):
            raise ValueError(f"m={m} but {len(names)} party names given")
    else:
        if m is None:
            raise ValueError("profile JSON needs 'm' or 'parties'")
        names = default_party_names(m)
    index = {name: i for i, name in enumerate(names)}
    counts: Counter[int] = Counter()
    for i, entry in enumerate(obj["ballots"]):
        parties = entry.get("parties")
        count = entry.get("count", 1)
        if not parties:
            raise ValueError(f"ballot #{i} is empty")
        if not isinstance(count, int) or count < 1:
            raise ValueError(f"ballot #{i} has invalid count {count!r}")
        try:
            counts[ballot_of(index[p] for p in parties)] += count
        except KeyError as exc:
            raise ValueError(f"ballot #{i} names unknown party {exc.args[0]!r}") from None
    profile = Profile(m, tuple(sorted(counts.items())))
    return NamedProfile(profile, names if listed is not None else ())


# -- indexed domains -----------------------------------------------------------


class ProfileDomain:
    """An ordered, indexed set of profiles with fast single-voter neighbour lookup.

    Built either by enumerating a :class:`DomainSpec` or from an explicit list
    (for instance the profiles of a hand-picked sub-instance).  Neighbours are
    those deviations whose result is again a member of the domain.
    """

    def __init__(self, m: int, tuples: Sequence[tuple[Ballot, ...]], ballots: Sequence[Ballot]) -> None:
        self.m = m
        self.tuples = list(tuples)
        self.ballots = tuple(ballots)
        self.index = {t: i for i, t in enumerate(self.tuples)}
        if len(self.index) != len(self.tuples):
            raise ValueError("duplicate profiles in domain")
        self._profiles: list[Profile | None] = [None] * len(self.tuples)

    @classmethod
    def from_spec(cls, spec: DomainSpec) -> ProfileDomain:
        return cls(spec.m, list(profile_tuples(spec)), enumerate_ballots(spec))

    @classmethod
    def from_profiles(cls, m: int, profiles: Iterable[Profile], ballots: Sequence[Ballot] | None = None) -> ProfileDomain:
        profiles = list(profiles)
        if ballots is None:
            ballots = tuple(range(1, 1 << m))
        return cls(m, [p.ballots for p in profiles], ballots)

    def __len__(self) -> int:
        return len(self.tuples)

    def __contains__(self, profile: Profile) -> bool:
        return profile.ballots in self.index

    def profile(self, i: int) -> Profile:
        p = self._profiles[i]
        if p is None:
            p = self._profiles[i] = Profile.from_ballots(self.m, self.tuples[i])
        return p

    def profiles(self) -> Iterator[Profile]:
        return (self.profile(i) for i in range(len(self)))

    def index_of(self, profile: Profile) -> int:
        return self.index[profile.ballots]

    def neighbors(self, i: int) -> Iterator[tuple[Ballot, int]]:
        """Yield ``(true_ballot, j)`` for every in-domain single-voter deviation from profile i."""
        for source, _, j in self.moves(i):
            yield source, j

    def moves(self, i: int) -> Iterator[tuple[Ballot, Ballot, int]]:
        """Yield ``(source, target, j)``: one voter of profile i switches from source to target.

        Order: source ballot ascending, then target ballot ascending, matching
        :func:`manipulation_neighbors`.
        """
        t = self.tuples[i]
        index = self.index
        prev = -1
        for pos, source in enumerate(t):
            if source == prev:
                continue
            prev = source
            rest = t[:pos] + t[pos + 1:]
            for target in self.ballots:
                if target == source:
                    continue
                lo = bisect_right(rest, target)
                j = index.get(rest[:lo] + (target,) + rest[lo:])
                if j is not None:
                    yield source, target, j
