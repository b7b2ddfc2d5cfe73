"""Axiom checkers, committee filters and exhaustive violation search."""

from __future__ import annotations

import json
import multiprocessing
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .core import (
    Ballot,
    Committee,
    DomainSpec,
    Profile,
    ProfileDomain,
    add_ballots,
    ballot_parties,
    ballot_size,
    clone_party,
    enumerate_committees,
    format_ballot,
    default_party_names,
    replicate_voters,
)
from .rules import RuleOracle

AXIOMS = ("strategyproofness", "sp-unrepresented", "weak-representation", "wpr", "pareto")

AXIOM_ALIASES = {
    "sp": "strategyproofness",
    "strategyproofness": "strategyproofness",
    "spu": "sp-unrepresented",
    "sp-unrepresented": "sp-unrepresented",
    "wr": "weak-representation",
    "weak-representation": "weak-representation",
    "wpr": "wpr",
    "weak-proportional-representation": "wpr",
    "po": "pareto",
    "pareto": "pareto",
}


def normalize_axiom(tag: str) -> str:
    try:
        return AXIOM_ALIASES[tag.lower()]
    except KeyError:
        raise ValueError(f"unsupported axiom {tag!r}; expected one of {', '.join(sorted(AXIOM_ALIASES))}") from None


# -- committee filters ------------------------------------------------------------


def pareto_dominated_parties(profile: Profile) -> frozenset[int]:
    """Parties y for which some x is approved by a strict superset of y's approvers."""
    approvers = [profile.approvers(x) for x in range(profile.m)]
    dominated = set()
    for y in range(profile.m):
        for x in range(profile.m):
            if x != y and approvers[y] < approvers[x]:
                dominated.add(y)
                break
    return frozenset(dominated)


def singleton_count(profile: Profile, party: int) -> int:
    return profile.count(1 << party)


def wr_parties(profile: Profile, k: int) -> tuple[int, ...]:
    """Parties uniquely approved by at least n/k voters."""
    return tuple(x for x in range(profile.m) if singleton_count(profile, x) * k >= profile.n)


def wr_committees(profile: Profile, k: int) -> tuple[Committee, ...]:
    need = wr_parties(profile, k)
    return tuple(W for W in enumerate_committees(profile.m, k) if all(W[x] >= 1 for x in need))


def wpr_requirements(profile: Profile, k: int) -> tuple[int, ...]:
    """Per-party seat lower bound floor(singleton_count * k / n)."""
    return tuple(singleton_count(profile, x) * k // profile.n for x in range(profile.m))


def wpr_committees(profile: Profile, k: int) -> tuple[Committee, ...]:
    need = wpr_requirements(profile, k)
    return tuple(W for W in enumerate_committees(profile.m, k) if all(s >= r for s, r in zip(W.seats, need)))


MAX_CLEVER_PARTIES = 8


@dataclass(frozen=True)
class CleverWrContext:
    """X plus the ballot-level seat requirements derived from nested ballot chains.

    ``chain_weight[B]`` is the largest multiplicity of a chain of present
    ballots ending in B whose bottom is not contained in X; ``requirements``
    lists ``(B, r)`` meaning ``W(B) >= r``.
    """

    X: Ballot
    chain_weight: Mapping[Ballot, int]
    requirements: tuple[tuple[Ballot, int], ...]

    def admits(self, committee: Committee) -> bool:
        for x in ballot_parties(self.X):
            if committee[x] < 1:
                return False
        return all(committee.seats_in(b) >= r for b, r in self.requirements)


def clever_wr_context(profile: Profile, k: int) -> CleverWrContext:
    if profile.m > MAX_CLEVER_PARTIES:
        raise ValueError(f"cleverWR chain search supports m <= {MAX_CLEVER_PARTIES}, got m={profile.m}")
    n = profile.n
    X = 0
    for x in wr_parties(profile, k):
        X |= 1 << x
    # a chain whose bottom escapes X lies entirely outside the subsets of X
    present = [(b, c) for b, c in profile.counts if b & ~X]
    best: dict[Ballot, int] = {}
    # ascending bitmask order visits every proper subset before its supersets
    for b, c in present:
        below = max((best[s] for s in best if s != b and s & b == s), default=0)
        best[b] = c + below
    requirements = tuple(
        (b, ballot_size(b & X) + 1) for b, _ in present if best[b] * k >= n
    )
    return CleverWrContext(X, best, requirements)


def clever_wr_committees(profile: Profile, k: int) -> tuple[Committee, ...]:
    ctx = clever_wr_context(profile, k)
    return tuple(W for W in enumerate_committees(profile.m, k) if ctx.admits(W))


def fact2_bounds(profile: Profile, k: int) -> dict[Ballot, int]:
    """Seat lower bounds f(A, X) >= l that SP and WR together force for each reported ballot X."""
    block = -(-profile.n // k)
    return {b: min(ballot_size(b), k, c // block) for b, c in profile.counts}


# -- violation witnesses --------------------------------------------------------------


@dataclass(frozen=True)
class ViolationWitness:
    axiom: str
    k: int
    profile: Profile
    committee: Committee
    true_ballot: Ballot | None = None
    deviated_profile: Profile | None = None
    deviated_committee: Committee | None = None
    details: Mapping[str, object] = field(default_factory=dict)

    def replay(self, rule: RuleOracle) -> bool:
        """True if the rule still produces the stored committees."""
        if rule(self.profile, self.k) != self.committee:
            return False
        if self.deviated_profile is not None:
            return rule(self.deviated_profile, self.k) == self.deviated_committee
        return True

    def to_dict(self, names: Sequence[str] | None = None) -> dict:
        names = names or default_party_names(self.profile.m)

        def prof(p: Profile) -> dict:
            return {
                "m": p.m,
                "ballots": [{"parties": [names[x] for x in ballot_parties(b)], "count": c} for b, c in p.counts],
            }

        out: dict = {
            "axiom": self.axiom,
            "k": self.k,
            "profile": prof(self.profile),
            "committee": [names[x] for x in self.committee.members()],
        }
        if self.deviated_profile is not None:
            assert self.true_ballot is not None and self.deviated_committee is not None
            out["deviation"] = {
                "true_ballot": [names[x] for x in ballot_parties(self.true_ballot)],
                "profile": prof(self.deviated_profile),
                "committee": [names[x] for x in self.deviated_committee.members()],
            }
        if self.details:
            out["details"] = dict(self.details)
        return out

    def to_json(self, names: Sequence[str] | None = None) -> str:
        return json.dumps(self.to_dict(names), sort_keys=True)

    def describe(self, names: Sequence[str] | None = None) -> str:
        names = names or default_party_names(self.profile.m)
        lines = [
            f"{self.axiom} violated (k={self.k})",
            f"  A  = {self.profile.format(names)}  f(A)  = {self.committee.format(names)}",
        ]
        if self.deviated_profile is not None:
            assert self.true_ballot is not None and self.deviated_committee is not None
            lines.append(f"  A' = {self.deviated_profile.format(names)}  f(A') = {self.deviated_committee.format(names)}")
            lines.append(f"  deviator's true ballot {format_ballot(self.true_ballot, names)}")
        for key, value in self.details.items():
            lines.append(f"  {key}: {value}")
        return "\n".join(lines)


# -- exhaustive search -------------------------------------------------------------------


class _Memo:
    def __init__(self, rule: RuleOracle, domain: ProfileDomain, k: int) -> None:
        self.rule = rule
        self.domain = domain
        self.k = k
        self.cache: dict[int, Committee] = {}

    def __call__(self, i: int) -> Committee:
        W = self.cache.get(i)
        if W is None:
            W = self.rule(self.domain.profile(i), self.k)
            if W.k != self.k or W.m != self.domain.m:
                raise ValueError(f"rule returned {W} on {self.domain.profile(i)}; expected {self.k} seats over {self.domain.m} parties")
            self.cache[i] = W
        return W


def _violations_at(axiom: str, i: int, memo: _Memo) -> Iterable[ViolationWitness]:
    domain, k = memo.domain, memo.k
    W = memo(i)
    A = domain.profile(i)
    if axiom in ("strategyproofness", "sp-unrepresented"):
        for source, j in domain.neighbors(i):
            before = W.seats_in(source)
            if axiom == "sp-unrepresented" and before:
                continue
            W2 = memo(j)
            after = W2.seats_in(source)
            if after > before:
                yield ViolationWitness(axiom, k, A, W, source, domain.profile(j), W2,
                                       {"seats_before": before, "seats_after": after})
    elif axiom == "weak-representation":
        missing = [x for x in wr_parties(A, k) if W[x] < 1]
        if missing:
            yield ViolationWitness(axiom, k, A, W, details={"unrepresented_parties": missing})
    elif axiom == "wpr":
        need = wpr_requirements(A, k)
        short = {x: r for x, r in enumerate(need) if W[x] < r}
        if short:
            yield ViolationWitness(axiom, k, A, W, details={"required_seats": short})
    elif axiom == "pareto":
        bad = sorted(y for y in pareto_dominated_parties(A) if W[y] > 0)
        if bad:
            yield ViolationWitness(axiom, k, A, W, details={"seated_dominated_parties": bad})
    else:
        raise ValueError(f"unsupported axiom {axiom!r}")


def _scan(axiom: str, memo: _Memo, indices: Iterable[int], limit: int | None) -> list[tuple[int, ViolationWitness]]:
    found: list[tuple[int, ViolationWitness]] = []
    for i in indices:
        for w in _violations_at(axiom, i, memo):
            found.append((i, w))
            if limit is not None and len(found) >= limit:
                return found
    return found


_WORKER: tuple | None = None


def _worker_scan(chunk: tuple[int, int]) -> list[tuple[int, ViolationWitness]]:
    assert _WORKER is not None
    rule, axiom, domain, k, limit = _WORKER
    return _scan(axiom, _Memo(rule, domain, k), range(*chunk), limit)


def find_violations(
    rule: RuleOracle,
    axiom: str,
    spec: DomainSpec | None = None,
    profiles: Iterable[Profile] | ProfileDomain | None = None,
    limit: int | None = None,
    jobs: int = 1,
) -> list[ViolationWitness]:
    """All violations in canonical order (profile order, then deviation order), up to ``limit``.

    The domain is ``spec`` enumerated, or the explicit ``profiles``; deviations
    leaving the domain are skipped.
    """
    axiom = normalize_axiom(axiom)
    if isinstance(profiles, ProfileDomain):
        domain = profiles
    elif profiles is not None:
        plist = list(profiles)
        if spec is not None:
            plist = [p for p in plist if spec.admits(p)]
        if not plist:
            return []
        m = plist[0].m
        domain = ProfileDomain.from_profiles(m, plist)
    elif spec is not None:
        domain = ProfileDomain.from_spec(spec)
    else:
        raise ValueError("need a DomainSpec or an explicit profile list")
    if spec is not None:
        k = spec.k
    else:
        raise ValueError("committee size comes from the DomainSpec; pass spec")
    if jobs <= 1 or len(domain) < 2 * jobs:
        return [w for _, w in _scan(axiom, _Memo(rule, domain, k), range(len(domain)), limit)]

    global _WORKER
    size = -(-len(domain) // (jobs * 4))
    chunks = [(s, min(s + size, len(domain))) for s in range(0, len(domain), size)]
    _WORKER = (rule, axiom, domain, k, limit)
    try:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(jobs) as pool:
            results = pool.map(_worker_scan, chunks)
    finally:
        _WORKER = None
    merged = [item for part in results for item in part]  # chunks are contiguous and ordered
    out = [w for _, w in merged]
    return out if limit is None else out[:limit]


def check_axiom(
    rule: RuleOracle,
    axiom: str,
    spec: DomainSpec,
    profiles: Iterable[Profile] | ProfileDomain | None = None,
    collect_all: bool = False,
    jobs: int = 1,
) -> ViolationWitness | list[ViolationWitness] | None:
    """First violation in canonical order, or None.  With ``collect_all`` returns every violation."""
    if collect_all:
        return find_violations(rule, axiom, spec, profiles, None, jobs)
    found = find_violations(rule, axiom, spec, profiles, 1, jobs)
    return found[0] if found else None


# -- rule tables and lifts ------------------------------------------------------------------


@dataclass(frozen=True)
class TableRule:
    """A rule given by an explicit table over a finite domain."""

    table: Mapping[Profile, Committee]
    name: str = "table"

    def __call__(self, profile: Profile, k: int) -> Committee:
        try:
            W = self.table[profile]
        except KeyError:
            raise KeyError(f"profile {profile} is outside the rule's domain") from None
        if W.k != k:
            raise ValueError(f"table rule is defined for k={W.k}, asked for k={k}")
        return W


LIFT_KINDS = ("replicate", "clone-party", "clone-plus-seat", "wpr-extra-seat")


def _merge_clone(W: Committee, x: int, y: int) -> list[int]:
    seats = list(W.seats)
    seats[x] += seats[y]
    del seats[y]
    return seats


def lift_rule(f: RuleOracle, kind: str, ell: int = 1, x: int = 0) -> RuleOracle:
    """The rule g built from f in the corresponding induction step.

    replicate:        g(A,k) = f(A repeated ell times, k)
    clone-party:      clone x into a fresh y, run f at size k, merge y's seats into x
    clone-plus-seat:  clone x, add n/k voters approving xy, run f at size k+1,
                      merge y into x, then remove one seat of x
    wpr-extra-seat:   add n/k voters approving only x, run f at size k+1, remove one seat of x
    """
    if kind not in LIFT_KINDS:
        raise ValueError(f"unknown lift {kind!r}; expected one of {', '.join(LIFT_KINDS)}")
    if kind == "replicate" and ell < 1:
        raise ValueError("replication factor must be >= 1")

    def need_divisible(A: Profile, k: int) -> int:
        if A.n % k:
            raise ValueError(f"{kind} lift needs k | n, got n={A.n} k={k}")
        return A.n // k

    def minus_one(seats: list[int]) -> Committee:
        if seats[x] < 1:
            raise ValueError(f"underlying rule gave no seat to party {x}; the lift is undefined")
        seats[x] -= 1
        return Committee(tuple(seats))

    def g(A: Profile, k: int) -> Committee:
        if kind == "replicate":
            return f(replicate_voters(A, ell), k)
        if kind == "clone-party":
            y = A.m
            return Committee(tuple(_merge_clone(f(clone_party(A, x, y), k), x, y)))
        if kind == "clone-plus-seat":
            extra = need_divisible(A, k)
            y = A.m
            bar = add_ballots(clone_party(A, x, y), (1 << x) | (1 << y), extra)
            return minus_one(_merge_clone(f(bar, k + 1), x, y))
        extra = need_divisible(A, k)
        return minus_one(list(f(add_ballots(A, 1 << x, extra), k + 1).seats))

    return g
