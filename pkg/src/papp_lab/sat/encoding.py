"""Propositional encoding of anonymous rules satisfying representation and strategyproofness.

Variable x_{A,W} is true iff the rule picks committee W at profile A.  For
every profile there is one at-least-one clause and pairwise at-most-one
clauses; for every in-domain deviation A -> A' of a voter with true ballot B
and feasible V (at A), W (at A') where the voter strictly benefits, the
clause (-x_{A,V} | -x_{A',W}) forbids the pair.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence

import numpy as np

from ..axioms import clever_wr_context, pareto_dominated_parties, wpr_requirements, wr_parties
from ..core import (
    Ballot,
    Committee,
    DomainSpec,
    Profile,
    ProfileDomain,
    enumerate_committees,
    parse_ballot,
)

REPRESENTATION_AXIOMS = ("wr", "wpr")
FEASIBILITY_FILTERS = ("plain", "cleverWR")
SP_MODES = ("cardinal", "subset", "subset-free")
SP_INTERSECTIONS = ("multiset", "support")

DESIGNATED_PROFILE = ("a", "ab", "b", "c", "cd", "d")
DESIGNATED_COMMITTEES = ((0, 0, 2), (0, 1, 2))  # [a,a,c], [a,b,c]


@dataclass(frozen=True)
class EncodeOptions:
    """Switches for the encoding.

    ``sp_mode`` selects when a deviation counts as beneficial:

    cardinal     the true ballot gains seats, W(B) > V(B)
    subset       the outcome restricted to B grows strictly, and the
                 reported ballot is a proper subset of B
    subset-free  the same growth condition without restricting the report

    ``sp_intersection`` fixes what "the outcome restricted to B" means for the
    two set-based modes: ``multiset`` compares seat counts party by party
    (V(x) <= W(x) for all x in B, not all equal); ``support`` compares the sets
    of parties in B holding at least one seat.
    """

    representation_axiom: str = "wr"
    feasibility_filter: str = "plain"
    symmetry_breaking: bool = False
    pareto: bool = False
    sp_mode: str = "cardinal"
    sp_intersection: str = "multiset"
    profile_restriction: tuple[Profile, ...] | None = None
    strategyproofness: bool = True

    def __post_init__(self) -> None:
        if self.representation_axiom not in REPRESENTATION_AXIOMS:
            raise ValueError(f"representation axiom must be one of {REPRESENTATION_AXIOMS}")
        if self.feasibility_filter not in FEASIBILITY_FILTERS:
            raise ValueError(f"feasibility filter must be one of {FEASIBILITY_FILTERS}")
        if self.sp_mode not in SP_MODES:
            raise ValueError(f"sp mode must be one of {SP_MODES}")
        if self.sp_intersection not in SP_INTERSECTIONS:
            raise ValueError(f"sp intersection must be one of {SP_INTERSECTIONS}")
        if self.profile_restriction is not None:
            object.__setattr__(self, "profile_restriction", tuple(self.profile_restriction))


def designated_profile(m: int = 4) -> Profile:
    return Profile.from_ballots(m, (parse_ballot(b) for b in DESIGNATED_PROFILE))


def feasible_committees(profile: Profile, k: int, opts: EncodeOptions) -> tuple[int, ...]:
    """Indices (into enumerate_committees(m, k)) of the committees allowed at ``profile``."""
    committees = enumerate_committees(profile.m, k)
    if opts.representation_axiom == "wpr":
        need = wpr_requirements(profile, k)
        keep = [all(s >= r for s, r in zip(W.seats, need)) for W in committees]
    else:
        must = wr_parties(profile, k)
        keep = [all(W[x] >= 1 for x in must) for W in committees]
    if opts.feasibility_filter == "cleverWR":
        ctx = clever_wr_context(profile, k)
        keep = [ok and ctx.admits(W) for ok, W in zip(keep, committees)]
    if opts.pareto:
        dominated = pareto_dominated_parties(profile)
        keep = [ok and not any(W[y] for y in dominated) for ok, W in zip(keep, committees)]
    return tuple(i for i, ok in enumerate(keep) if ok)


@dataclass
class CnfVariableMap:
    """Dense numbering of x_{A,W}: profiles in domain order, committees in tie-break order."""

    domain: ProfileDomain
    k: int
    feasible: list[tuple[int, ...]]
    offsets: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        sizes = np.array([len(f) for f in self.feasible], dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self._committees = enumerate_committees(self.domain.m, self.k)

    @property
    def num_vars(self) -> int:
        return int(self.offsets[-1])

    @property
    def committees(self) -> tuple[Committee, ...]:
        return self._committees

    def variables_of(self, i: int) -> range:
        return range(int(self.offsets[i]) + 1, int(self.offsets[i + 1]) + 1)

    def var(self, profile: Profile | int, committee: Committee) -> int:
        i = profile if isinstance(profile, int) else self.domain.index_of(profile)
        c = self._committees.index(committee)
        try:
            pos = self.feasible[i].index(c)
        except ValueError:
            raise KeyError(f"{committee} is not feasible at profile #{i}") from None
        return int(self.offsets[i]) + 1 + pos

    def decode(self, v: int) -> tuple[Profile, Committee]:
        if not 1 <= v <= self.num_vars:
            raise KeyError(f"variable {v} outside 1..{self.num_vars}")
        i = int(np.searchsorted(self.offsets, v, side="left")) - 1
        pos = v - 1 - int(self.offsets[i])
        return self.domain.profile(i), self._committees[self.feasible[i][pos]]

    def items(self) -> Iterator[tuple[int, Profile, Committee]]:
        for i, f in enumerate(self.feasible):
            base = int(self.offsets[i])
            for pos, c in enumerate(f):
                yield base + 1 + pos, self.domain.profile(i), self._committees[c]


@dataclass
class CnfInstance:
    """Clauses as one flat int32 array of literals with 0 terminators.

    ``groups`` (if present) labels every clause: 0 for the exactly-one
    constraints, and one id per ordered profile pair (A -> A') for the
    strategyproofness clauses, numbered in emission order.
    """

    num_vars: int
    literals: np.ndarray
    groups: np.ndarray | None = None
    varmap: CnfVariableMap | None = None
    stats: dict = field(default_factory=dict)

    @property
    def num_clauses(self) -> int:
        return int(np.count_nonzero(self.literals == 0))

    @property
    def num_groups(self) -> int:
        return 0 if self.groups is None or not len(self.groups) else int(self.groups.max())

    @classmethod
    def from_clauses(
        cls, num_vars: int, clauses: Iterable[Sequence[int]], groups: Sequence[int] | None = None
    ) -> CnfInstance:
        flat: list[int] = []
        for clause in clauses:
            if not clause:
                raise ValueError("empty clause")
            if any(lit == 0 or abs(lit) > num_vars for lit in clause):
                raise ValueError(f"literal out of range in clause {list(clause)}")
            flat.extend(clause)
            flat.append(0)
        g = None if groups is None else np.asarray(groups, dtype=np.int32)
        inst = cls(num_vars, np.asarray(flat, dtype=np.int32), g)
        if g is not None and len(g) != inst.num_clauses:
            raise ValueError("one group label per clause required")
        return inst

    def clauses(self) -> Iterator[list[int]]:
        ends = np.flatnonzero(self.literals == 0)
        start = 0
        for end in ends.tolist():
            yield self.literals[start:end].tolist()
            start = end + 1


# -- generation ----------------------------------------------------------------


class _Tables:
    """Per-(m, k) lookup tables: seats of each committee in each ballot, and seated-party masks."""

    def __init__(self, m: int, k: int) -> None:
        committees = enumerate_committees(m, k)
        self.seats = np.array([[W.seats_in(b) for b in range(1 << m)] for W in committees], dtype=np.int16)
        self.support = np.array([W.support_mask() for W in committees], dtype=np.int32)
        self.seat_vectors = np.array([W.seats for W in committees], dtype=np.int16).reshape(len(committees), m)
        self.columns = [np.array([x for x in range(m) if b >> x & 1], dtype=np.int64) for b in range(1 << m)]


def _pair_matrix(
    opts: EncodeOptions, tables: _Tables, fi: np.ndarray, fj: np.ndarray, source: Ballot, target: Ballot
) -> np.ndarray | None:
    """Boolean matrix M[v, w]: is committee fj[w] at A' better for the deviator than fi[v] at A."""
    if opts.sp_mode == "cardinal":
        before = tables.seats[fi, source]
        after = tables.seats[fj, source]
        return after[None, :] > before[:, None]
    if opts.sp_mode == "subset" and not (target & source == target):
        return None
    if opts.sp_intersection == "multiset":
        cols = tables.columns[source]
        before = tables.seat_vectors[fi][:, cols][:, None, :]
        after = tables.seat_vectors[fj][:, cols][None, :, :]
        return (before <= after).all(axis=2) & (before != after).any(axis=2)
    before = tables.support[fi] & source
    after = tables.support[fj] & source
    # before is a proper subset of after
    return ((before[:, None] & after[None, :]) == before[:, None]) & (before[:, None] != after[None, :])


def _generate_block(
    domain: ProfileDomain,
    varmap: CnfVariableMap,
    opts: EncodeOptions,
    tables: _Tables,
    start: int,
    stop: int,
) -> tuple[np.ndarray, np.ndarray, dict]:
    """Clauses for source profiles start..stop-1: ALO, AMO, then SP clauses out of each profile.

    Group ids for SP clauses are local (1-based within the block) and shifted on merge.
    """
    chunks: list[np.ndarray] = []
    gchunks: list[np.ndarray] = []
    feas = [np.asarray(f, dtype=np.int64) for f in varmap.feasible]
    offsets = varmap.offsets
    group = 0
    alo = amo = sp = pairs = 0
    for i in range(start, stop):
        vi = np.arange(offsets[i] + 1, offsets[i + 1] + 1, dtype=np.int32)
        t = len(vi)
        if not t:
            raise ValueError(f"no feasible committee at {domain.profile(i)}; the encoding would contain an empty clause")
        chunks.append(np.append(vi, 0).astype(np.int32))
        gchunks.append(np.zeros(1, dtype=np.int32))
        alo += 1
        if t > 1:
            a, b = np.triu_indices(t, 1)
            block = np.zeros((len(a), 3), dtype=np.int32)
            block[:, 0] = -vi[a]
            block[:, 1] = -vi[b]
            chunks.append(block.ravel())
            gchunks.append(np.zeros(len(a), dtype=np.int32))
            amo += len(a)
        if not opts.strategyproofness:
            continue
        for source, target, j in domain.moves(i):
            pairs += 1
            M = _pair_matrix(opts, tables, feas[i], feas[j], source, target)
            if M is None:
                continue
            I, J = np.nonzero(M)
            if not len(I):
                continue
            group += 1
            block = np.zeros((len(I), 3), dtype=np.int32)
            block[:, 0] = -(offsets[i] + 1 + I)
            block[:, 1] = -(offsets[j] + 1 + J)
            chunks.append(block.ravel())
            gchunks.append(np.full(len(I), group, dtype=np.int32))
            sp += len(I)
    lits = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int32)
    groups = np.concatenate(gchunks) if gchunks else np.zeros(0, dtype=np.int32)
    return lits, groups, {"alo": alo, "amo": amo, "sp": sp, "pairs": pairs, "sp_groups": group}


_WORKER: tuple | None = None


def _worker(chunk: tuple[int, int]) -> tuple[np.ndarray, np.ndarray, dict]:
    assert _WORKER is not None
    domain, varmap, opts, tables = _WORKER
    return _generate_block(domain, varmap, opts, tables, *chunk)


def build_domain(spec: DomainSpec, opts: EncodeOptions) -> ProfileDomain:
    if opts.profile_restriction is None:
        return ProfileDomain.from_spec(spec)
    profiles = list(opts.profile_restriction)
    for p in profiles:
        if p.m != spec.m or p.n != spec.n:
            raise ValueError(f"restricted profile {p} does not match n={spec.n}, m={spec.m}")
    return ProfileDomain.from_profiles(spec.m, profiles)


def encode(spec: DomainSpec, opts: EncodeOptions | None = None, jobs: int = 1) -> CnfInstance:
    opts = opts or EncodeOptions()
    domain = build_domain(spec, opts)
    k = spec.k
    feasible = [feasible_committees(domain.profile(i), k, opts) for i in range(len(domain))]
    if opts.symmetry_breaking:
        target = designated_profile(spec.m) if spec.m == 4 else None
        if target is None or k != 3 or target not in domain:
            raise ValueError("symmetry breaking needs the profile {a, ab, b, c, cd, d} (n=6, m=4, k=3) in the domain")
        committees = enumerate_committees(spec.m, k)
        allowed = {committees.index(Committee.from_parties(spec.m, c)) for c in DESIGNATED_COMMITTEES}
        i = domain.index_of(target)
        feasible[i] = tuple(c for c in feasible[i] if c in allowed)
    varmap = CnfVariableMap(domain, k, feasible)
    tables = _Tables(spec.m, k)

    if jobs <= 1 or len(domain) < 2 * jobs:
        parts = [_generate_block(domain, varmap, opts, tables, 0, len(domain))]
    else:
        global _WORKER
        size = -(-len(domain) // (jobs * 4))
        chunks = [(s, min(s + size, len(domain))) for s in range(0, len(domain), size)]
        _WORKER = (domain, varmap, opts, tables)
        try:
            with multiprocessing.get_context("fork").Pool(jobs) as pool:
                parts = pool.map(_worker, chunks)
        finally:
            _WORKER = None

    stats = {"profiles": len(domain), "variables": varmap.num_vars, "alo": 0, "amo": 0, "sp": 0, "pairs": 0}
    group_shift = 0
    lits, groups = [], []
    for part_lits, part_groups, part_stats in parts:
        lits.append(part_lits)
        shifted = part_groups.copy()
        shifted[shifted > 0] += group_shift
        groups.append(shifted)
        group_shift += part_stats["sp_groups"]
        for key in ("alo", "amo", "sp", "pairs"):
            stats[key] += part_stats[key]
    stats["clauses"] = stats["alo"] + stats["amo"] + stats["sp"]
    inst = CnfInstance(
        varmap.num_vars,
        np.concatenate(lits) if lits else np.zeros(0, dtype=np.int32),
        np.concatenate(groups) if groups else np.zeros(0, dtype=np.int32),
        varmap,
        stats,
    )
    return inst


def with_restriction(opts: EncodeOptions, profiles: Iterable[Profile]) -> EncodeOptions:
    return replace(opts, profile_restriction=tuple(profiles))
