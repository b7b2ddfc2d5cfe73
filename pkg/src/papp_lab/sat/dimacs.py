"""DIMACS CNF, group-CNF and variable-map sidecar writers."""

from __future__ import annotations

import io
import json
import os
from typing import IO, Iterator

import numpy as np

from ..core import format_ballot
from .encoding import CnfInstance, CnfVariableMap

CHUNK_LITERALS = 1 << 22


def _chunks(literals: np.ndarray) -> Iterator[tuple[int, int]]:
    """Split points at clause boundaries, about CHUNK_LITERALS literals apart."""
    ends = np.flatnonzero(literals == 0)
    start = 0
    while start < len(literals):
        want = start + CHUNK_LITERALS
        if want >= len(literals):
            stop = len(literals)
        else:
            stop = int(ends[np.searchsorted(ends, want)]) + 1
        yield start, stop
        start = stop


def _clause_text(literals: np.ndarray, prefixes: list[str] | None = None) -> str:
    text = " ".join(map(str, literals.tolist()))
    # every clause ends in " 0"; turn each terminator into a line break
    text = (text + " ").replace(" 0 ", " 0\n")
    if prefixes is None:
        return text
    lines = text.splitlines(keepends=True)
    return "".join(p + line for p, line in zip(prefixes, lines))


def _open(target: str | os.PathLike | IO[str]) -> tuple[IO[str], bool]:
    if isinstance(target, (str, os.PathLike)):
        return open(target, "w", encoding="ascii", newline="\n"), True
    return target, False


def write_dimacs(inst: CnfInstance, target: str | os.PathLike | IO[str]) -> None:
    out, close = _open(target)
    try:
        out.write(f"p cnf {inst.num_vars} {inst.num_clauses}\n")
        for start, stop in _chunks(inst.literals):
            out.write(_clause_text(inst.literals[start:stop]))
    finally:
        if close:
            out.close()


def write_gcnf(inst: CnfInstance, target: str | os.PathLike | IO[str]) -> None:
    """Group CNF: ``p gcnf V C G`` and a ``{g}`` prefix per clause; group 0 holds the hard clauses."""
    groups = inst.groups if inst.groups is not None else np.zeros(inst.num_clauses, dtype=np.int32)
    out, close = _open(target)
    try:
        out.write(f"p gcnf {inst.num_vars} {inst.num_clauses} {int(groups.max()) if len(groups) else 0}\n")
        clause_no = 0
        for start, stop in _chunks(inst.literals):
            block = inst.literals[start:stop]
            count = int(np.count_nonzero(block == 0))
            prefixes = [f"{{{g}}} " for g in groups[clause_no:clause_no + count].tolist()]
            out.write(_clause_text(block, prefixes))
            clause_no += count
    finally:
        if close:
            out.close()


def dimacs_text(inst: CnfInstance) -> str:
    buf = io.StringIO()
    write_dimacs(inst, buf)
    return buf.getvalue()


def varmap_to_json(varmap: CnfVariableMap) -> str:
    names = "abcdefghijklmnopqrstuvwxyz"[: varmap.domain.m]
    variables = []
    for v, profile, committee in varmap.items():
        variables.append([v, [format_ballot(b, names) for b in profile.ballots], [names[x] for x in committee.members()]])
    obj = {
        "n": varmap.domain.profile(0).n if len(varmap.domain) else 0,
        "m": varmap.domain.m,
        "k": varmap.k,
        "num_vars": varmap.num_vars,
        "variables": variables,
    }
    return json.dumps(obj, separators=(",", ":")) + "\n"


def write_varmap(varmap: CnfVariableMap, target: str | os.PathLike | IO[str]) -> None:
    out, close = _open(target)
    try:
        out.write(varmap_to_json(varmap))
    finally:
        if close:
            out.close()


def read_dimacs(path: str | os.PathLike) -> CnfInstance:
    """Parse a plain DIMACS file (comments allowed)."""
    with open(path, encoding="ascii") as fh:
        header = None
        body = []
        for line in fh:
            if line.startswith("c") or not line.strip():
                continue
            if line.startswith("p"):
                header = line.split()
                continue
            body.append(line)
    if header is None or header[1] != "cnf":
        raise ValueError(f"{path}: missing 'p cnf' header")
    num_vars, num_clauses = int(header[2]), int(header[3])
    literals = np.array(" ".join(body).split(), dtype=np.int32)
    inst = CnfInstance(num_vars, literals)
    if inst.num_clauses != num_clauses:
        raise ValueError(f"{path}: header announces {num_clauses} clauses, found {inst.num_clauses}")
    return inst
