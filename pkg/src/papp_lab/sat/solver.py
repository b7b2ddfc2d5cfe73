"""Running an external SAT solver and decoding its model into a rule table."""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from ..axioms import TableRule
from ..core import Committee, Profile
from .dimacs import write_dimacs
from .encoding import CnfInstance, CnfVariableMap

SOLVER_ENV = "PAPP_LAB_SOLVER"

# (executable, template) in order of preference
KNOWN_SOLVERS = (
    ("glucose", "glucose -model -verb=0 {cnf}"),
    ("kissat", "kissat -q {cnf}"),
    ("cadical", "cadical -q {cnf}"),
    ("minisat", "minisat {cnf} {out}"),
)

SAT_EXIT = 10
UNSAT_EXIT = 20


class SolverError(RuntimeError):
    """The solver could not be started or produced output we cannot interpret."""


@dataclass(frozen=True)
class SolveResult:
    status: str  # "sat", "unsat" or "unknown"
    model: tuple[int, ...] | None
    returncode: int
    seconds: float
    command: str
    output: str = ""

    @property
    def true_variables(self) -> frozenset[int]:
        return frozenset(v for v in self.model or () if v > 0)


def default_solver_command() -> str | None:
    env = os.environ.get(SOLVER_ENV)
    if env:
        return env
    for exe, template in KNOWN_SOLVERS:
        if shutil.which(exe):
            return template
    return None


def _parse_model(text: str, minisat_style: bool) -> tuple[int, ...]:
    values: list[int] = []
    terminated = False
    for line in text.splitlines():
        if minisat_style:
            if line.strip() in ("SAT", "UNSAT", "INDET"):
                continue
            tokens = line.split()
        elif line.startswith("v"):
            tokens = line.split()[1:]
        else:
            continue
        for tok in tokens:
            try:
                lit = int(tok)
            except ValueError:
                raise SolverError(f"malformed model token {tok!r}") from None
            if lit == 0:
                terminated = True
                continue
            values.append(lit)
    if not terminated:
        raise SolverError("model is not 0-terminated")
    return tuple(values)


def solve(
    inst: CnfInstance | str | os.PathLike,
    solver_cmd: str | None = None,
    timeout: float | None = None,
) -> SolveResult:
    """Run ``solver_cmd`` (a template with ``{cnf}`` and optionally ``{out}``) on the instance.

    Exit code 10 means SAT and the model is read from ``v`` lines on stdout,
    or from the ``{out}`` file when the template has one; 20 means UNSAT;
    anything else is reported as unknown together with the captured output.
    """
    template = solver_cmd or default_solver_command()
    if template is None:
        raise SolverError(f"no SAT solver found; install kissat or set {SOLVER_ENV}")
    with tempfile.TemporaryDirectory(prefix="papp-lab-") as tmp:
        if isinstance(inst, CnfInstance):
            cnf_path = Path(tmp) / "instance.cnf"
            write_dimacs(inst, cnf_path)
        else:
            cnf_path = Path(inst)
            if not cnf_path.exists():
                raise SolverError(f"{cnf_path}: no such file")
        out_path = Path(tmp) / "model.txt"
        uses_out = "{out}" in template
        if "{cnf}" not in template:
            template = template + " {cnf}"
        argv = [tok.replace("{cnf}", str(cnf_path)).replace("{out}", str(out_path)) for tok in shlex.split(template)]
        command = shlex.join(argv)
        start = time.perf_counter()
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except FileNotFoundError as exc:
            raise SolverError(f"cannot start solver: {exc}") from None
        except subprocess.TimeoutExpired as exc:
            out = exc.stdout.decode() if isinstance(exc.stdout, bytes) else (exc.stdout or "")
            return SolveResult("unknown", None, -1, time.perf_counter() - start, command, out[-4000:])
        seconds = time.perf_counter() - start
        if proc.returncode == SAT_EXIT:
            if uses_out:
                if not out_path.exists():
                    raise SolverError("solver reported SAT but wrote no model file")
                model = _parse_model(out_path.read_text(), minisat_style=True)
            else:
                model = _parse_model(proc.stdout, minisat_style=False)
            return SolveResult("sat", model, proc.returncode, seconds, command)
        if proc.returncode == UNSAT_EXIT:
            return SolveResult("unsat", None, proc.returncode, seconds, command)
        tail = (proc.stdout + proc.stderr)[-4000:]
        return SolveResult("unknown", None, proc.returncode, seconds, command, tail)


def decode_model(model: Iterable[int], varmap: CnfVariableMap) -> TableRule:
    """Rule table from a model; every profile must have exactly one true variable."""
    true = {v for v in model if v > 0}
    table: dict[Profile, Committee] = {}
    for i in range(len(varmap.domain)):
        chosen = [v for v in varmap.variables_of(i) if v in true]
        if len(chosen) != 1:
            profile = varmap.domain.profile(i)
            raise ValueError(f"{len(chosen)} committees selected at profile {profile}; expected exactly one")
        profile, committee = varmap.decode(chosen[0])
        table[profile] = committee
    return TableRule(table, "sat-model")


def assignment_from_rule(rule, varmap: CnfVariableMap) -> tuple[int, ...]:
    """The model that encodes ``rule`` on the map's domain (negative literals for the rest)."""
    lits = []
    for i in range(len(varmap.domain)):
        profile = varmap.domain.profile(i)
        chosen = rule(profile, varmap.k)
        picked = varmap.var(i, chosen)
        lits.extend(v if v == picked else -v for v in varmap.variables_of(i))
    return tuple(lits)


def check_model(inst: CnfInstance, model: Iterable[int]) -> bool:
    """True if the assignment satisfies every clause (unassigned variables count as false)."""
    true = np.zeros(inst.num_vars + 1, dtype=bool)
    for v in model:
        if v > 0:
            true[v] = True
    lits = inst.literals
    if not len(lits):
        return True
    ends = np.flatnonzero(lits == 0)
    sat_lit = np.where(lits > 0, true[np.abs(lits)], ~true[np.abs(lits)])
    sat_lit[ends] = False
    clause_id = np.cumsum(np.r_[0, (lits == 0)[:-1]])
    satisfied = np.zeros(len(ends), dtype=bool)
    np.logical_or.at(satisfied, clause_id, sat_lit)
    return bool(satisfied.all())
