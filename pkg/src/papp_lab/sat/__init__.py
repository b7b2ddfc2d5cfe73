"""CNF encoding, serialization and external solving."""

from .appendix_c import encode_appendix_c, load_profiles
from .dimacs import read_dimacs, write_dimacs, write_gcnf, write_varmap
from .encoding import CnfInstance, CnfVariableMap, EncodeOptions, encode, feasible_committees
from .solver import SolveResult, SolverError, assignment_from_rule, check_model, decode_model, default_solver_command, solve

__all__ = [
    "CnfInstance",
    "CnfVariableMap",
    "EncodeOptions",
    "SolveResult",
    "SolverError",
    "assignment_from_rule",
    "check_model",
    "decode_model",
    "default_solver_command",
    "encode",
    "encode_appendix_c",
    "feasible_committees",
    "load_profiles",
    "read_dimacs",
    "solve",
    "write_dimacs",
    "write_gcnf",
    "write_varmap",
]
