from .backends import (
    BuiltinBackend,
    Capabilities,
    ExternalAnswer,
    LpTextBackend,
    ScipyMilpBackend,
    SolverBackend,
    builtin_lp_runner,
)
from .oracle import ORACLE_MAX_VARS, brute_force
from .search import Incumbent, SolveLimits, SolveResult, Status, solve

__all__ = [
    "BuiltinBackend",
    "Capabilities",
    "ExternalAnswer",
    "Incumbent",
    "LpTextBackend",
    "ORACLE_MAX_VARS",
    "ScipyMilpBackend",
    "SolveLimits",
    "SolveResult",
    "SolverBackend",
    "Status",
    "brute_force",
    "builtin_lp_runner",
    "solve",
]
