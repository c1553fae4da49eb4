"""Solver backends: the built-in search plus seams for external solvers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

from ..errors import ParseError
from ..ilp import IlpModel, dump_lp, parse_lp
from .search import Incumbent, SolveLimits, SolveResult, Status, solve


@dataclass(frozen=True)
class Capabilities:
    name: str
    exact: bool
    streams_incumbents: bool
    deterministic_work: bool


class SolverBackend(Protocol):
    capabilities: Capabilities

    def solve(self, model: IlpModel, limits: SolveLimits, on_incumbent=None, warm_start=None) -> SolveResult:
        ...


class BuiltinBackend:
    capabilities = Capabilities("builtin", exact=True, streams_incumbents=True, deterministic_work=True)

    def solve(self, model, limits, on_incumbent=None, warm_start=None):
        return solve(model, limits, on_incumbent, warm_start)


@dataclass
class ExternalAnswer:
    """What an external solver hands back: status plus values keyed by variable name."""

    status: Status
    values: dict[str, int] | None = None
    objective: int | None = None


class LpTextBackend:
    """Feed the LP text dump to ``runner`` and map its answer back onto the model.

    ``runner`` receives the dump and the limits and returns an
    :class:`ExternalAnswer`. Values are re-checked against the original model,
    so a misbehaving runner cannot smuggle in an infeasible point.
    """

    capabilities = Capabilities("lp-text", exact=True, streams_incumbents=False, deterministic_work=False)

    def __init__(self, runner: Callable[[str, SolveLimits], ExternalAnswer]):
        self.runner = runner

    def solve(self, model, limits, on_incumbent=None, warm_start=None):
        text = dump_lp(model)
        answer = self.runner(text, limits)
        if answer.values is None:
            if answer.status in (Status.OPTIMAL, Status.FEASIBLE):
                raise ParseError("external solver reported a solution but returned no values")
            return SolveResult(answer.status, None, None, 0)
        names = [model.var_name(v) for v in range(model.num_vars)]
        try:
            values = tuple(int(answer.values[name]) for name in names)
        except KeyError as exc:
            raise ParseError(f"external solver omitted variable {exc}") from exc
        if not model.is_feasible(values):
            raise ParseError("external solver returned an infeasible assignment")
        obj = model.objective_value(values)
        inc = Incumbent(0, obj, values)
        if on_incumbent is not None:
            on_incumbent(inc)
        return SolveResult(answer.status, values, obj, 0, [inc])


def builtin_lp_runner(text: str, limits: SolveLimits) -> ExternalAnswer:
    """Reference runner that parses the dump and solves it with the built-in search."""
    model = parse_lp(text)
    result = solve(model, limits)
    if result.assignment is None:
        return ExternalAnswer(result.status)
    values = {model.var_name(v): x for v, x in enumerate(result.assignment)}
    return ExternalAnswer(result.status, values, result.objective)


class ScipyMilpBackend:
    """HiGHS through ``scipy.optimize.milp``; no incumbent stream, no work units."""

    capabilities = Capabilities("scipy-milp", exact=True, streams_incumbents=False, deterministic_work=False)

    def solve(self, model, limits, on_incumbent=None, warm_start=None):
        import numpy as np
        from scipy.optimize import Bounds, LinearConstraint, milp
        from scipy.sparse import lil_matrix

        n = model.num_vars
        c = np.zeros(n)
        for v, coef in model.objective.items():
            c[v] = coef
        cons = []
        if model.constraints:
            a = lil_matrix((len(model.constraints), n))
            lo = np.full(len(model.constraints), -np.inf)
            hi = np.full(len(model.constraints), np.inf)
            for r, con in enumerate(model.constraints):
                for coef, v in con.terms:
                    a[r, v] = coef
                if con.lower is not None:
                    lo[r] = con.lower
                if con.upper is not None:
                    hi[r] = con.upper
            cons.append(LinearConstraint(a.tocsr(), lo, hi))
        options = {}
        if limits.max_wall_seconds is not None:
            options["time_limit"] = limits.max_wall_seconds
        res = milp(c, constraints=cons, integrality=np.ones(n), bounds=Bounds(0, 1), options=options)
        if res.x is None:
            status = Status.INFEASIBLE if res.status == 2 else Status.UNKNOWN
            return SolveResult(status, None, None, 0)
        values = tuple(int(round(v)) for v in res.x)
        obj = model.objective_value(values)
        status = Status.OPTIMAL if res.status == 0 else Status.FEASIBLE
        inc = Incumbent(0, obj, values)
        if on_incumbent is not None:
            on_incumbent(inc)
        return SolveResult(status, values, obj, 0, [inc])
