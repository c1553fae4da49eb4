"""Depth-first branch and bound for pure 0/1 linear models.

Propagation keeps, for every constraint, the minimum and maximum activity
reachable under the current partial assignment and fixes any free variable
whose other value would push the activity out of bounds. Clauses are just
constraints with unit coefficients, so unit propagation falls out of the
same rule.

When the model carries mapping tags (``x``/``s``/``y``/``b`` variables and
``assign``/``out_cap``/``in_cap`` rows) the search branches on placements:
it takes the lowest-numbered unplaced unit and tries its crossbars cheapest
first, using a one-step capacity lookahead. Other models branch on the
lowest-numbered free variable.

Work units are deterministic: one per search node, one per constraint
propagation pass and one per eight placement candidates scored.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence

from .._util import gc_paused
from ..errors import InvalidParameter
from ..ilp import IlpModel

INF = float("inf")
UNBOUNDED_SEARCH_LIMIT = 64


def _term_key(term):
    return (-abs(term[0]), term[1])


class Status(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNKNOWN = "unknown"


@dataclass
class SolveLimits:
    """Stopping rules. Limits are checked before each node expansion, so the
    reported work can exceed ``max_work_units`` by the cost of one expansion.
    """

    max_work_units: int | None = 1_000_000
    max_wall_seconds: float | None = None
    target_objective: int | None = None


@dataclass(frozen=True)
class Incumbent:
    work_units: int
    objective: int
    assignment: tuple[int, ...]


@dataclass
class SolveResult:
    status: Status
    assignment: tuple[int, ...] | None
    objective: int | None
    work_units: int
    incumbents: list[Incumbent] = field(default_factory=list)
    nodes: int = 0

    @property
    def has_solution(self) -> bool:
        return self.assignment is not None

    @property
    def last_improvement_work(self) -> int:
        """Work units spent when the final incumbent was found."""
        return self.incumbents[-1].work_units if self.incumbents else self.work_units


IncumbentCallback = Callable[[Incumbent], None]


class _Placement:
    """Per-model lookup tables for placement-aware branching."""

    def __init__(self, model: IlpModel):
        tags = model.var_tags
        index = {t: v for v, t in enumerate(tags)}
        rows: dict[int, int] = {}
        out_cap: dict[int, int] = {}
        in_cap: dict[int, int] = {}
        implied: dict[int, list[int]] = {}
        for c, con in enumerate(model.constraints):
            tag = con.tag
            if not tag:
                continue
            kind = tag[0]
            if kind == "assign":
                rows[tag[1]] = c
            elif kind == "out_cap":
                out_cap[tag[1]] = c
            elif kind == "in_cap":
                in_cap[tag[1]] = c
            elif kind == "axon_lower" and len(con.terms) == 2:
                (a1, v1), (a2, v2) = con.terms
                if a1 > 0 > a2:
                    implied.setdefault(v2, []).append(v1)
                elif a2 > 0 > a1:
                    implied.setdefault(v1, []).append(v2)
        self.ok = bool(rows)
        if not self.ok:
            return
        self.units = [rows[u] for u in sorted(rows)]
        cons = model.constraints
        self.row_vars = {c: [v for _, v in cons[c].terms] for c in self.units}
        self.crossbar: dict[int, int] = {}
        self.yvar: dict[int, int | None] = {}
        self.out_row: dict[int, tuple[int, int] | None] = {}
        self.in_row: dict[int, tuple[int, int, list[tuple[int, int]]] | None] = {}
        self.partner_b: dict[int, int] = {}
        self.b_x: dict[int, int] = {}
        out_coef = {c: {v: a for a, v in cons[c].terms} for c in out_cap.values()}
        in_coef = {c: {v: a for a, v in cons[c].terms} for c in in_cap.values()}
        no_implied: list[int] = []
        per_j: dict[int, tuple] = {}
        for c in self.units:
            for v in self.row_vars[c]:
                tag = tags[v]
                if tag[0] != "x" or len(tag) != 3:
                    continue
                j = tag[2]
                info = per_j.get(j)
                if info is None:
                    info = (index.get(("y", j)), out_cap.get(j), in_cap.get(j))
                    per_j[j] = info
                yv, oc, ic = info
                self.crossbar[v] = j
                self.yvar[v] = yv
                self.out_row[v] = None if oc is None else (oc, out_coef[oc].get(v, 0))
                if ic is None:
                    self.in_row[v] = None
                else:
                    cm = in_coef[ic]
                    imp = implied.get(v, no_implied)
                    self.in_row[v] = (ic, cm.get(v, 0), [(sv, cm.get(sv, 0)) for sv in imp] if imp else no_implied)
        self.implied = implied
        # most constrained units first: the dive then behaves like best-fit decreasing
        self.units.sort(key=lambda c: -len(implied.get(self.row_vars[c][0], no_implied)) if self.row_vars[c] else 0)
        for v, t in enumerate(tags):
            if t[0] == "b" and len(t) == 3:
                sv = index.get(("s", t[1], t[2]))
                xv = index.get(("x", t[1], t[2]))
                if sv is not None:
                    self.partner_b[sv] = v
                if xv is not None:
                    self.b_x[v] = xv


class _Search:
    def __init__(self, model: IlpModel, limits: SolveLimits, on_incumbent, hint):
        self.model = model
        self.limits = limits
        self.on_incumbent = on_incumbent
        n = model.num_vars
        self.n = n
        self.val = [-1] * n
        self.trail: list[int] = []
        self.trail_delta: list[int] = []
        self.work = 0
        self.nodes = 0
        self.best_obj: int | None = None
        self.best: tuple[int, ...] | None = None
        self.incumbents: list[Incumbent] = []
        self.queue: deque[int] = deque()

        cons = model.constraints
        m = len(cons)
        self.c_vars: list[list[int]] = []
        self.c_coefs: list[list[int]] = []
        self.lo: list[float] = [0] * m
        self.hi: list[float] = [0] * m
        self.minact = [0] * m
        self.maxact = [0] * m
        self.maxabs = [0] * m
        self.inq = [False] * m
        occ: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        self.trivially_infeasible = False
        c_vars, c_coefs, lo_l, hi_l = self.c_vars, self.c_coefs, self.lo, self.hi
        minact, maxact, maxabs = self.minact, self.maxact, self.maxabs
        for c, con in enumerate(cons):
            terms = con.terms
            big = 0
            small = None
            mn = mx = 0
            for a, v in terms:
                aa = a if a > 0 else -a
                if aa > big:
                    big = aa
                if small is None or aa < small:
                    small = aa
                if a < 0:
                    mn += a
                else:
                    mx += a
                occ[v].append((c, a))
            if small is not None and small != big:
                terms = sorted(terms, key=_term_key)
            c_vars.append([v for _, v in terms])
            c_coefs.append([a for a, _ in terms])
            lo_l[c] = -INF if con.lower is None else con.lower
            hi_l[c] = INF if con.upper is None else con.upper
            minact[c] = mn
            maxact[c] = mx
            maxabs[c] = big
            if mn > hi_l[c] or mx < lo_l[c]:
                self.trivially_infeasible = True
        self.occ = occ

        self.objc = [0] * n
        for v, c in model.objective.items():
            self.objc[v] = c
        self.place = _Placement(model)
        self.partner_of_b: dict[int, int] = {}
        if self.place.ok:
            for s, b in self.place.partner_b.items():
                if self.objc[b] < 0 and self.objc[s] > 0:
                    self.partner_of_b[b] = s
        self.partner_s_to_b = {s: b for b, s in self.partner_of_b.items()}
        # optimistic contribution of the current partial assignment
        self.lb = sum(c for v, c in enumerate(self.objc) if c < 0 and v not in self.partner_of_b)

        self.hint: dict[int, int] = {}
        if hint is not None:
            items = hint.items() if isinstance(hint, Mapping) else enumerate(hint)
            self.hint = {int(v): int(x) for v, x in items if x in (0, 1)}
        self.order = self._generic_order()
        self.deadline = None
        if limits.max_wall_seconds is not None:
            self.deadline = time.monotonic() + limits.max_wall_seconds

    def _generic_order(self) -> list[int]:
        rank = {"y": 0, "x": 1, "s": 2, "b": 3}
        tags = self.model.var_tags
        return sorted(range(self.n), key=lambda v: (rank.get(tags[v][0], 4), v))

    # assignment and undo -------------------------------------------------

    def _delta_lb(self, v: int, value: int) -> int:
        c = self.objc[v]
        if c == 0:
            b = self.partner_s_to_b.get(v)
            return 0 if b is None else self._s_effect(b, value)
        if c > 0:
            d = c if value == 1 else 0
            b = self.partner_s_to_b.get(v)
            if b is not None:
                d += self._s_effect(b, value)
            return d
        s = self.partner_of_b.get(v)
        if s is None:
            return 0 if value == 1 else -c
        before = c if self.val[s] == 1 else 0
        after = c if value == 1 else 0
        return after - before

    def _s_effect(self, b: int, s_value: int) -> int:
        if self.val[b] != -1:
            return 0
        return self.objc[b] if s_value == 1 else 0

    def assign(self, v: int, value: int) -> bool:
        d = self._delta_lb(v, value)
        self.lb += d
        self.val[v] = value
        self.trail.append(v)
        self.trail_delta.append(d)
        ok = True
        minact, maxact, lo, hi, maxabs, inq, queue = (
            self.minact, self.maxact, self.lo, self.hi, self.maxabs, self.inq, self.queue)
        for c, a in self.occ[v]:
            if (a > 0) == (value == 1):
                mn = minact[c] + (a if a > 0 else -a)
                minact[c] = mn
                slack = hi[c] - mn
            else:
                mx = maxact[c] - (a if a > 0 else -a)
                maxact[c] = mx
                slack = mx - lo[c]
            if slack < 0:
                ok = False
            elif slack < maxabs[c] and not inq[c]:
                inq[c] = True
                queue.append(c)
        return ok

    def undo_to(self, size: int) -> None:
        trail, deltas, val, occ = self.trail, self.trail_delta, self.val, self.occ
        minact, maxact = self.minact, self.maxact
        while len(trail) > size:
            v = trail.pop()
            self.lb -= deltas.pop()
            value = val[v]
            val[v] = -1
            for c, a in occ[v]:
                if (a > 0) == (value == 1):
                    minact[c] -= a if a > 0 else -a
                else:
                    maxact[c] += a if a > 0 else -a

    def _clear_queue(self) -> None:
        for c in self.queue:
            self.inq[c] = False
        self.queue.clear()

    def propagate(self) -> bool:
        queue, inq, val = self.queue, self.inq, self.val
        minact, maxact, lo, hi = self.minact, self.maxact, self.lo, self.hi
        c_vars, c_coefs = self.c_vars, self.c_coefs
        while queue:
            c = queue.popleft()
            inq[c] = False
            self.work += 1
            sh = hi[c] - minact[c]
            sl = maxact[c] - lo[c]
            if sh < 0 or sl < 0:
                self._clear_queue()
                return False
            coefs = c_coefs[c]
            for idx, v in enumerate(c_vars[c]):
                a = coefs[idx]
                aa = a if a > 0 else -a
                if aa <= sh and aa <= sl:
                    break
                if val[v] != -1:
                    continue
                if a > 0:
                    value = 0 if aa > sh else 1
                else:
                    value = 1 if aa > sh else 0
                if not self.assign(v, value):
                    self._clear_queue()
                    return False
                sh = hi[c] - minact[c]
                sl = maxact[c] - lo[c]
                if sh < 0 or sl < 0:
                    self._clear_queue()
                    return False
        return True

    # branching -----------------------------------------------------------

    def _placement_choice(self):
        """Return (var, first, second), "prune", or None when every unit is placed."""
        pl = self.place
        val, minact, hi = self.val, self.minact, self.hi
        objc = self.objc
        for row in pl.units:
            if minact[row] >= 1:
                continue
            best_key = None
            best_var = -1
            cheapest = None
            scored = 0
            for v in pl.row_vars[row]:
                if val[v] != -1:
                    continue
                scored += 1
                feasible = True
                cost = 0
                y = pl.yvar.get(v)
                if y is not None and val[y] == -1:
                    cost += objc[y]
                orow = pl.out_row.get(v)
                if orow is not None and minact[orow[0]] + orow[1] > hi[orow[0]]:
                    feasible = False
                irow = pl.in_row.get(v)
                new_in = 0
                if irow is not None:
                    ic, xcoef, slist = irow
                    new_in = xcoef
                    for s, scoef in slist:
                        if val[s] == -1:
                            new_in += scoef
                    if minact[ic] + new_in > hi[ic]:
                        feasible = False
                for s in pl.implied.get(v, ()):
                    if val[s] != -1:
                        continue
                    cs = objc[s]
                    if cs <= 0:
                        continue
                    b = self.partner_s_to_b.get(s)
                    if b is None or (val[pl.b_x.get(b, b)] == 0):
                        cost += cs
                if feasible and (cheapest is None or cost < cheapest):
                    cheapest = cost
                key = (
                    0 if feasible else 1,
                    0 if self.hint.get(v) == 1 else 1,
                    cost,
                    new_in,
                    pl.crossbar.get(v, 0),
                )
                if best_key is None or key < best_key:
                    best_key = key
                    best_var = v
            self.work += (scored + 7) // 8
            if cheapest is None:
                return "prune"
            if self.best_obj is not None and self.lb + cheapest >= self.best_obj:
                return "prune"
            return best_var, 1, 0
        return None

    def _generic_choice(self):
        val = self.val
        for v in self.order:
            if val[v] == -1:
                h = self.hint.get(v)
                if h is None:
                    h = 0 if self.objc[v] >= 0 else 1
                return v, h, 1 - h
        return None

    def choose(self):
        if self.best_obj is not None and self.lb >= self.best_obj:
            return "prune"
        if self.place.ok:
            choice = self._placement_choice()
            if choice is not None:
                return choice
        return self._generic_choice()

    # driver --------------------------------------------------------------

    def _out_of_budget(self) -> bool:
        lim = self.limits.max_work_units
        if lim is not None and self.work >= lim:
            return True
        if self.deadline is not None and time.monotonic() >= self.deadline:
            return True
        return False

    def _reached_target(self) -> bool:
        t = self.limits.target_objective
        return t is not None and self.best_obj is not None and self.best_obj <= t

    def record(self, values: tuple[int, ...], objective: int) -> None:
        self.best = values
        self.best_obj = objective
        inc = Incumbent(self.work, objective, values)
        self.incumbents.append(inc)
        if self.on_incumbent is not None:
            self.on_incumbent(inc)

    def seed(self, values: Sequence[int]) -> None:
        values = tuple(int(x) for x in values)
        if self.model.is_feasible(values):
            self.record(values, self.model.objective_value(values))

    def run(self) -> SolveResult:
        self.work += 1
        if self.trivially_infeasible:
            return self._finish(complete=True, root_lb=None)
        root_ok = True
        for c in range(len(self.c_vars)):
            lo_gap = self.maxact[c] - self.lo[c]
            hi_gap = self.hi[c] - self.minact[c]
            if (lo_gap < self.maxabs[c] or hi_gap < self.maxabs[c]) and not self.inq[c]:
                self.inq[c] = True
                self.queue.append(c)
        root_ok = self.propagate()
        if not root_ok:
            return self._finish(complete=True, root_lb=None)
        root_lb = self.lb
        if self.best_obj is not None and self.best_obj <= root_lb:
            return self._finish(complete=True, root_lb=root_lb)

        stack: list[list] = []
        descend = True
        while True:
            if descend:
                if self._out_of_budget() or self._reached_target():
                    return self._finish(complete=False, root_lb=root_lb)
                self.nodes += 1
                self.work += 1
                choice = self.choose()
                if choice is None:
                    objective = self.lb
                    if self.best_obj is None or objective < self.best_obj:
                        self.record(tuple(self.val), objective)
                        if objective <= root_lb:
                            return self._finish(complete=True, root_lb=root_lb)
                    descend = False
                elif choice == "prune":
                    descend = False
                else:
                    v, first, second = choice
                    stack.append([v, second, len(self.trail)])
                    if not (self.assign(v, first) and self.propagate()):
                        self._clear_queue()
                        descend = False
                continue
            # backtrack to the deepest frame with an untried value
            resumed = False
            while stack:
                frame = stack[-1]
                self.undo_to(frame[2])
                alt = frame[1]
                if alt is None:
                    stack.pop()
                    continue
                frame[1] = None
                self.work += 1
                if self.assign(frame[0], alt) and self.propagate():
                    resumed = True
                    break
                self._clear_queue()
            if not resumed:
                return self._finish(complete=True, root_lb=root_lb)
            descend = True

    def _finish(self, complete: bool, root_lb) -> SolveResult:
        if self.best is None:
            status = Status.INFEASIBLE if complete else Status.UNKNOWN
        elif complete or (root_lb is not None and self.best_obj <= root_lb):
            status = Status.OPTIMAL
        else:
            status = Status.FEASIBLE
        return SolveResult(
            status=status,
            assignment=self.best,
            objective=self.best_obj,
            work_units=self.work,
            incumbents=list(self.incumbents),
            nodes=self.nodes,
        )


def solve(
    model: IlpModel,
    limits: SolveLimits | None = None,
    on_incumbent: IncumbentCallback | None = None,
    warm_start: Sequence[int] | Mapping[int, int] | None = None,
) -> SolveResult:
    """Minimize ``model.objective`` over 0/1 assignments satisfying every constraint.

    ``warm_start`` may be a full assignment (used as the first incumbent when
    feasible, and as a branching hint) or a partial ``{var: value}`` hint.
    Running out of budget never raises: the result is ``FEASIBLE`` when an
    incumbent exists and ``UNKNOWN`` otherwise.
    """
    limits = limits or SolveLimits()
    if (
        limits.max_work_units is None
        and limits.max_wall_seconds is None
        and model.num_vars > UNBOUNDED_SEARCH_LIMIT
    ):
        raise InvalidParameter(
            f"model has {model.num_vars} variables; set a work or time limit "
            f"(exhaustive search is allowed only up to {UNBOUNDED_SEARCH_LIMIT})"
        )
    with gc_paused():
        search = _Search(model, limits, on_incumbent, warm_start)
        if warm_start is not None and not isinstance(warm_start, Mapping) and len(warm_start) == model.num_vars:
            search.seed(warm_start)
        return search.run()
