"""Area, route (SNU) and profile-guided (PGO) mapping pipelines."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import InfeasibleMapping, InvalidParameter, InvalidSolution, NoSolutionFound
from .heuristics import greedy_mapping
from .ilp import (
    IlpModel,
    MappingVars,
    ModelOptions,
    add_area_objective,
    add_route_objectives,
    build_mapping_model,
    freeze_enabled,
)
from .inventory import Inventory
from .network import Network, rational_to_json
from .solution import (
    MappingSolution,
    MetricsReport,
    assignment_values,
    canonicalize,
    decode_solution,
    solution_from_assignment,
    validate_solution,
)
from .solver import BuiltinBackend, SolveLimits, SolveResult, Status

TRACE_COLUMNS = ("stage", "work_units", "objective", "area", "total_routes", "global_routes", "weighted_packets")


@dataclass(frozen=True)
class TraceRow:
    stage: str
    work_units: int
    objective: int
    area: Fraction
    total_routes: int
    global_routes: int
    weighted_packets: int | None
    assignment: tuple[int, ...] = ()

    def as_record(self) -> dict:
        return {
            "stage": self.stage,
            "work_units": self.work_units,
            "objective": self.objective,
            "area": rational_to_json(self.area),
            "total_routes": self.total_routes,
            "global_routes": self.global_routes,
            "weighted_packets": self.weighted_packets,
        }


@dataclass
class PipelineTrace:
    """Chronological incumbents of one stage plus how the stage ended."""

    stage: str
    rows: list[TraceRow] = field(default_factory=list)
    status: Status = Status.UNKNOWN
    work_units: int = 0
    nodes: int = 0

    @property
    def best_work_units(self) -> int:
        """Work spent when the final incumbent appeared."""
        return self.rows[-1].work_units if self.rows else self.work_units

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "status": self.status.value,
            "work_units": self.work_units,
            "best_work_units": self.best_work_units,
            "nodes": self.nodes,
            "incumbents": [r.as_record() for r in self.rows],
        }

    def to_csv(self) -> str:
        return traces_to_csv([self])


def traces_to_csv(traces: Sequence[PipelineTrace]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TRACE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for t in traces:
        for r in t.rows:
            rec = r.as_record()
            rec["weighted_packets"] = "" if rec["weighted_packets"] is None else rec["weighted_packets"]
            writer.writerow(rec)
    return buf.getvalue()


def _weights_of(profile, n: int) -> list[int] | None:
    if profile is None:
        return None
    counts = getattr(profile, "counts", profile)
    w = [int(c) for c in counts]
    if len(w) < n:
        w += [0] * (n - len(w))
    if len(w) != n:
        raise InvalidParameter(f"profile has {len(w)} counts for {n} neurons")
    return w


def _assignment_from_values(values: Sequence[int], mv: MappingVars) -> list[int]:
    out = [0] * mv.neurons
    for (i, j), v in mv.x.items():
        if values[v]:
            out[i] = j
    return out


def restrict_inventory(inv: Inventory, keep: Sequence[int]) -> Inventory:
    """Sub-inventory holding instances ``keep`` (sorted), in their original order."""
    return Inventory(tuple(inv[j] for j in keep))


def _run_stage(
    stage: str,
    net: Network,
    inv: Inventory,
    keep: list[int],
    model: IlpModel,
    mv: MappingVars,
    limits: SolveLimits | None,
    warm: Sequence[int] | None,
    weights: list[int] | None,
    backend,
) -> tuple[MappingSolution, PipelineTrace, SolveResult]:
    """Solve a model built over ``keep`` and report everything in ``inv`` indices."""
    trace = PipelineTrace(stage)
    backend = backend or BuiltinBackend()

    def lift(values):
        return [keep[j] for j in _assignment_from_values(values, mv)]

    def on_incumbent(inc):
        sol = solution_from_assignment(net, inv, lift(inc.assignment), weights)
        m = sol.metrics
        trace.rows.append(TraceRow(stage, inc.work_units, inc.objective, m.area, m.total_routes,
                                   m.global_routes, m.weighted_global_packets, sol.assignment))

    result = backend.solve(model, limits or SolveLimits(), on_incumbent, warm)
    trace.status = result.status
    trace.work_units = result.work_units
    trace.nodes = result.nodes
    if result.status == Status.INFEASIBLE:
        raise InfeasibleMapping(_explain_infeasible(net, inv, stage))
    if result.assignment is None:
        raise NoSolutionFound(f"{stage}: no feasible mapping found within {result.work_units} work units")
    # guards against solver bugs on the model actually solved
    decode_solution(result, mv, net, restrict_inventory(inv, keep), weights)
    sol = solution_from_assignment(net, inv, lift(result.assignment), weights)
    issues = validate_solution(net, inv, sol, weights)
    if issues:
        raise InvalidSolution(f"{stage}: decoded mapping fails validation: {issues[0].rule}: {issues[0].detail}")
    return sol, trace, result


def _area_keep(inv: Inventory, bound: Fraction | None) -> list[int]:
    """Instances that an assignment of total area at most ``bound`` could use.

    Within a run of identical crossbars only the first floor(bound / cost)
    can be enabled by such an assignment, given ordered enabling.
    """
    if bound is None:
        return list(range(len(inv)))
    keep = []
    for run in inv.identical_runs():
        cost = inv[run.start].cost
        limit = int(bound // cost)
        keep.extend(list(run)[:limit])
    return keep


def _explain_infeasible(net: Network, inv: Inventory, stage: str) -> str:
    outputs = sum(inv.outputs)
    if outputs < net.node_count:
        return f"{stage}: {net.node_count} neurons but only {outputs} crossbar outputs in the inventory"
    return (
        f"{stage}: no placement satisfies the per-crossbar input/output capacities "
        f"({len(inv)} crossbars, {outputs} outputs, {sum(inv.inputs)} inputs)"
    )


def optimize_area(
    net: Network,
    inv: Inventory,
    limits: SolveLimits | None = None,
    *,
    options: ModelOptions | None = None,
    warm_start: str | Sequence[int] | None = "greedy",
    trim: bool = True,
    backend=None,
) -> tuple[MappingSolution, PipelineTrace]:
    """Minimize the total cost of crossbars that host neurons.

    ``warm_start="greedy"`` seeds the search with the best-fit-decreasing
    packing; pass a neuron-to-crossbar assignment to seed with it instead, or
    ``None`` to start cold. With ``trim`` (and symmetry breaking) instances
    that no assignment cheaper than the warm start could enable are left out
    of the model.
    """
    opts = options or ModelOptions()
    if isinstance(warm_start, str):
        if warm_start != "greedy":
            raise InvalidParameter(f"unknown warm start {warm_start!r}")
        warm_start = greedy_mapping(net, inv)
    seed = None
    keep = list(range(len(inv)))
    if warm_start is not None:
        seed = solution_from_assignment(net, inv, warm_start)
        if opts.symmetry_break:
            seed = canonicalize(seed, net, inv)
            if trim:
                keep = _area_keep(inv, seed.metrics.area)
    sub = restrict_inventory(inv, keep)
    model, mv = build_mapping_model(net, sub, opts)
    add_area_objective(model, mv, sub)
    warm = None
    if seed is not None:
        where = {j: idx for idx, j in enumerate(keep)}
        warm = assignment_values(model, mv, net, [where[j] for j in seed.assignment])
    sol, trace, _ = _run_stage("area", net, inv, keep, model, mv, limits, warm, None, backend)
    return sol, trace


def _frozen_stage(stage, net, inv, base, limits, weights, options, backend, restrict=True):
    opts = options or ModelOptions()
    if opts.symmetry_break:
        base = canonicalize(base, net, inv, weights)
    if restrict:
        # y is fixed to 0 outside the enabled set, so those crossbars are presolved away
        keep = list(base.enabled)
        sub = restrict_inventory(inv, keep)
        model, mv = build_mapping_model(net, sub, opts)
        add_route_objectives(model, mv, "global_routes", weights)
        where = {j: idx for idx, j in enumerate(keep)}
        warm = assignment_values(model, mv, net, [where[j] for j in base.assignment])
    else:
        keep = list(range(len(inv)))
        model, mv = build_mapping_model(net, inv, opts)
        add_route_objectives(model, mv, "global_routes", weights)
        freeze_enabled(model, mv, base.enabled)
        warm = assignment_values(model, mv, net, base.assignment)
    sol, trace, _ = _run_stage(stage, net, inv, keep, model, mv, limits, warm, weights, backend)
    return sol, trace


def optimize_snu(
    net: Network,
    inv: Inventory,
    area_solution: MappingSolution,
    limits: SolveLimits | None = None,
    *,
    options: ModelOptions | None = None,
    backend=None,
) -> tuple[MappingSolution, PipelineTrace]:
    """Minimize inter-crossbar routes using only the crossbars ``area_solution`` enables."""
    return _frozen_stage("snu", net, inv, area_solution, limits, None, options, backend)


def optimize_pgo(
    net: Network,
    inv: Inventory,
    profile,
    base: MappingSolution,
    limits: SolveLimits | None = None,
    *,
    options: ModelOptions | None = None,
    backend=None,
) -> tuple[MappingSolution, PipelineTrace]:
    """Minimize spike-count-weighted inter-crossbar packets on ``base``'s crossbars.

    ``profile`` is a spike profile or a plain per-neuron count list; missing
    trailing neurons count as silent.
    """
    weights = _weights_of(profile, net.node_count)
    return _frozen_stage("pgo", net, inv, base, limits, weights, options, backend)


def evaluate(net: Network, inv: Inventory, solution: MappingSolution, profile=None, label: str = "") -> MetricsReport:
    """Recompute every reported number from the placement alone."""
    weights = _weights_of(profile, net.node_count)
    fresh = solution_from_assignment(net, inv, solution.assignment, weights)
    issues = validate_solution(net, inv, fresh, weights)
    if issues:
        raise InvalidSolution("; ".join(f"{v.rule}: {v.detail}" for v in issues))
    usage: dict[str, int] = {}
    for j in fresh.enabled:
        usage[inv[j].label] = usage.get(inv[j].label, 0) + 1
    m = fresh.metrics
    return MetricsReport(
        label=label,
        area=m.area,
        total_routes=m.total_routes,
        local_routes=m.local_routes,
        global_routes=m.global_routes,
        weighted_global_packets=m.weighted_global_packets,
        enabled_count=len(fresh.enabled),
        # every neuron takes one bit-line, so area >= N * cheapest cost per output
        min_area_bound=net.node_count * min((k.cost / k.outputs for k in inv), default=Fraction(0)),
        # plot marker: one neuron per smallest crossbar (not a bound)
        single_neuron_area=net.node_count * min((Fraction(k.cost) for k in inv), default=Fraction(0)),
        kind_usage=usage,
    )


def dump_json(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"
