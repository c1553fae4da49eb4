"""MCC bin-packing baseline that sums input demands across packed groups.

Neurons are grouped into MCCs (minimally connected components) and groups are
bin-packed as units. A crossbar's consumed inputs are the *sum* of its MCCs'
input demands, so a source feeding two MCCs on one crossbar is charged twice.
That over-count is deliberate: the baseline exists to show what axon sharing
buys. Reported metrics are always recomputed with proper deduplication.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import InfeasibleMapping, InfeasibleMcc, InvalidParameter, NoSolutionFound
from .ilp import IlpModel, integer_costs
from .inventory import Inventory
from .network import Network
from .optimizer import PipelineTrace, TraceRow
from .solution import MappingSolution, solution_from_assignment
from .solver import BuiltinBackend, SolveLimits, Status

POLICIES = ("crossbar", "connected")


@dataclass(frozen=True)
class Mcc:
    members: tuple[int, ...]
    output_demand: int
    input_demand: int


def mcc_from_members(net: Network, members: Sequence[int]) -> Mcc:
    """Demands of a neuron group: one output per member, one input per distinct source."""
    members = tuple(sorted(members))
    if not members:
        raise InvalidParameter("an MCC needs at least one member")
    sources = set()
    for i in members:
        sources.update(net.predecessors[i])
    return Mcc(members, len(members), len(sources))


def _components(net: Network, members: list[int]) -> list[list[int]]:
    inside = set(members)
    parent = {i: i for i in members}

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for e in net.edges:
        if e.pre in inside and e.post in inside:
            a, b = find(e.pre), find(e.post)
            if a != b:
                parent[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for i in members:
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def form_mccs(net: Network, initial, policy: str = "crossbar") -> list[Mcc]:
    """Group neurons into MCCs.

    ``initial="singletons"`` makes one MCC per neuron. Otherwise ``initial``
    is a mapping and ``policy`` decides the grouping: ``"crossbar"`` keeps
    each crossbar's neurons together as one MCC, ``"connected"`` splits them
    further into undirected connected components of the induced subgraph.
    """
    if isinstance(initial, str):
        if initial != "singletons":
            raise InvalidParameter(f"unknown MCC initial policy {initial!r}")
        return [mcc_from_members(net, [i]) for i in range(net.node_count)]
    if policy not in POLICIES:
        raise InvalidParameter(f"unknown MCC policy {policy!r}; choose from {POLICIES}")
    mccs = []
    for j, members in sorted(initial.groups().items()):
        groups = [members] if policy == "crossbar" else _components(net, members)
        mccs.extend(mcc_from_members(net, g) for g in groups)
    mccs.sort(key=lambda m: m.members)
    return mccs


def flawed_input_demand(mccs: Sequence[Mcc], placement: Sequence[int]) -> dict[int, int]:
    """Inputs the baseline charges each crossbar: the plain sum over its MCCs."""
    out: dict[int, int] = {}
    for m, j in zip(mccs, placement):
        out[j] = out.get(j, 0) + m.input_demand
    return out


def _check_fit(mccs: Sequence[Mcc], inv: Inventory) -> None:
    for idx, m in enumerate(mccs):
        if not any(k.inputs >= m.input_demand and k.outputs >= m.output_demand for k in inv):
            raise InfeasibleMcc(idx, m.input_demand, m.output_demand)


def build_packing_model(mccs: Sequence[Mcc], inv: Inventory, symmetry_break: bool = True):
    """Bin-packing ILP over MCC units with summed input demand and area objective."""
    model = IlpModel(name="mcc-packing")
    J = len(inv)
    x: dict[tuple[int, int], int] = {}
    for m, mcc in enumerate(mccs):
        for j in range(J):
            if inv[j].inputs >= mcc.input_demand and inv[j].outputs >= mcc.output_demand:
                x[m, j] = model.add_var(("x", m, j))
    y = {j: model.add_var(("y", j)) for j in range(J)}
    for m in range(len(mccs)):
        model.add_row(tuple((1, x[m, j]) for j in range(J) if (m, j) in x), 1, 1, ("assign", m))
    for j in range(J):
        outs = tuple((mccs[m].output_demand, x[m, j]) for m in range(len(mccs)) if (m, j) in x)
        model.add_row(outs + ((-inv[j].outputs, y[j]),), None, 0, ("out_cap", j))
        ins = tuple((mccs[m].input_demand, x[m, j]) for m in range(len(mccs)) if (m, j) in x and mccs[m].input_demand)
        model.add_row(ins + ((-inv[j].inputs, y[j]),), None, 0, ("in_cap", j))
    if symmetry_break:
        for run in inv.identical_runs():
            for j in list(run)[:-1]:
                model.add_row(((1, y[j]), (-1, y[j + 1])), 0, None, ("symmetry", j))
    costs, scale = integer_costs(inv.costs)
    model.set_objective({y[j]: costs[j] for j in range(J)}, scale=scale)
    return model, x, y


def _canonical_bins(bins: Sequence[int], inv: Inventory) -> list[int]:
    """Relabel crossbars within identical runs so used instances come first."""
    used = set(bins)
    relabel = {}
    for run in inv.identical_runs():
        for new, old in zip(run, [j for j in run if j in used]):
            relabel[old] = new
    return [relabel[j] for j in bins]


def pack_mccs_detailed(
    net: Network,
    mccs: Sequence[Mcc],
    inv: Inventory,
    limits: SolveLimits | None = None,
    warm_start: Sequence[int] | None = None,
    backend=None,
    stage: str = "baseline-mcc",
    work_offset: int = 0,
) -> tuple[MappingSolution, PipelineTrace, list[int]]:
    """Pack MCCs and return the neuron mapping, the incumbent trace and the MCC placement."""
    _check_fit(mccs, inv)
    model, x, y = build_packing_model(mccs, inv)
    warm = None
    if warm_start is not None:
        placement = _canonical_bins(list(warm_start), inv)
        values = [0] * model.num_vars
        ok = True
        for m, j in enumerate(placement):
            if (m, j) not in x:
                ok = False
                break
            values[x[m, j]] = 1
            values[y[j]] = 1
        warm = values if ok else None
    trace = PipelineTrace(stage)

    def neuron_assignment(values) -> list[int]:
        out = [0] * net.node_count
        for (m, j), v in x.items():
            if values[v]:
                for i in mccs[m].members:
                    out[i] = j
        return out

    def on_incumbent(inc):
        sol = solution_from_assignment(net, inv, neuron_assignment(inc.assignment))
        mt = sol.metrics
        trace.rows.append(TraceRow(stage, work_offset + inc.work_units, inc.objective, mt.area,
                                   mt.total_routes, mt.global_routes, None, sol.assignment))

    result = (backend or BuiltinBackend()).solve(model, limits or SolveLimits(), on_incumbent, warm)
    trace.status = result.status
    trace.work_units = result.work_units
    trace.nodes = result.nodes
    if result.status == Status.INFEASIBLE:
        raise InfeasibleMapping(f"{stage}: the MCCs cannot be packed when input demands are summed")
    if result.assignment is None:
        raise NoSolutionFound(f"{stage}: no packing found within {result.work_units} work units")
    placement = [0] * len(mccs)
    for (m, j), v in x.items():
        if result.assignment[v]:
            placement[m] = j
    return solution_from_assignment(net, inv, neuron_assignment(result.assignment)), trace, placement


def pack_mccs(net: Network, mccs: Sequence[Mcc], inv: Inventory, limits: SolveLimits | None = None,
              warm_start: Sequence[int] | None = None) -> MappingSolution:
    """Minimum-area packing of MCC units; metrics of the result use true axon sharing."""
    return pack_mccs_detailed(net, mccs, inv, limits, warm_start)[0]


def _largest_first(inv: Inventory) -> list[list[int]]:
    """Instance index groups per geometry, biggest crossbar first."""
    groups: dict[tuple, list[int]] = {}
    for j, k in enumerate(inv):
        groups.setdefault(k.shape, []).append(j)
    order = sorted(groups, key=lambda s: (-(s[0] * s[1]), -s[0], s[2]))
    return [groups[s] for s in order]


def first_fit_singletons(net: Network, inv: Inventory) -> MappingSolution:
    """First-fit decreasing by fan-in into the largest kind, charging summed fan-ins.

    When the largest kind's instances run out the packing continues into the
    next largest kind.
    """
    _check_fit([mcc_from_members(net, [i]) for i in range(net.node_count)], inv)
    order = sorted(range(net.node_count), key=lambda i: (-net.fan_in(i), i))
    pool = [j for group in _largest_first(inv) for j in group]
    load_in: dict[int, int] = {}
    load_out: dict[int, int] = {}
    opened: list[int] = []
    nxt = 0
    assignment = [0] * net.node_count
    for i in order:
        need = net.fan_in(i)
        for j in opened:
            if load_out[j] < inv[j].outputs and load_in[j] + need <= inv[j].inputs:
                break
        else:
            while nxt < len(pool) and inv[pool[nxt]].inputs < need:
                nxt += 1
            if nxt >= len(pool):
                raise InfeasibleMapping("first-fit start ran out of crossbars")
            j = pool[nxt]
            nxt += 1
            opened.append(j)
            load_in[j] = 0
            load_out[j] = 0
        load_in[j] += need
        load_out[j] += 1
        assignment[i] = j
    return solution_from_assignment(net, inv, assignment)


@dataclass(frozen=True)
class RoundRecord:
    round: int
    area: Fraction
    work_units: int
    mcc_count: int


def iterate_spikehard(
    net: Network,
    inv: Inventory,
    limits: SolveLimits | None = None,
    policy: str = "crossbar",
    history: list | None = None,
    trace: PipelineTrace | None = None,
) -> tuple[MappingSolution, int]:
    """Re-form MCCs from the last packing and re-pack until area stops improving.

    All rounds draw on one shared work budget. ``history`` (if given) receives
    a :class:`RoundRecord` per round and ``trace`` the concatenated incumbents.
    """
    limits = limits or SolveLimits()
    current = first_fit_singletons(net, inv)
    spent = 0
    rounds = 0
    seen: set[tuple] = set()
    while rounds < max(1, net.node_count):
        mccs = form_mccs(net, current, policy)
        key = tuple(m.members for m in mccs)
        remaining = None if limits.max_work_units is None else max(1, limits.max_work_units - spent)
        sub = SolveLimits(remaining, limits.max_wall_seconds, None)
        placement = [current.assignment[m.members[0]] for m in mccs]
        packed, tr, _ = pack_mccs_detailed(net, mccs, inv, sub, placement, work_offset=spent)
        spent += tr.work_units
        rounds += 1
        if trace is not None:
            trace.rows.extend(tr.rows)
            trace.work_units = spent
            trace.status = tr.status
            trace.nodes += tr.nodes
        if history is not None:
            history.append(RoundRecord(rounds, packed.metrics.area, spent, len(mccs)))
        improved = packed.metrics.area < current.metrics.area
        if improved:
            current = packed
        if not improved or key in seen:
            break
        seen.add(key)
        if limits.max_work_units is not None and spent >= limits.max_work_units:
            break
    return current, rounds
