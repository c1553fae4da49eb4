"""Decoded mappings, their metrics, and an independent validator."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import InvalidAssignment, InvalidSolution, NegativeWeight
from .ilp import MappingVars
from .inventory import Inventory
from .network import Network, rational_to_json


@dataclass(frozen=True)
class Metrics:
    area: Fraction
    total_routes: int
    local_routes: int
    global_routes: int
    weighted_global_packets: int | None = None

    def to_dict(self) -> dict:
        return {
            "area": rational_to_json(self.area),
            "total_routes": self.total_routes,
            "local_routes": self.local_routes,
            "global_routes": self.global_routes,
            "weighted_global_packets": self.weighted_global_packets,
        }


@dataclass(frozen=True)
class MappingSolution:
    """Neuron placement plus everything derivable from it.

    ``assignment[i]`` is the crossbar hosting neuron ``i``; ``axon_sets[j]``
    holds the sources that need a word-line on ``j``; ``enabled`` lists the
    crossbars hosting at least one neuron.
    """

    assignment: tuple[int, ...]
    crossbars: int
    enabled: tuple[int, ...]
    axon_sets: Mapping[int, tuple[int, ...]]
    metrics: Metrics

    def members(self, j: int) -> list[int]:
        return [i for i, a in enumerate(self.assignment) if a == j]

    def groups(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {j: [] for j in self.enabled}
        for i, j in enumerate(self.assignment):
            out[j].append(i)
        return out

    def to_dict(self, inv: Inventory | None = None) -> dict:
        doc = {
            "assignment": list(self.assignment),
            "crossbars": self.crossbars,
            "enabled": list(self.enabled),
            "axon_sets": {str(j): list(self.axon_sets[j]) for j in self.enabled},
            "metrics": self.metrics.to_dict(),
        }
        if inv is not None:
            doc["kinds"] = {str(j): inv[j].label for j in self.enabled}
        return doc


def axon_sets_from_assignment(net: Network, assignment: Sequence[int]) -> dict[int, tuple[int, ...]]:
    """Sources with at least one successor on each crossbar (shared axons counted once)."""
    sets: dict[int, set[int]] = {}
    for e in net.edges:
        sets.setdefault(assignment[e.post], set()).add(e.pre)
    for j in set(assignment):
        sets.setdefault(j, set())
    return {j: tuple(sorted(v)) for j, v in sorted(sets.items())}


def _weights(weights, n: int) -> list[int] | None:
    if weights is None:
        return None
    w = [int(v) for v in weights]
    if len(w) != n:
        raise InvalidSolution(f"expected {n} weights, got {len(w)}")
    if any(v < 0 for v in w):
        raise NegativeWeight("profile weights must be non-negative")
    return w


def compute_metrics(net: Network, inv: Inventory, assignment: Sequence[int], weights=None) -> Metrics:
    axons = axon_sets_from_assignment(net, assignment)
    enabled = sorted(set(assignment))
    area = sum((inv[j].cost for j in enabled), Fraction(0))
    total = sum(len(v) for v in axons.values())
    local = sum(1 for j, srcs in axons.items() for k in srcs if assignment[k] == j)
    w = _weights(weights, net.node_count)
    weighted = None
    if w is not None:
        weighted = sum(w[k] for j, srcs in axons.items() for k in srcs if assignment[k] != j)
    return Metrics(area, total, local, total - local, weighted)


def solution_from_assignment(net: Network, inv: Inventory, assignment: Sequence[int], weights=None) -> MappingSolution:
    assignment = tuple(int(a) for a in assignment)
    if len(assignment) != net.node_count:
        raise InvalidSolution(f"assignment covers {len(assignment)} of {net.node_count} neurons")
    for i, j in enumerate(assignment):
        if not 0 <= j < len(inv):
            raise InvalidSolution(f"neuron {i} placed on missing crossbar {j}")
    axons = axon_sets_from_assignment(net, assignment)
    return MappingSolution(
        assignment=assignment,
        crossbars=len(inv),
        enabled=tuple(sorted(set(assignment))),
        axon_sets=axons,
        metrics=compute_metrics(net, inv, assignment, weights),
    )


def decode_solution(result, mv: MappingVars, net: Network, inv: Inventory, weights=None) -> MappingSolution:
    """Turn raw solver values into a mapping, refusing illegal placements.

    ``s`` and ``b`` are recomputed from ``x`` so the axon sets always equal
    the exact closure of the placement.
    """
    values = result.assignment if hasattr(result, "assignment") else result
    if values is None:
        raise InvalidAssignment(f"no assignment to decode (status {getattr(result, 'status', None)})")
    n, J = net.node_count, len(inv)
    assignment = []
    for i in range(n):
        hosts = [j for j in range(J) if values[mv.x[i, j]] == 1]
        if len(hosts) != 1:
            raise InvalidAssignment(f"neuron {i} is placed on {len(hosts)} crossbars")
        assignment.append(hosts[0])
    sol = solution_from_assignment(net, inv, assignment, weights)
    for j, members in sol.groups().items():
        if len(members) > inv[j].outputs:
            raise InvalidAssignment(f"crossbar {j} hosts {len(members)} neurons but has {inv[j].outputs} outputs")
        if values[mv.y[j]] != 1:
            raise InvalidAssignment(f"crossbar {j} hosts neurons but is not enabled")
        if len(sol.axon_sets[j]) > inv[j].inputs:
            raise InvalidAssignment(f"crossbar {j} needs {len(sol.axon_sets[j])} inputs but has {inv[j].inputs}")
    return sol


@dataclass
class Violation:
    rule: str
    detail: str


def validate_solution(net: Network, inv: Inventory, sol: MappingSolution, weights=None) -> list[Violation]:
    """Check a mapping from first principles; an empty list means it is legal.

    Rebuilds per-crossbar loads and word-line sets from the edge list without
    using any helper that produced ``sol``.
    """
    issues: list[Violation] = []
    n, J = net.node_count, len(inv)
    if len(sol.assignment) != n:
        return [Violation("placement", f"{len(sol.assignment)} entries for {n} neurons")]
    outputs = [0] * J
    inputs: list[set[int]] = [set() for _ in range(J)]
    for i, j in enumerate(sol.assignment):
        if not (isinstance(j, int) and 0 <= j < J):
            issues.append(Violation("placement", f"neuron {i} on invalid crossbar {j!r}"))
            continue
        outputs[j] += 1
    if issues:
        return issues
    for e in net.edges:
        inputs[sol.assignment[e.post]].add(e.pre)
    used = [j for j in range(J) if outputs[j] > 0]
    if tuple(used) != tuple(sol.enabled):
        issues.append(Violation("enabled", f"enabled {list(sol.enabled)} but hosting {used}"))
    for j in range(J):
        if outputs[j] > inv[j].outputs:
            issues.append(Violation("outputs", f"crossbar {j}: {outputs[j]} > {inv[j].outputs}"))
        if len(inputs[j]) > inv[j].inputs:
            issues.append(Violation("inputs", f"crossbar {j}: {len(inputs[j])} > {inv[j].inputs}"))
        if outputs[j] == 0 and inputs[j]:
            issues.append(Violation("inputs", f"disabled crossbar {j} carries word-lines"))
    for j in used:
        claimed = set(sol.axon_sets.get(j, ()))
        if claimed != inputs[j]:
            issues.append(Violation("axon_closure", f"crossbar {j}: claimed {sorted(claimed)} actual {sorted(inputs[j])}"))
    extra = set(sol.axon_sets) - set(used)
    if any(sol.axon_sets[j] for j in extra):
        issues.append(Violation("axon_closure", f"word-lines on unused crossbars {sorted(extra)}"))
    total = sum(len(inputs[j]) for j in range(J))
    local = sum(1 for j in range(J) for k in inputs[j] if sol.assignment[k] == j)
    area = sum((inv[j].cost for j in used), Fraction(0))
    m = sol.metrics
    if m.area != area:
        issues.append(Violation("metrics", f"area {m.area} != {area}"))
    if (m.total_routes, m.local_routes, m.global_routes) != (total, local, total - local):
        issues.append(Violation("metrics", f"routes {(m.total_routes, m.local_routes, m.global_routes)} != {(total, local, total - local)}"))
    if weights is not None:
        w = list(weights)
        packets = sum(w[k] for j in range(J) for k in inputs[j] if sol.assignment[k] != j)
        if m.weighted_global_packets != packets:
            issues.append(Violation("metrics", f"weighted packets {m.weighted_global_packets} != {packets}"))
    return issues


def raw_violations(model, values: Sequence[int], mv: MappingVars, net: Network) -> list[str]:
    """Compare raw solver ``s``/``b`` values with their exact definitions."""
    problems = [f"constraint {c}" for c in model.violations(values)]
    for (k, j), s in mv.s.items():
        want = int(any(values[mv.x[e.post, j]] for e in net.out_edges[k]))
        if values[s] != want:
            problems.append(f"s[{k},{j}]={values[s]} but closure gives {want}")
    for (k, j), b in mv.b.items():
        want = values[mv.x[k, j]] & values[mv.s[k, j]]
        if values[b] != want:
            problems.append(f"b[{k},{j}]={values[b]} but x AND s gives {want}")
    return problems


def assignment_values(model, mv: MappingVars, net: Network, assignment: Sequence[int]) -> list[int]:
    """Full 0/1 vector for the model that realizes ``assignment`` exactly."""
    values = [0] * model.num_vars
    for i, j in enumerate(assignment):
        values[mv.x[i, j]] = 1
        values[mv.y[j]] = 1
    for e in net.edges:
        values[mv.s[e.pre, assignment[e.post]]] = 1
    for (k, j), b in mv.b.items():
        values[b] = values[mv.x[k, j]] & values[mv.s[k, j]]
    return values


def canonicalize(sol: MappingSolution, net: Network, inv: Inventory, weights=None) -> MappingSolution:
    """Relabel instances inside each run of identical crossbars so used ones come first.

    Metrics are unchanged; the result satisfies the ordered-enable rule used
    for symmetry breaking.
    """
    relabel = {}
    used = set(sol.enabled)
    for run in inv.identical_runs():
        hosts = [j for j in run if j in used]
        for new, old in zip(run, hosts):
            relabel[old] = new
    return solution_from_assignment(net, inv, [relabel[j] for j in sol.assignment], weights)


@dataclass
class MetricsReport:
    label: str
    area: Fraction
    total_routes: int
    local_routes: int
    global_routes: int
    weighted_global_packets: int | None
    enabled_count: int
    min_area_bound: Fraction
    single_neuron_area: Fraction = Fraction(0)
    kind_usage: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "area": rational_to_json(self.area),
            "total_routes": self.total_routes,
            "local_routes": self.local_routes,
            "global_routes": self.global_routes,
            "weighted_global_packets": self.weighted_global_packets,
            "enabled_count": self.enabled_count,
            "min_area_bound": rational_to_json(self.min_area_bound),
            "single_neuron_area": rational_to_json(self.single_neuron_area),
            "kind_usage": dict(sorted(self.kind_usage.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"
