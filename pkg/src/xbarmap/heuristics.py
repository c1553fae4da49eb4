"""Greedy axon-aware packings used as initial incumbents."""

from __future__ import annotations

from fractions import Fraction

from .inventory import Inventory
from .network import Network


class _Bin:
    __slots__ = ("members", "axons", "inputs", "outputs")

    def __init__(self, inputs: int, outputs: int):
        self.members: list[int] = []
        self.axons: set[int] = set()
        self.inputs = inputs
        self.outputs = outputs


def _kind_table(inv: Inventory):
    """Distinct (inputs, outputs, cost) shapes with their instance index lists."""
    table: dict[tuple, list[int]] = {}
    for j, k in enumerate(inv):
        table.setdefault(k.shape, []).append(j)
    return table


def _assign_instances(bins: list[_Bin], inv: Inventory):
    """Give each bin the cheapest free instance that holds it, largest bins first."""
    table = _kind_table(inv)
    shapes = sorted(table, key=lambda s: (s[2], s[0] * s[1], s))
    used = {s: 0 for s in shapes}
    placement: dict[int, int] = {}
    order = sorted(range(len(bins)), key=lambda b: (-len(bins[b].axons), -len(bins[b].members), b))
    for b in order:
        need_in, need_out = len(bins[b].axons), len(bins[b].members)
        for s in shapes:
            if s[0] >= need_in and s[1] >= need_out and used[s] < len(table[s]):
                placement[b] = table[s][used[s]]
                used[s] += 1
                break
        else:
            return None
    return placement


def _pack(net: Network, order: list[int], open_shape) -> list[_Bin] | None:
    bins: list[_Bin] = []
    for i in order:
        preds = net.predecessors[i]
        best = None
        best_key = None
        for idx, bn in enumerate(bins):
            if len(bn.members) >= bn.outputs:
                continue
            new = sum(1 for k in preds if k not in bn.axons)
            if len(bn.axons) + new > bn.inputs:
                continue
            key = (new, idx)
            if best_key is None or key < best_key:
                best, best_key = bn, key
        if best is None:
            shape = open_shape(len(preds))
            if shape is None:
                return None
            best = _Bin(shape[0], shape[1])
            bins.append(best)
        best.members.append(i)
        best.axons.update(preds)
    return bins


def greedy_mapping(net: Network, inv: Inventory) -> tuple[int, ...] | None:
    """Best of several best-fit-decreasing packings, or ``None`` if none fits.

    Neurons are taken by decreasing fan-in and placed in the open bin that
    needs the fewest new word-lines. When nothing fits, a bin is opened with
    a policy shape; each policy is tried and, after packing, every bin is
    moved to the cheapest free instance that holds it.
    """
    n = net.node_count
    if n == 0:
        return ()
    if len(inv) == 0:
        return None
    order = sorted(range(n), key=lambda i: (-net.fan_in(i), i))
    shapes = sorted(_kind_table(inv), key=lambda s: (s[2], s[0] * s[1], s))

    def cheapest(need: int):
        for s in shapes:
            if s[0] >= need:
                return s
        return None

    policies = [cheapest]
    for fixed in shapes:
        def prefer(need: int, fixed=fixed):
            return fixed if fixed[0] >= need else cheapest(need)
        policies.append(prefer)

    best = None
    best_area = None
    for policy in policies:
        bins = _pack(net, order, policy)
        if bins is None:
            continue
        placement = _assign_instances(bins, inv)
        if placement is None:
            continue
        assignment = [0] * n
        for b, bn in enumerate(bins):
            for i in bn.members:
                assignment[i] = placement[b]
        area = sum((inv[j].cost for j in set(assignment)), Fraction(0))
        if best_area is None or area < best_area:
            best, best_area = tuple(assignment), area
    return best
