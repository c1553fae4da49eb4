"""Shared builders for tests: random tiny instances and named small networks."""

from __future__ import annotations

import random
from fractions import Fraction

from xbarmap.ilp import (
    ModelOptions,
    add_area_objective,
    add_route_objectives,
    build_mapping_model,
    freeze_enabled,
)
from xbarmap.inventory import CrossbarKind, Inventory
from xbarmap.network import Edge, Network


def shared_axon_network() -> Network:
    """Five neurons, feeds 1->3, 2->4, 2->5 (stored 0-based)."""
    return Network(5, [Edge(0, 2), Edge(1, 3), Edge(1, 4)])


def chain3() -> Network:
    return Network(3, [Edge(0, 1), Edge(1, 2)])


def random_network(rng: random.Random, n: int, e: int, self_loops: bool = True) -> Network:
    pairs = [(a, b) for a in range(n) for b in range(n) if self_loops or a != b]
    rng.shuffle(pairs)
    edges = [Edge(a, b, Fraction(rng.choice([-1, 1, 2]), rng.choice([1, 2])), rng.randint(0, 2)) for a, b in pairs[:e]]
    return Network(n, edges)


def random_inventory(rng: random.Random, count: int, max_side: int = 4) -> Inventory:
    kinds = []
    for _ in range(count):
        a, o = rng.randint(1, max_side), rng.randint(1, max_side)
        cost = rng.choice([None, Fraction(rng.randint(1, 9), rng.choice([1, 2]))])
        kinds.append(CrossbarKind(a, o, cost))
    return Inventory(tuple(kinds))


def tiny_instance(rng: random.Random, max_vars: int = 24):
    """Random (net, inv, model, mv, mode, weights) with at most ``max_vars`` variables.

    Instances are redrawn until the model fits; fan-in violations are redrawn
    as well so the model can always be built.
    """
    while True:
        n = rng.randint(1, 6)
        e = rng.randint(0, min(10, n * n))
        net = random_network(rng, n, e)
        inv = random_inventory(rng, rng.randint(1, 3))
        if max((net.fan_in(i) for i in range(n)), default=0) > inv.max_inputs():
            continue
        mode = rng.choice(["area", "total_routes", "global_routes", "pgo", "feasibility"])
        weights = [rng.choice([0, 0, 1, 3]) for _ in range(n)] if mode == "pgo" else None
        opts = ModelOptions(symmetry_break=rng.random() < 0.5)
        model, mv = build_mapping_model(net, inv, opts)
        if mode == "area":
            add_area_objective(model, mv, inv)
        elif mode == "total_routes":
            add_route_objectives(model, mv, "total_routes")
        elif mode == "global_routes":
            add_route_objectives(model, mv, "global_routes")
        elif mode == "pgo":
            add_route_objectives(model, mv, "global_routes", weights)
        if rng.random() < 0.2:
            freeze_enabled(model, mv, [j for j in range(len(inv)) if rng.random() < 0.7])
        if model.num_vars <= max_vars:
            return net, inv, model, mv, mode, weights
