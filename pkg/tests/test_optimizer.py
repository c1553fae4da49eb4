import csv
import io
import random

import pytest

from xbarmap.errors import InfeasibleByFanIn, InfeasibleMapping, InvalidParameter, NoSolutionFound
from xbarmap.heuristics import greedy_mapping
from xbarmap.ilp import ModelOptions, add_area_objective, add_route_objectives, build_mapping_model
from xbarmap.inventory import CrossbarKind, Inventory, build_inventory, homogeneous_kinds, multimacro_kinds
from xbarmap.network import from_edge_list
from xbarmap.optimizer import (
    TRACE_COLUMNS,
    evaluate,
    optimize_area,
    optimize_pgo,
    optimize_snu,
    restrict_inventory,
    traces_to_csv,
)
from xbarmap.solution import solution_from_assignment, validate_solution
from xbarmap.solver import SolveLimits, Status, brute_force
from xbarmap.synth import generate_network

from helpers import shared_axon_network, random_network

BIG = SolveLimits(None)


def _small_case(seed):
    """Random instance whose area model fits the exhaustive oracle."""
    rng = random.Random(seed)
    while True:
        net = random_network(rng, rng.randint(2, 4), rng.randint(1, 6), self_loops=False)
        inv = Inventory(tuple(CrossbarKind(rng.randint(2, 4), rng.randint(1, 3))
                              for _ in range(rng.randint(1, 2)) for _ in range(2)))
        if max(net.fan_in(i) for i in range(net.node_count)) > inv.max_inputs():
            continue
        J = len(inv)
        if net.node_count * J + len(net.sources()) * J + J <= 24:
            return net, inv


def _oracle_area(net, inv):
    model, mv = build_mapping_model(net, inv, ModelOptions(symmetry_break=False))
    add_area_objective(model, mv, inv)
    return brute_force(model)


@pytest.mark.parametrize("seed", range(30))
def test_area_matches_exhaustive_optimum(seed):
    net, inv = _small_case(seed)
    ref = _oracle_area(net, inv)
    if ref.status == Status.INFEASIBLE:
        with pytest.raises(InfeasibleMapping):
            optimize_area(net, inv, BIG)
        return
    for warm in ("greedy", None):
        sol, trace = optimize_area(net, inv, SolveLimits(10**6), warm_start=warm)
        assert trace.status == Status.OPTIMAL
        assert sol.metrics.area == ref.objective
        assert validate_solution(net, inv, sol) == []


@pytest.mark.parametrize("seed", range(6))
def test_trim_and_restriction_do_not_change_optimum(seed):
    net, inv = _small_case(100 + seed)
    try:
        full, _ = optimize_area(net, inv, SolveLimits(10**6), trim=False, warm_start=None)
    except InfeasibleMapping:
        return
    trimmed, _ = optimize_area(net, inv, SolveLimits(10**6))
    assert trimmed.metrics.area == full.metrics.area
    a, _ = optimize_snu(net, inv, trimmed, SolveLimits(10**6))
    from xbarmap.optimizer import _frozen_stage

    b, _ = _frozen_stage("snu", net, inv, trimmed, SolveLimits(10**6), None, None, None, restrict=False)
    assert a.metrics.global_routes == b.metrics.global_routes
    assert a.metrics.area <= trimmed.metrics.area


def _frozen_oracle(net, inv, base, weights):
    """Exhaustive route optimum over the crossbars ``base`` enables."""
    sub = restrict_inventory(inv, base.enabled)
    model, mv = build_mapping_model(net, sub, ModelOptions(symmetry_break=False))
    add_route_objectives(model, mv, "global_routes", weights)
    return brute_force(model)


@pytest.mark.parametrize("seed", range(20))
def test_snu_and_pgo_match_exhaustive_optimum(seed):
    rng = random.Random(seed)
    net = random_network(rng, 3, rng.randint(2, 6), self_loops=False)
    inv = Inventory((CrossbarKind(2, 2),) * 2 + (CrossbarKind(3, 3),))
    base, _ = optimize_area(net, inv, BIG)
    weights = [rng.choice([0, 1, 5]) for _ in range(3)]
    snu, _ = optimize_snu(net, inv, base, SolveLimits(10**6))
    pgo, _ = optimize_pgo(net, inv, weights, base, SolveLimits(10**6))
    assert snu.metrics.global_routes == _frozen_oracle(net, inv, base, None).objective
    assert pgo.metrics.weighted_global_packets == _frozen_oracle(net, inv, base, weights).objective
    assert set(snu.enabled) <= set(base.enabled) and set(pgo.enabled) <= set(base.enabled)


def test_greedy_mapping_is_valid():
    for seed in range(5):
        net = generate_network(80, 300, 12, seed)
        for kinds in (homogeneous_kinds(16, 16), multimacro_kinds()):
            inv = build_inventory(net, kinds)
            g = greedy_mapping(net, inv)
            assert g is not None
            assert validate_solution(net, inv, solution_from_assignment(net, inv, g)) == []


def test_greedy_mapping_none_when_out_of_instances():
    net = shared_axon_network()
    assert greedy_mapping(net, Inventory((CrossbarKind(2, 2),))) is None


def test_infeasible_inventory_raises():
    net = shared_axon_network()
    with pytest.raises(InfeasibleMapping):
        optimize_area(net, Inventory((CrossbarKind(2, 2), CrossbarKind(2, 2))), BIG)
    with pytest.raises(InfeasibleByFanIn):
        optimize_area(from_edge_list(3, [(0, 2), (1, 2)]), Inventory((CrossbarKind(1, 3),)), BIG)


def test_no_solution_within_budget_raises():
    net = generate_network(60, 200, 10, 3)
    inv = build_inventory(net, homogeneous_kinds(16, 16))
    with pytest.raises(NoSolutionFound):
        optimize_area(net, inv, SolveLimits(5), warm_start=None)


def test_bad_warm_start_name():
    with pytest.raises(InvalidParameter):
        optimize_area(shared_axon_network(), Inventory((CrossbarKind(2, 3),) * 2), BIG, warm_start="random")


def test_explicit_warm_start_assignment():
    net = shared_axon_network()
    inv = Inventory((CrossbarKind(2, 3),) * 2)
    sol, trace = optimize_area(net, inv, BIG, warm_start=[1, 1, 0, 0, 0])
    assert trace.rows[0].work_units == 0 and sol.metrics.area == 12


def test_pgo_profile_shorter_than_network_is_padded():
    net = shared_axon_network()
    inv = Inventory((CrossbarKind(2, 3),) * 2)
    base, _ = optimize_area(net, inv, BIG)
    sol, _ = optimize_pgo(net, inv, [3], base, BIG)
    assert sol.metrics.weighted_global_packets is not None
    with pytest.raises(InvalidParameter):
        optimize_pgo(net, inv, [1] * 9, base, BIG)


def test_trace_csv_and_dict():
    net = generate_network(40, 120, 8, 1)
    inv = build_inventory(net, homogeneous_kinds(16, 16))
    sol, trace = optimize_area(net, inv, SolveLimits(20_000))
    rows = list(csv.DictReader(io.StringIO(traces_to_csv([trace]))))
    assert rows and tuple(rows[0]) == TRACE_COLUMNS
    assert rows[-1]["area"] == str(sol.metrics.area)
    objs = [int(r["objective"]) for r in rows]
    assert objs == sorted(objs, reverse=True)
    doc = trace.to_dict()
    assert doc["best_work_units"] == trace.rows[-1].work_units <= doc["work_units"]


def test_evaluate_report():
    net = shared_axon_network()
    inv = Inventory((CrossbarKind(2, 3),) * 2 + (CrossbarKind(4, 4),))
    sol = solution_from_assignment(net, inv, [0, 0, 1, 1, 1])
    rep = evaluate(net, inv, sol, [1, 2, 0, 0, 0], label="x")
    assert rep.area == 12 and rep.enabled_count == 2 and rep.kind_usage == {"2x3": 2}
    assert rep.weighted_global_packets == 3
    assert rep.min_area_bound == 10 and rep.min_area_bound <= rep.area
    assert rep.single_neuron_area == 30 and rep.to_dict()["single_neuron_area"] == 30
    assert rep.to_dict()["label"] == "x"


def test_restrict_inventory_keeps_order():
    inv = Inventory((CrossbarKind(2, 2), CrossbarKind(3, 3), CrossbarKind(4, 4)))
    assert [k.inputs for k in restrict_inventory(inv, [0, 2])] == [2, 4]
