import itertools
import random

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from xbarmap.errors import InvalidParameter, ParseError, TooLargeForOracle
from xbarmap.ilp import IlpModel, build_mapping_model
from xbarmap.inventory import CrossbarKind, Inventory
from xbarmap.solver import (
    BuiltinBackend,
    ExternalAnswer,
    LpTextBackend,
    ScipyMilpBackend,
    SolveLimits,
    Status,
    brute_force,
    builtin_lp_runner,
    solve,
)

from helpers import tiny_instance


def naive_optimum(model: IlpModel):
    """Plain itertools enumeration, independent of the numpy oracle."""
    best = None
    for bits in itertools.product((0, 1), repeat=model.num_vars):
        if model.is_feasible(bits):
            obj = model.objective_value(bits)
            if best is None or obj < best:
                best = obj
    return best


def random_model(rng: random.Random, n: int, m: int) -> IlpModel:
    model = IlpModel("random")
    for _ in range(n):
        model.add_var()
    for _ in range(m):
        width = rng.randint(1, min(4, n))
        vs = rng.sample(range(n), width)
        terms = [(rng.choice([-3, -2, -1, 1, 2, 3]), v) for v in vs]
        lo_act = sum(min(0, a) for a, _ in terms)
        hi_act = sum(max(0, a) for a, _ in terms)
        lo = rng.choice([None, rng.randint(lo_act, hi_act)])
        hi = rng.choice([None, rng.randint(lo_act, hi_act)])
        if lo is not None and hi is not None and lo > hi:
            lo, hi = hi, lo
        model.add_constraint(terms, lo, hi)
    model.set_objective({v: rng.randint(-4, 4) for v in range(n)})
    return model


@pytest.mark.parametrize("seed", range(40))
def test_oracle_matches_itertools(seed):
    rng = random.Random(seed)
    model = random_model(rng, rng.randint(1, 10), rng.randint(0, 8))
    res = brute_force(model)
    want = naive_optimum(model)
    if want is None:
        assert res.status == Status.INFEASIBLE
    else:
        assert res.status == Status.OPTIMAL and res.objective == want
        assert model.is_feasible(res.assignment)


def test_oracle_refuses_large_models():
    m = IlpModel()
    for _ in range(25):
        m.add_var()
    with pytest.raises(TooLargeForOracle):
        brute_force(m)


@pytest.mark.parametrize("seed", range(150))
def test_search_matches_oracle_on_generic_models(seed):
    rng = random.Random(1000 + seed)
    model = random_model(rng, rng.randint(1, 14), rng.randint(0, 12))
    got = solve(model, SolveLimits(None))
    want = brute_force(model)
    assert got.status == want.status
    assert got.objective == want.objective
    if got.assignment is not None:
        assert model.is_feasible(got.assignment)
        assert model.objective_value(got.assignment) == got.objective


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10**6))
def test_search_matches_oracle_on_mapping_models(seed):
    net, inv, model, mv, mode, weights = tiny_instance(random.Random(seed))
    got = solve(model, SolveLimits(None))
    want = brute_force(model)
    assert (got.status, got.objective) == (want.status, want.objective)


def test_empty_model_is_optimal_zero():
    res = solve(IlpModel())
    assert res.status == Status.OPTIMAL and res.objective == 0 and res.assignment == ()


def test_contradictory_row_is_infeasible():
    m = IlpModel()
    a = m.add_var()
    m.add_constraint([(1, a)], 2, None)
    assert solve(m).status == Status.INFEASIBLE


def _mapping_model(n_neurons=12, crossbars=6):
    from xbarmap.ilp import add_area_objective
    from xbarmap.network import from_edge_list

    rng = random.Random(5)
    pairs = {(rng.randrange(n_neurons), rng.randrange(n_neurons)) for _ in range(25)}
    net = from_edge_list(n_neurons, sorted(pairs))
    inv = Inventory((CrossbarKind(8, 3),) * crossbars)
    model, mv = build_mapping_model(net, inv)
    add_area_objective(model, mv, inv)
    return model


def test_unbounded_search_needs_small_model():
    model = _mapping_model()
    assert model.num_vars > 64
    with pytest.raises(InvalidParameter):
        solve(model, SolveLimits(None))
    solve(model, SolveLimits(None, max_wall_seconds=5.0))


def test_budget_statuses_and_monotone_incumbents():
    model = _mapping_model()
    seen = []
    res = solve(model, SolveLimits(200_000), on_incumbent=seen.append)
    assert res.status in (Status.OPTIMAL, Status.FEASIBLE)
    assert [i.objective for i in seen] == [i.objective for i in res.incumbents]
    objs = [i.objective for i in seen]
    assert objs == sorted(objs, reverse=True) and len(set(objs)) == len(objs)
    works = [i.work_units for i in seen]
    assert works == sorted(works) and works[-1] <= res.work_units
    tiny = solve(model, SolveLimits(1))
    assert tiny.status == Status.UNKNOWN and tiny.assignment is None


def test_work_units_deterministic():
    model = _mapping_model()
    a = solve(model, SolveLimits(3000))
    b = solve(model, SolveLimits(3000))
    assert (a.status, a.objective, a.work_units, a.assignment, a.nodes) == (b.status, b.objective, b.work_units, b.assignment, b.nodes)
    assert [(i.work_units, i.objective) for i in a.incumbents] == [(i.work_units, i.objective) for i in b.incumbents]


def test_target_objective_stops_early():
    model = _mapping_model()
    full = solve(model, SolveLimits(200_000))
    first = full.incumbents[0].objective
    early = solve(model, SolveLimits(200_000, target_objective=first))
    assert early.objective <= first and early.work_units <= full.work_units


def test_warm_start_seeds_incumbent():
    model = _mapping_model()
    ref = solve(model, SolveLimits(200_000))
    warm = solve(model, SolveLimits(200_000), warm_start=list(ref.assignment))
    assert warm.incumbents[0].objective == ref.objective
    assert warm.incumbents[0].work_units == 0
    hinted = solve(model, SolveLimits(200_000), warm_start={0: 1})
    assert hinted.objective == ref.objective or hinted.status == Status.FEASIBLE


def test_infeasible_warm_start_is_ignored():
    model = _mapping_model()
    res = solve(model, SolveLimits(50_000), warm_start=[1] * model.num_vars)
    assert res.assignment is not None and model.is_feasible(res.assignment)


@pytest.mark.parametrize("seed", range(15))
def test_lp_text_backend_matches_builtin(seed):
    net, inv, model, mv, mode, weights = tiny_instance(random.Random(seed))
    direct = BuiltinBackend().solve(model, SolveLimits(None))
    via_text = LpTextBackend(builtin_lp_runner).solve(model, SolveLimits(None))
    assert (direct.status, direct.objective) == (via_text.status, via_text.objective)


def test_lp_text_backend_rejects_bad_answers():
    m = IlpModel()
    a = m.add_var(("x", 0, 0))
    m.add_constraint([(1, a)], 1, 1)
    with pytest.raises(ParseError):
        LpTextBackend(lambda text, lim: ExternalAnswer(Status.OPTIMAL, {"x_0_0": 0}, 0)).solve(m, SolveLimits())
    with pytest.raises(ParseError):
        LpTextBackend(lambda text, lim: ExternalAnswer(Status.OPTIMAL, {}, 0)).solve(m, SolveLimits())
    with pytest.raises(ParseError):
        LpTextBackend(lambda text, lim: ExternalAnswer(Status.OPTIMAL)).solve(m, SolveLimits())
    res = LpTextBackend(lambda text, lim: ExternalAnswer(Status.INFEASIBLE)).solve(m, SolveLimits())
    assert res.status == Status.INFEASIBLE


@pytest.mark.parametrize("seed", range(15))
def test_scipy_backend_matches_oracle(seed):
    net, inv, model, mv, mode, weights = tiny_instance(random.Random(500 + seed))
    got = ScipyMilpBackend().solve(model, SolveLimits())
    want = brute_force(model)
    assert got.status == want.status and got.objective == want.objective
