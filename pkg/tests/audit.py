"""Wrappers that validate every solution produced while the tests run."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

from xbarmap.solution import raw_violations, validate_solution


@dataclass
class AuditState:
    checked: int = 0
    raw_checked: int = 0
    violations: list = field(default_factory=list)


STATE = AuditState()
NOTES: list[str] = []


def check(where: str, net, inv, sol, weights=None) -> None:
    STATE.checked += 1
    issues = validate_solution(net, inv, sol, weights)
    if issues:
        STATE.violations.append((where, [f"{v.rule}: {v.detail}" for v in issues]))


def check_raw(where: str, model, values, mv, net) -> None:
    STATE.raw_checked += 1
    issues = raw_violations(model, values, mv, net)
    if issues:
        STATE.violations.append((where, issues))


def install(solution_mod, optimizer_mod, baseline_mod) -> None:
    original_decode = solution_mod.decode_solution
    original_stage = optimizer_mod._run_stage
    original_pack = baseline_mod.pack_mccs_detailed

    @functools.wraps(original_decode)
    def decode(result, mv, net, inv, weights=None):
        sol = original_decode(result, mv, net, inv, weights)
        check("decode_solution", net, inv, sol, weights)
        return sol

    @functools.wraps(original_stage)
    def run_stage(stage, net, inv, keep, model, mv, limits, warm, weights, backend):
        sol, trace, result = original_stage(stage, net, inv, keep, model, mv, limits, warm, weights, backend)
        check(f"stage {stage}", net, inv, sol, weights)
        check_raw(f"stage {stage} raw", model, result.assignment, mv, net)
        return sol, trace, result

    @functools.wraps(original_pack)
    def pack(net, mccs, inv, *args, **kwargs):
        sol, trace, placement = original_pack(net, mccs, inv, *args, **kwargs)
        check("pack_mccs", net, inv, sol)
        return sol, trace, placement

    solution_mod.decode_solution = decode
    optimizer_mod.decode_solution = decode
    optimizer_mod._run_stage = run_stage
    baseline_mod.pack_mccs_detailed = pack
