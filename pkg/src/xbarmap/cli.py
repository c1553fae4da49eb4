"""Command-line front end: ``xbarmap <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .baseline import iterate_spikehard
from .errors import (
    InfeasibleByFanIn,
    InfeasibleMapping,
    InfeasibleMcc,
    NoSolutionFound,
    XbarmapError,
)
from .inventory import resolve_inventory
from .network import load_network_file, network_metrics, save_network_file
from .optimizer import PipelineTrace, evaluate, optimize_area, optimize_pgo, optimize_snu, traces_to_csv
from .report import compare_report, report_to_csv, report_to_json
from .sim import count_packets, dump_stimulus, load_profile, load_stimulus, random_stimulus, save_profile, simulate
from .solution import solution_from_assignment
from .solver import SolveLimits
from .synth import generate_network

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_NO_SOLUTION = 3
STAGE_ORDER = ("area", "snu", "pgo", "baseline")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class JobConfig:
    network: str
    inventory: str
    stages: list[str]
    out: str
    profile: str | None = None
    stimulus: str | None = None
    limits_work: int = 200_000
    seed: int = 0
    policy: str = "crossbar"
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        unknown = [s for s in self.stages if s not in STAGE_ORDER]
        if unknown:
            raise UsageError(f"unknown stage(s) {unknown}; choose from {list(STAGE_ORDER)}")
        if not self.stages:
            raise UsageError("no stages requested")
        if ("snu" in self.stages or "pgo" in self.stages) and "area" not in self.stages:
            raise UsageError("stages snu and pgo need the area stage")
        if "pgo" in self.stages and not (self.profile or self.stimulus):
            raise UsageError("stage pgo needs --profile or --stimulus")
        if self.limits_work is not None and self.limits_work < 1:
            raise UsageError("--limits-work must be positive")

    def to_dict(self) -> dict:
        return {
            "network": self.network,
            "inventory": self.inventory,
            "stages": self.stages,
            "profile": self.profile,
            "stimulus": self.stimulus,
            "limits_work": self.limits_work,
            "seed": self.seed,
            "policy": self.policy,
        }


def _write(path: Path, text: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(text, str):
        text = text.encode("utf-8")
    path.write_bytes(text)


def _dump(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _emit_stage(out: Path, stage: str, net, inv, sol, trace: PipelineTrace, weights, extra=None) -> dict:
    report = evaluate(net, inv, sol, weights, label=stage)
    mapping = sol.to_dict(inv)
    metrics = report.to_dict()
    metrics["status"] = trace.status.value
    metrics["work_units"] = trace.work_units
    metrics["best_work_units"] = trace.best_work_units
    if extra:
        metrics.update(extra)
    _write(out / stage / "mapping.json", _dump(mapping))
    _write(out / stage / "metrics.json", _dump(metrics))
    _write(out / stage / "trace.csv", traces_to_csv([trace]))
    return metrics


def run(config: JobConfig, log=print) -> int:
    """Execute a mapping job and write its artifacts; returns the exit status."""
    try:
        config.validate()
    except UsageError as exc:
        log(f"usage error: {exc}")
        return EXIT_USAGE
    stage = "setup"
    try:
        net = load_network_file(config.network)
        _, inv = resolve_inventory(config.inventory, net)
        profile = None
        if config.profile:
            profile = load_profile(Path(config.profile).read_bytes())
        elif config.stimulus:
            profile, _ = simulate(net, load_stimulus(Path(config.stimulus).read_bytes()))
        weights = list(profile.counts) if profile is not None else None
        out = Path(config.out)
        limits = SolveLimits(config.limits_work)
        summaries = []
        done = {}
        for stage in [s for s in STAGE_ORDER if s in config.stages]:
            if stage == "area":
                sol, trace = optimize_area(net, inv, limits)
            elif stage == "snu":
                sol, trace = optimize_snu(net, inv, done["area"], limits)
            elif stage == "pgo":
                base = done.get("snu", done["area"])
                sol, trace = optimize_pgo(net, inv, profile, base, limits)
            else:
                trace = PipelineTrace("baseline-mcc")
                history: list = []
                sol, rounds = iterate_spikehard(net, inv, limits, config.policy, history, trace)
                summaries.append(_emit_stage(out, stage, net, inv, sol, trace, weights, {"rounds": rounds}))
                done[stage] = sol
                continue
            done[stage] = sol
            summaries.append(_emit_stage(out, stage, net, inv, sol, trace, weights))
        reference = "baseline" if "baseline" in done else "area"
        rows = compare_report(summaries, reference)
        _write(out / "summary.json", _dump({"config": config.to_dict(), "network": network_metrics(net),
                                             "stages": summaries, "comparison": rows}))
        _write(out / "summary.csv", report_to_csv(rows))
    except (InfeasibleMapping, InfeasibleByFanIn, InfeasibleMcc) as exc:
        log(f"stage {stage}: infeasible: {exc}")
        return EXIT_INFEASIBLE
    except NoSolutionFound as exc:
        log(f"stage {stage}: {exc}")
        return EXIT_NO_SOLUTION
    except (XbarmapError, OSError) as exc:
        log(f"stage {stage}: {exc}")
        return EXIT_USAGE
    for s in summaries:
        log(f"{s['label']}: area={s['area']} global_routes={s['global_routes']} status={s['status']}")
    return EXIT_OK


def _cmd_map(args) -> int:
    cfg = JobConfig(
        network=args.network,
        inventory=args.inventory,
        stages=[s for s in args.stages.split(",") if s],
        out=args.out,
        profile=args.profile,
        stimulus=args.stimulus,
        limits_work=args.limits_work,
        seed=args.seed,
        policy=args.policy,
    )
    return run(cfg)


def _cmd_baseline(args) -> int:
    cfg = JobConfig(network=args.network, inventory=args.inventory, stages=["baseline"], out=args.out,
                    limits_work=args.limits_work, seed=args.seed, policy=args.policy)
    return run(cfg)


def _load_assignment(path: str) -> list[int]:
    doc = json.loads(Path(path).read_text())
    return list(doc["assignment"])


def _cmd_simulate(args) -> int:
    net = load_network_file(args.network)
    stim = load_stimulus(Path(args.stimulus).read_bytes())
    profile, events = simulate(net, stim)
    out = Path(args.out)
    _write(out / "profile.json", save_profile(profile))
    _write(out / "events.csv", "t,neuron\n" + "".join(f"{t},{k}\n" for t, k in events.firings))
    if args.mapping:
        stats = count_packets(_load_assignment(args.mapping), events, net)
        _write(out / "packets.json", _dump({"global_packets": stats.global_packets, "local_packets": stats.local_packets}))
        print(f"global_packets={stats.global_packets} local_packets={stats.local_packets}")
    print(f"spikes={sum(profile.counts)} horizon={profile.horizon}")
    return EXIT_OK


def _cmd_profile(args) -> int:
    net = load_network_file(args.network)
    if args.check:
        profile = load_profile(Path(args.check).read_bytes())
        if len(profile.counts) != net.node_count:
            print(f"profile has {len(profile.counts)} counts for {net.node_count} neurons")
            return EXIT_USAGE
        print(f"profile ok: {sum(profile.counts)} spikes over {profile.horizon} steps")
        return EXIT_OK
    if not (args.stimulus and args.out):
        print("usage error: profile needs --stimulus and --out (or --check)")
        return EXIT_USAGE
    profile, _ = simulate(net, load_stimulus(Path(args.stimulus).read_bytes()))
    _write(Path(args.out), save_profile(profile))
    return EXIT_OK


def _cmd_gen_net(args) -> int:
    net = generate_network(args.nodes, args.edges, args.max_fan_in, args.seed,
                           input_count=args.inputs, output_count=args.outputs)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_network_file(net, args.out)
    if args.stimulus:
        stim = random_stimulus(net, args.horizon, args.rate, args.seed)
        _write(Path(args.stimulus), dump_stimulus(stim))
    print(_dump(network_metrics(net)), end="")
    return EXIT_OK


def _cmd_report(args) -> int:
    runs = []
    for path in args.runs:
        doc = json.loads(Path(path).read_text())
        if args.label_from_path:
            doc["label"] = Path(path).parent.name
        runs.append(doc)
    rows = compare_report(runs, args.reference)
    text = report_to_json(rows) if args.format == "json" else report_to_csv(rows)
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    net = load_network_file(args.network)
    _, inv = resolve_inventory(args.inventory, net)
    sol = solution_from_assignment(net, inv, _load_assignment(args.mapping))
    weights = list(load_profile(Path(args.profile).read_bytes()).counts) if args.profile else None
    sys.stdout.write(evaluate(net, inv, sol, weights, label=args.label).to_json())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="xbarmap", description="Map spiking neural networks onto crossbar inventories.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def job_flags(sp, stages=True):
        sp.add_argument("--network", required=True)
        sp.add_argument("--inventory", required=True, help="path, homogeneous:16x16[:count] or multimacro[:side[:count]]")
        if stages:
            sp.add_argument("--stages", default="area", help="comma list from area,snu,pgo,baseline")
            sp.add_argument("--profile")
            sp.add_argument("--stimulus")
        sp.add_argument("--limits-work", type=int, default=200_000)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--policy", default="crossbar", choices=["crossbar", "connected"])
        sp.add_argument("--out", required=True)

    job_flags(sub.add_parser("map", help="run mapping stages"))
    job_flags(sub.add_parser("baseline", help="run the iterated MCC baseline"), stages=False)

    sp = sub.add_parser("simulate", help="simulate and emit profile and events")
    sp.add_argument("--network", required=True)
    sp.add_argument("--stimulus", required=True)
    sp.add_argument("--mapping", help="mapping.json to count packets against")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("profile", help="write or check a spike profile")
    sp.add_argument("--network", required=True)
    sp.add_argument("--stimulus")
    sp.add_argument("--out")
    sp.add_argument("--check")

    sp = sub.add_parser("gen-net", help="generate a synthetic network")
    sp.add_argument("--nodes", type=int, required=True)
    sp.add_argument("--edges", type=int, required=True)
    sp.add_argument("--max-fan-in", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--inputs", type=int)
    sp.add_argument("--outputs", type=int)
    sp.add_argument("--stimulus", help="also write a random stimulus here")
    sp.add_argument("--horizon", type=int, default=100)
    sp.add_argument("--rate", type=float, default=0.2)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("report", help="compare metrics.json files against a reference run")
    sp.add_argument("--runs", nargs="+", required=True)
    sp.add_argument("--reference", required=True)
    sp.add_argument("--label-from-path", action="store_true", help="label each run by its directory name")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--out")

    sp = sub.add_parser("evaluate", help="recompute metrics for a mapping.json")
    sp.add_argument("--network", required=True)
    sp.add_argument("--inventory", required=True)
    sp.add_argument("--mapping", required=True)
    sp.add_argument("--profile")
    sp.add_argument("--label", default="")
    return p


COMMANDS = {
    "map": _cmd_map,
    "baseline": _cmd_baseline,
    "simulate": _cmd_simulate,
    "profile": _cmd_profile,
    "gen-net": _cmd_gen_net,
    "report": _cmd_report,
    "evaluate": _cmd_evaluate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InfeasibleMapping, InfeasibleByFanIn, InfeasibleMcc) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (XbarmapError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
