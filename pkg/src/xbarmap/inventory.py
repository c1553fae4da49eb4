"""Crossbar kinds and concrete crossbar inventories."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import InvalidParameter, ModelTooLarge, ParseError, ValidationError
from .network import Network, parse_rational, rational_to_json

DEFAULT_MAX_INSTANCES = 20_000
_KIND_KEYS = {"inputs", "outputs", "cost", "count"}


@dataclass(frozen=True)
class CrossbarKind:
    """One crossbar geometry: ``inputs`` word-lines by ``outputs`` bit-lines.

    ``cost`` defaults to the memristor count. ``available`` is the instance
    cap; ``None`` means "let the inventory pick a default".
    """

    inputs: int
    outputs: int
    cost: Fraction | None = None
    available: int | None = None

    def __post_init__(self):
        for name in ("inputs", "outputs"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise InvalidParameter(f"crossbar {name} must be a positive integer, got {v!r}")
        cost = Fraction(self.inputs * self.outputs) if self.cost is None else Fraction(self.cost)
        if cost <= 0:
            raise InvalidParameter(f"crossbar cost must be positive, got {cost}")
        object.__setattr__(self, "cost", cost)
        if self.available is not None and (not isinstance(self.available, int) or self.available < 0):
            raise InvalidParameter(f"instance cap must be a non-negative integer, got {self.available!r}")

    @property
    def label(self) -> str:
        return f"{self.inputs}x{self.outputs}"

    @property
    def shape(self) -> tuple[int, int, Fraction]:
        return (self.inputs, self.outputs, self.cost)


@dataclass(frozen=True)
class Inventory:
    """Concrete crossbar instances; instance ``j`` is ``instances[j]``."""

    instances: tuple[CrossbarKind, ...] = ()

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def __getitem__(self, j: int) -> CrossbarKind:
        return self.instances[j]

    @property
    def inputs(self) -> list[int]:
        return [k.inputs for k in self.instances]

    @property
    def outputs(self) -> list[int]:
        return [k.outputs for k in self.instances]

    @property
    def costs(self) -> list[Fraction]:
        return [k.cost for k in self.instances]

    def max_inputs(self) -> int:
        return max((k.inputs for k in self.instances), default=0)

    def min_cost(self) -> Fraction:
        return min((k.cost for k in self.instances), default=Fraction(0))

    def identical_runs(self) -> list[range]:
        """Maximal runs of consecutive instances with the same geometry and cost."""
        runs = []
        start = 0
        for j in range(1, len(self.instances) + 1):
            if j == len(self.instances) or self.instances[j].shape != self.instances[start].shape:
                if j > start:
                    runs.append(range(start, j))
                start = j
        return runs


def multimacro_kinds(max_side: int = 32, max_inputs: int | None = None, max_stack: int = 8) -> list[CrossbarKind]:
    """Power-of-two square bases from 4 up to ``max_side`` plus vertical stackings.

    A base s x s stacked m times (m in 2, 4, 8, ... up to ``max_stack``) gives
    an (m*s)-input, s-output crossbar. Kinds wider than ``max_inputs`` input
    channels (default: ``max_side``) are dropped. With the defaults this is the
    ten-kind set 4x4, 8x4, 16x4, 32x4, 8x8, 16x8, 32x8, 16x16, 32x16, 32x32.
    """
    if isinstance(max_side, bool) or not isinstance(max_side, int) or max_side < 4 or max_side & (max_side - 1):
        raise InvalidParameter(f"max_side must be a power of two >= 4, got {max_side!r}")
    if max_stack < 1:
        raise InvalidParameter("max_stack must be >= 1")
    limit = max_side if max_inputs is None else max_inputs
    kinds = []
    side = 4
    while side <= max_side:
        stack = 1
        while stack <= max_stack and side * stack <= limit:
            kinds.append(CrossbarKind(inputs=side * stack, outputs=side))
            stack *= 2
        side *= 2
    return kinds


def expand_inventory(
    kinds: Sequence[CrossbarKind],
    caps: Sequence[int] | None = None,
    max_instances: int = DEFAULT_MAX_INSTANCES,
) -> Inventory:
    """Turn kinds plus per-kind counts into an ordered instance list.

    Instances of one kind are contiguous and appear in the order the kinds
    were given. ``caps`` overrides each kind's ``available`` field.
    """
    if caps is None:
        caps = [k.available for k in kinds]
    if len(caps) != len(kinds):
        raise InvalidParameter(f"{len(kinds)} kinds but {len(caps)} caps")
    if any(c is None for c in caps):
        raise InvalidParameter("every kind needs a finite instance count; use default_caps()")
    total = sum(caps)
    if total > max_instances:
        raise ModelTooLarge(f"inventory would have {total} crossbars (limit {max_instances})")
    instances = []
    for kind, cap in zip(kinds, caps):
        if cap < 0:
            raise InvalidParameter(f"negative instance cap for {kind.label}")
        base = CrossbarKind(kind.inputs, kind.outputs, kind.cost)
        instances.extend([base] * cap)
    return Inventory(tuple(instances))


def greedy_instance_count(net: Network, kind: CrossbarKind) -> int:
    """Crossbars of ``kind`` used by a first-fit packing of every neuron it can host.

    Neurons are taken by decreasing fan-in; input demand is the size of the
    union of predecessor sets, i.e. shared axons are counted once.
    """
    order = sorted(range(net.node_count), key=lambda i: (-net.fan_in(i), i))
    bins: list[tuple[set, list]] = []
    for i in order:
        preds = set(net.predecessors[i])
        if len(preds) > kind.inputs:
            continue
        for axons, members in bins:
            if len(members) < kind.outputs and len(axons | preds) <= kind.inputs:
                axons |= preds
                members.append(i)
                break
        else:
            bins.append((preds, [i]))
    return len(bins)


def summed_first_fit_count(net: Network, kind: CrossbarKind) -> int:
    """Crossbars of ``kind`` used by first-fit decreasing when fan-ins are simply added.

    This is the packing rule of the MCC baseline's starting solution, which
    ignores axon sharing and so never needs fewer crossbars than the
    axon-aware count.
    """
    bins: list[list[int]] = []
    for i in sorted(range(net.node_count), key=lambda i: (-net.fan_in(i), i)):
        need = net.fan_in(i)
        if need > kind.inputs:
            continue
        for b in bins:
            if b[1] < kind.outputs and b[0] + need <= kind.inputs:
                b[0] += need
                b[1] += 1
                break
        else:
            bins.append([need, 1])
    return len(bins)


def default_caps(net: Network, kinds: Sequence[CrossbarKind]) -> list[int]:
    """Instance counts for kinds whose ``available`` is unset.

    Each kind gets enough instances to hold every neuron at full output
    utilization. Kinds wide enough for the largest fan-in additionally get at
    least as many instances as a first-fit packing with summed fan-ins
    needs, so an inventory with one such kind always admits a feasible
    mapping, and also a feasible start for the MCC baseline.
    """
    n = net.node_count
    widest_need = max((net.fan_in(i) for i in range(n)), default=0)
    caps = []
    for kind in kinds:
        if kind.available is not None:
            caps.append(kind.available)
            continue
        cap = math.ceil(n / kind.outputs)
        if kind.inputs >= widest_need:
            cap = max(cap, greedy_instance_count(net, kind), summed_first_fit_count(net, kind))
        caps.append(cap)
    return caps


def build_inventory(net: Network, kinds: Sequence[CrossbarKind], max_instances: int = DEFAULT_MAX_INSTANCES) -> Inventory:
    return expand_inventory(kinds, default_caps(net, kinds), max_instances=max_instances)


def homogeneous_kinds(inputs: int, outputs: int, count: int | None = None) -> list[CrossbarKind]:
    return [CrossbarKind(inputs, outputs, available=count)]


def parse_kind_spec(text: str) -> list[CrossbarKind]:
    """Read the command-line inventory shorthands.

    ``homogeneous:16x16[:count]`` gives one kind; ``multimacro[:max_side[:count]]``
    (alias ``table2``) gives the stacked power-of-two set.
    """
    parts = text.split(":")
    head = parts[0]
    try:
        if head == "homogeneous":
            if len(parts) not in (2, 3):
                raise InvalidParameter("expected homogeneous:<in>x<out>[:count]")
            a, n = (int(v) for v in parts[1].lower().split("x"))
            count = int(parts[2]) if len(parts) == 3 else None
            return homogeneous_kinds(a, n, count)
        if head in ("multimacro", "table2"):
            side = int(parts[1]) if len(parts) >= 2 and parts[1] else 32
            count = int(parts[2]) if len(parts) >= 3 else None
            kinds = multimacro_kinds(side)
            if count is not None:
                kinds = [CrossbarKind(k.inputs, k.outputs, k.cost, count) for k in kinds]
            return kinds
    except ValueError as exc:
        raise InvalidParameter(f"bad inventory shorthand {text!r}: {exc}") from exc
    raise InvalidParameter(f"unknown inventory shorthand {text!r}")


def load_kinds(source) -> list[CrossbarKind]:
    """Decode an inventory document into kinds (counts may be left open)."""
    if hasattr(source, "read"):
        source = source.read()
    try:
        if isinstance(source, (bytes, bytearray)):
            source = bytes(source).decode("utf-8")
        doc = json.loads(source)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"malformed inventory JSON: {exc}") from exc
    if not isinstance(doc, dict) or set(doc) != {"kinds"} or not isinstance(doc["kinds"], list):
        raise ValidationError("inventory document must be {\"kinds\": [...]} with no other fields")
    kinds = []
    for idx, raw in enumerate(doc["kinds"]):
        if not isinstance(raw, dict):
            raise ValidationError(f"kind #{idx} must be an object")
        extra = set(raw) - _KIND_KEYS
        if extra:
            raise ValidationError(f"kind #{idx}: unknown fields {sorted(extra)}")
        try:
            kinds.append(
                CrossbarKind(
                    inputs=raw["inputs"],
                    outputs=raw["outputs"],
                    cost=parse_rational(raw["cost"], f"kind #{idx} cost") if "cost" in raw else None,
                    available=raw.get("count"),
                )
            )
        except KeyError as exc:
            raise ValidationError(f"kind #{idx} is missing {exc}") from exc
        except InvalidParameter as exc:
            raise ValidationError(f"kind #{idx}: {exc}") from exc
    return kinds


def dump_kinds(kinds: Iterable[CrossbarKind]) -> bytes:
    doc = {"kinds": []}
    for k in kinds:
        entry = {"inputs": k.inputs, "outputs": k.outputs, "cost": rational_to_json(k.cost)}
        if k.available is not None:
            entry["count"] = k.available
        doc["kinds"].append(entry)
    return (json.dumps(doc, indent=1, sort_keys=True) + "\n").encode("utf-8")


def resolve_inventory(spec: str, net: Network) -> tuple[list[CrossbarKind], Inventory]:
    """Accept a shorthand or a path to an inventory document."""
    if spec.split(":")[0] in ("homogeneous", "multimacro", "table2"):
        kinds = parse_kind_spec(spec)
    else:
        with open(spec, "rb") as fh:
            kinds = load_kinds(fh)
    return kinds, build_inventory(net, kinds)
