"""SNN connectivity graphs: loading, validation and structural metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_DOWN, ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from functools import cached_property
from typing import IO, Iterable, Sequence

from .errors import DegenerateGraph, InvalidParameter, ParseError, ValidationError

_NETWORK_KEYS = {"nodes", "edges", "thresholds", "inputs", "outputs"}
_EDGE_KEYS = {"pre", "post", "weight", "delay"}


def parse_rational(value, what: str = "value") -> Fraction:
    """Read an exact rational from a JSON scalar.

    Floats go through their shortest decimal repr so that ``0.1`` becomes
    ``1/10`` instead of the nearest binary fraction.
    """
    if isinstance(value, bool):
        raise ValidationError(f"{what}: expected a number, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValidationError(f"{what}: non-finite number")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"{what}: cannot read {value!r} as a rational") from exc
    raise ValidationError(f"{what}: expected a number, got {type(value).__name__}")


def rational_to_json(value: Fraction):
    """Integers stay integers; anything else is written as an exact "p/q" string."""
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True, order=True)
class Edge:
    pre: int
    post: int
    weight: Fraction = Fraction(1)
    delay: int = 0


@dataclass(frozen=True)
class Network:
    """Immutable directed SNN graph.

    Edges are kept sorted by ``(pre, post)`` so two networks with the same
    connectivity compare equal regardless of document order.
    """

    node_count: int
    edges: tuple[Edge, ...] = ()
    thresholds: tuple[Fraction, ...] = field(default=())
    inputs: tuple[int, ...] = ()
    outputs: tuple[int, ...] = ()

    def __post_init__(self):
        n = self.node_count
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise ValidationError(f"node count must be a non-negative integer, got {n!r}")
        edges = tuple(sorted(self.edges, key=lambda e: (e.pre, e.post)))
        seen = set()
        for e in edges:
            for end in (e.pre, e.post):
                if isinstance(end, bool) or not isinstance(end, int) or not 0 <= end < n:
                    raise ValidationError(f"edge {e.pre}->{e.post} references neuron outside [0, {n})")
            if (e.pre, e.post) in seen:
                raise ValidationError(f"duplicate edge {e.pre}->{e.post}")
            if isinstance(e.delay, bool) or not isinstance(e.delay, int) or e.delay < 0:
                raise ValidationError(f"edge {e.pre}->{e.post}: delay must be a non-negative integer")
            seen.add((e.pre, e.post))
        thresholds = tuple(Fraction(t) for t in self.thresholds) if self.thresholds else (Fraction(1),) * n
        if len(thresholds) != n:
            raise ValidationError(f"expected {n} thresholds, got {len(thresholds)}")
        if any(t <= 0 for t in thresholds):
            raise ValidationError("thresholds must be positive")
        for name in ("inputs", "outputs"):
            marks = tuple(sorted(set(getattr(self, name))))
            if len(marks) != len(getattr(self, name)):
                raise ValidationError(f"duplicate neuron ids in {name}")
            if any(not isinstance(m, int) or isinstance(m, bool) or not 0 <= m < n for m in marks):
                raise ValidationError(f"{name} references neuron outside [0, {n})")
            object.__setattr__(self, name, marks)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "thresholds", thresholds)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def predecessors(self) -> tuple[tuple[int, ...], ...]:
        """``predecessors[i]`` lists the sources k with an edge k -> i (the m_ik = 1 entries)."""
        preds: list[list[int]] = [[] for _ in range(self.node_count)]
        for e in self.edges:
            preds[e.post].append(e.pre)
        return tuple(tuple(sorted(p)) for p in preds)

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        succ: list[list[int]] = [[] for _ in range(self.node_count)]
        for e in self.edges:
            succ[e.pre].append(e.post)
        return tuple(tuple(sorted(s)) for s in succ)

    @cached_property
    def out_edges(self) -> tuple[tuple[Edge, ...], ...]:
        out: list[list[Edge]] = [[] for _ in range(self.node_count)]
        for e in self.edges:
            out[e.pre].append(e)
        return tuple(tuple(o) for o in out)

    def fan_in(self, neuron: int) -> int:
        return len(self.predecessors[neuron])

    def sources(self) -> list[int]:
        """Neurons with at least one outgoing edge."""
        return [k for k in range(self.node_count) if self.successors[k]]


def _read_document(source) -> dict:
    if hasattr(source, "read"):
        source = source.read()
    if not isinstance(source, (bytes, bytearray, str)):
        raise ParseError(f"unsupported source type {type(source).__name__}")
    try:
        text = bytes(source).decode("utf-8") if not isinstance(source, str) else source
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")
    return doc


def _int_field(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{what}: expected an integer, got {value!r}")
    return value


def load_network(source: bytes | str | IO, format: str = "json") -> Network:
    """Decode and validate a network document.

    Raises ParseError for undecodable input and ValidationError for
    documents that decode but break a structural rule.
    """
    if format != "json":
        raise InvalidParameter(f"unsupported network format {format!r}")
    doc = _read_document(source)
    unknown = set(doc) - _NETWORK_KEYS
    if unknown:
        raise ValidationError(f"unknown network fields: {sorted(unknown)}")
    if "nodes" not in doc or "edges" not in doc:
        raise ValidationError("network document needs 'nodes' and 'edges'")
    n = _int_field(doc["nodes"], "nodes")
    if not isinstance(doc["edges"], list):
        raise ValidationError("'edges' must be a list")
    edges = []
    for idx, raw in enumerate(doc["edges"]):
        if not isinstance(raw, dict):
            raise ValidationError(f"edge #{idx} must be an object")
        extra = set(raw) - _EDGE_KEYS
        if extra:
            raise ValidationError(f"edge #{idx}: unknown fields {sorted(extra)}")
        if "pre" not in raw or "post" not in raw:
            raise ValidationError(f"edge #{idx} needs 'pre' and 'post'")
        edges.append(
            Edge(
                pre=_int_field(raw["pre"], f"edge #{idx} pre"),
                post=_int_field(raw["post"], f"edge #{idx} post"),
                weight=parse_rational(raw.get("weight", 1), f"edge #{idx} weight"),
                delay=_int_field(raw.get("delay", 0), f"edge #{idx} delay"),
            )
        )
    thresholds = doc.get("thresholds")
    if thresholds is None:
        thresholds = ()
    elif not isinstance(thresholds, list):
        raise ValidationError("'thresholds' must be a list")
    else:
        thresholds = tuple(parse_rational(t, "threshold") for t in thresholds)
    marks = {}
    for name in ("inputs", "outputs"):
        raw = doc.get(name, [])
        if not isinstance(raw, list):
            raise ValidationError(f"'{name}' must be a list")
        marks[name] = tuple(_int_field(m, name) for m in raw)
    return Network(
        node_count=n,
        edges=tuple(edges),
        thresholds=thresholds,
        inputs=marks["inputs"],
        outputs=marks["outputs"],
    )


def network_to_dict(net: Network) -> dict:
    return {
        "nodes": net.node_count,
        "edges": [
            {"pre": e.pre, "post": e.post, "weight": rational_to_json(e.weight), "delay": e.delay}
            for e in net.edges
        ],
        "thresholds": [rational_to_json(t) for t in net.thresholds],
        "inputs": list(net.inputs),
        "outputs": list(net.outputs),
    }


def dump_network(net: Network) -> bytes:
    return (json.dumps(network_to_dict(net), indent=1, sort_keys=True) + "\n").encode("utf-8")


def edge_density(net: Network, denominator: str = "square") -> Fraction:
    """Fraction of possible directed edges that are present.

    ``denominator="square"`` divides by N*N (self-loop slots included), the
    convention that reproduces the published network attribute tables;
    ``"ordered_pairs"`` divides by N*(N-1).
    """
    n = net.node_count
    if n < 2:
        raise DegenerateGraph(f"edge density needs at least 2 neurons, got {n}")
    if denominator == "square":
        slots = n * n
    elif denominator == "ordered_pairs":
        slots = n * (n - 1)
    else:
        raise InvalidParameter(f"unknown density denominator {denominator!r}")
    return Fraction(net.edge_count, slots)


def gini_coefficient(values: Sequence[int | float | Fraction]) -> Fraction | float:
    """Gini coefficient via the sorted-rank formula.

    G = sum_i (2i - n - 1) * d_(i) / (n * sum d), ranks i starting at 1.
    Returns 0 for an all-zero (or empty) vector.
    """
    d = sorted(values)
    n = len(d)
    total = sum(d)
    if n == 0 or total == 0:
        return Fraction(0) if all(isinstance(v, (int, Fraction)) for v in d) else 0.0
    num = sum((2 * (i + 1) - n - 1) * v for i, v in enumerate(d))
    if all(isinstance(v, (int, Fraction)) for v in d):
        return Fraction(num) / (n * Fraction(total))
    return num / (n * total)


def degree_vector(net: Network, direction: str) -> list[int]:
    if direction == "incoming":
        return [len(p) for p in net.predecessors]
    if direction == "outgoing":
        return [len(s) for s in net.successors]
    raise InvalidParameter(f"direction must be 'incoming' or 'outgoing', got {direction!r}")


def gini_sparsity(net: Network, direction: str = "incoming") -> Fraction:
    return gini_coefficient(degree_vector(net, direction))


def max_fan_in(net: Network) -> int:
    return max((len(p) for p in net.predecessors), default=0)


def round_metric(value, places: int = 4, mode: str = "round") -> Decimal:
    """Format a metric at fixed decimals: ``round`` (half-even) or ``truncate``."""
    q = Decimal(1).scaleb(-places)
    frac = Fraction(value)
    exact = Decimal(frac.numerator) / Decimal(frac.denominator)
    rounding = {"round": ROUND_HALF_EVEN, "truncate": ROUND_DOWN}.get(mode)
    if rounding is None:
        raise InvalidParameter(f"unknown rounding mode {mode!r}")
    # exact division to 28 significant digits is far beyond the 4-6 places reported
    return exact.quantize(q, rounding=rounding)


def network_metrics(net: Network) -> dict:
    """The per-network attribute row: counts, max fan-in, density, sparsity indices."""
    row = {
        "node_count": net.node_count,
        "edge_count": net.edge_count,
        "max_fan_in": max_fan_in(net),
        "gini_incoming": float(gini_sparsity(net, "incoming")),
        "gini_outgoing": float(gini_sparsity(net, "outgoing")),
    }
    row["edge_density"] = float(edge_density(net)) if net.node_count >= 2 else None
    return row


def from_edge_list(node_count: int, pairs: Iterable[tuple[int, int]], **kwargs) -> Network:
    """Convenience constructor from bare (pre, post) pairs with unit weights."""
    return Network(node_count=node_count, edges=tuple(Edge(p, q) for p, q in pairs), **kwargs)


def load_network_file(path) -> Network:
    with open(path, "rb") as fh:
        return load_network(fh)


def save_network_file(net: Network, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_network(net))


__all__ = [
    "Edge",
    "Network",
    "load_network",
    "dump_network",
    "network_to_dict",
    "edge_density",
    "gini_coefficient",
    "gini_sparsity",
    "degree_vector",
    "max_fan_in",
    "round_metric",
    "network_metrics",
    "from_edge_list",
    "parse_rational",
    "rational_to_json",
    "load_network_file",
    "save_network_file",
]
