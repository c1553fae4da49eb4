"""Seeded synthetic networks and stimuli for trend experiments."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import InvalidParameter
from .network import Edge, Network


def generate_network(
    nodes: int,
    edges: int,
    max_fan_in: int,
    seed: int,
    input_count: int | None = None,
    output_count: int | None = None,
    self_loops: bool = False,
    max_delay: int = 2,
    inhibitory_fraction: float = 0.2,
) -> Network:
    """Uniform random directed edges under a fan-in cap.

    The first ``input_count`` neurons are inputs and receive no edges; the
    last ``output_count`` are outputs. Edges are drawn uniformly from the
    remaining legal (pre, post) pairs until ``edges`` are placed.
    """
    if nodes < 1 or edges < 0 or max_fan_in < 0:
        raise InvalidParameter("nodes must be >= 1 and edges, max_fan_in >= 0")
    rng = np.random.default_rng(seed)
    if input_count is None:
        input_count = max(1, nodes // 10)
    if output_count is None:
        output_count = max(1, nodes // 20)
    if input_count + output_count > nodes:
        raise InvalidParameter("more input/output markers than neurons")
    receivers = np.arange(input_count, nodes)
    cap = min(max_fan_in, nodes - (0 if self_loops else 1))
    capacity = len(receivers) * cap
    if edges > capacity:
        raise InvalidParameter(f"cannot place {edges} edges under fan-in cap {max_fan_in}")
    fan_in = np.zeros(nodes, dtype=np.int64)
    chosen: set[tuple[int, int]] = set()
    out: list[Edge] = []
    while len(out) < edges:
        open_posts = receivers[fan_in[receivers] < cap]
        post = int(open_posts[rng.integers(len(open_posts))])
        pre = int(rng.integers(nodes))
        if (pre == post and not self_loops) or (pre, post) in chosen:
            continue
        chosen.add((pre, post))
        fan_in[post] += 1
        sign = -1 if rng.random() < inhibitory_fraction else 1
        weight = Fraction(sign * int(rng.integers(1, 4)), 2)
        delay = int(rng.integers(0, max_delay + 1))
        out.append(Edge(pre, post, weight, delay))
    return Network(
        node_count=nodes,
        edges=out,
        inputs=list(range(input_count)),
        outputs=list(range(nodes - output_count, nodes)),
    )


def sparse_benchmark_net(seed: int, nodes: int | None = None, density: float = 0.01, max_fan_in: int = 15) -> Network:
    """Sparse benchmark net: 100-250 neurons, density about 0.01, bounded fan-in."""
    rng = np.random.default_rng(seed)
    if nodes is None:
        nodes = int(rng.integers(100, 251))
    edges = int(round(density * nodes * nodes))
    return generate_network(nodes, edges, max_fan_in, seed=int(rng.integers(2**31)))
