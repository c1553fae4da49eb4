"""Discrete-time integrate-and-fire simulation, spike profiles and packet counting."""

from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DigestMismatch, InvalidParameter, InvalidStimulus, ParseError, UnmappedNeuron
from .network import Network, parse_rational, rational_to_json


@dataclass(frozen=True)
class StimulusEvent:
    t: int
    neuron: int
    charge: Fraction


@dataclass(frozen=True)
class Stimulus:
    horizon: int
    events: tuple[StimulusEvent, ...] = ()

    def __post_init__(self):
        if isinstance(self.horizon, bool) or not isinstance(self.horizon, int) or self.horizon < 0:
            raise InvalidStimulus(f"horizon must be a non-negative integer, got {self.horizon!r}")
        evs = tuple(sorted(self.events, key=lambda e: (e.t, e.neuron, e.charge)))
        for e in evs:
            if not 0 <= e.t < self.horizon:
                raise InvalidStimulus(f"event at t={e.t} outside horizon {self.horizon}")
        object.__setattr__(self, "events", evs)

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "events": [{"t": e.t, "neuron": e.neuron, "charge": rational_to_json(e.charge)} for e in self.events],
        }

    def digest(self) -> str:
        return _sha(self.to_dict())


@dataclass(frozen=True)
class SimConfig:
    """Neuron model knobs; the defaults give plain non-leaky integrate-and-fire.

    ``leak`` is the fraction of potential lost per step; ``refractory`` is the
    number of steps after a spike during which input is ignored.
    """

    leak: Fraction = Fraction(0)
    refractory: int = 0
    check_inputs: bool = True


@dataclass(frozen=True)
class SpikeProfile:
    counts: tuple[int, ...]
    horizon: int
    stimulus_digest: str = ""

    def to_dict(self) -> dict:
        return {"counts": list(self.counts), "horizon": self.horizon, "stimulus_digest": self.stimulus_digest}


@dataclass
class SimEvents:
    """Chronological (t, neuron) firings."""

    firings: list[tuple[int, int]] = field(default_factory=list)

    def counts(self, n: int) -> list[int]:
        c = [0] * n
        for _, k in self.firings:
            c[k] += 1
        return c


@dataclass(frozen=True)
class PacketStats:
    global_packets: int
    local_packets: int


def _sha(doc) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")).hexdigest()


def validate_stimulus(net: Network, stim: Stimulus, config: SimConfig | None = None) -> None:
    config = config or SimConfig()
    # a network without declared inputs may be driven anywhere
    allowed = set(net.inputs) if config.check_inputs and net.inputs else set(range(net.node_count))
    for e in stim.events:
        if not 0 <= e.neuron < net.node_count:
            raise InvalidStimulus(f"stimulus targets missing neuron {e.neuron}")
        if e.neuron not in allowed:
            raise InvalidStimulus(f"stimulus targets neuron {e.neuron}, which is not an input neuron")


def simulate(net: Network, stim: Stimulus, config: SimConfig | None = None) -> tuple[SpikeProfile, SimEvents]:
    """Run the network for ``stim.horizon`` steps.

    Each step: add scheduled charges and arriving spikes, apply leak, fire
    every neuron at or above threshold (all at once), reset those to zero.
    A spike sent at ``t`` over an edge with delay ``d`` arrives at
    ``t + max(d, 1)``.
    """
    config = config or SimConfig()
    if not 0 <= config.leak <= 1:
        raise InvalidParameter("leak must lie in [0, 1]")
    if config.refractory < 0:
        raise InvalidParameter("refractory period must be non-negative")
    validate_stimulus(net, stim, config)
    n = net.node_count
    potential = [Fraction(0)] * n
    ready_at = [0] * n
    pending: dict[int, dict[int, Fraction]] = defaultdict(lambda: defaultdict(Fraction))
    schedule: dict[int, list[StimulusEvent]] = defaultdict(list)
    for e in stim.events:
        schedule[e.t].append(e)
    thresholds = net.thresholds
    out_edges = net.out_edges
    keep = 1 - Fraction(config.leak)
    events = SimEvents()
    for t in range(stim.horizon):
        incoming = pending.pop(t, {})
        for e in schedule.get(t, ()):
            incoming[e.neuron] = incoming.get(e.neuron, Fraction(0)) + e.charge
        for i, q in incoming.items():
            if t >= ready_at[i]:
                potential[i] += q
        fired = []
        for i in range(n):
            if keep != 1:
                potential[i] *= keep
            if t >= ready_at[i] and potential[i] >= thresholds[i]:
                fired.append(i)
        for i in fired:
            potential[i] = Fraction(0)
            ready_at[i] = t + 1 + config.refractory
            events.firings.append((t, i))
            for e in out_edges[i]:
                pending[t + max(e.delay, 1)][e.post] += e.weight
    counts = tuple(events.counts(n))
    return SpikeProfile(counts, stim.horizon, stim.digest()), events


def _successor_crossbars(net: Network, assignment: Sequence[int]) -> list[set[int]]:
    return [{assignment[e.post] for e in net.out_edges[k]} for k in range(net.node_count)]


def count_packets(mapping, events: SimEvents, net: Network) -> PacketStats:
    """One packet per firing per distinct crossbar holding a successor.

    Packets to the firing neuron's own crossbar are local; the rest are global.
    """
    assignment = getattr(mapping, "assignment", mapping)
    if len(assignment) != net.node_count or any(a is None or a < 0 for a in assignment):
        missing = next((i for i in range(net.node_count) if i >= len(assignment) or assignment[i] is None or assignment[i] < 0), None)
        raise UnmappedNeuron(f"neuron {missing} has no crossbar")
    targets = _successor_crossbars(net, assignment)
    glob = loc = 0
    for _, k in events.firings:
        tk = targets[k]
        if assignment[k] in tk:
            loc += 1
            glob += len(tk) - 1
        else:
            glob += len(tk)
    return PacketStats(glob, loc)


# serialization -----------------------------------------------------------

def _profile_body(p: SpikeProfile) -> dict:
    return {"counts": list(p.counts), "horizon": p.horizon, "stimulus_digest": p.stimulus_digest}


def save_profile(profile: SpikeProfile) -> bytes:
    body = _profile_body(profile)
    body["digest"] = _sha(_profile_body(profile))
    return (json.dumps(body, indent=1, sort_keys=True) + "\n").encode("utf-8")


def load_profile(data: bytes | str) -> SpikeProfile:
    try:
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"malformed profile: {exc}") from exc
    if not isinstance(doc, dict) or not {"counts", "horizon", "digest"} <= set(doc):
        raise ParseError("profile needs counts, horizon and digest")
    counts = doc["counts"]
    if not isinstance(counts, list) or not all(isinstance(c, int) and not isinstance(c, bool) and c >= 0 for c in counts):
        raise ParseError("profile counts must be non-negative integers")
    if not isinstance(doc["horizon"], int):
        raise ParseError("profile horizon must be an integer")
    profile = SpikeProfile(tuple(counts), doc["horizon"], str(doc.get("stimulus_digest", "")))
    if _sha(_profile_body(profile)) != doc["digest"]:
        raise DigestMismatch("profile digest does not match its contents")
    return profile


def profile_io(profile_or_bytes, direction: str):
    """``save`` turns a profile into bytes; ``load`` verifies and decodes bytes."""
    if direction == "save":
        return save_profile(profile_or_bytes)
    if direction == "load":
        return load_profile(profile_or_bytes)
    raise InvalidParameter(f"direction must be 'save' or 'load', got {direction!r}")


def stimulus_from_dict(doc) -> Stimulus:
    if not isinstance(doc, dict) or set(doc) - {"horizon", "events"} or "horizon" not in doc:
        raise ParseError("stimulus must be {\"horizon\": T, \"events\": [...]}")
    events = []
    for idx, raw in enumerate(doc.get("events", [])):
        if not isinstance(raw, dict) or set(raw) - {"t", "neuron", "charge"} or not {"t", "neuron"} <= set(raw):
            raise ParseError(f"stimulus event #{idx} must have t, neuron and optional charge")
        t, neuron = raw["t"], raw["neuron"]
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (t, neuron)):
            raise ParseError(f"stimulus event #{idx}: t and neuron must be integers")
        events.append(StimulusEvent(t, neuron, parse_rational(raw.get("charge", 1), f"event #{idx} charge")))
    return Stimulus(doc["horizon"], tuple(events))


def load_stimulus(data: bytes | str) -> Stimulus:
    try:
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"malformed stimulus: {exc}") from exc
    return stimulus_from_dict(doc)


def dump_stimulus(stim: Stimulus) -> bytes:
    return (json.dumps(stim.to_dict(), indent=1, sort_keys=True) + "\n").encode("utf-8")


def random_stimulus(net: Network, horizon: int, rate: float, seed: int, charge=Fraction(1)) -> Stimulus:
    """Each input neuron receives ``charge`` at each step with probability ``rate``."""
    rng = np.random.default_rng(seed)
    inputs = list(net.inputs)
    events = []
    if inputs and horizon > 0:
        hits = rng.random((horizon, len(inputs))) < rate
        for t, col in zip(*np.nonzero(hits)):
            events.append(StimulusEvent(int(t), inputs[int(col)], Fraction(charge)))
    return Stimulus(horizon, tuple(events))


def split_stimulus(stim: Stimulus, fraction: float, windows: int = 100) -> tuple[Stimulus, Stimulus]:
    """Cut the horizon into windows and keep the first ``fraction`` of them as a sample.

    Returns (sample, rest); both keep the original horizon so their profiles
    stay comparable.
    """
    if not 0 < fraction < 1:
        raise InvalidParameter("fraction must lie strictly between 0 and 1")
    width = max(1, -(-stim.horizon // windows))
    keep_windows = max(1, int(round(windows * fraction)))
    cut = keep_windows * width
    sample = tuple(e for e in stim.events if e.t < cut)
    rest = tuple(e for e in stim.events if e.t >= cut)
    return Stimulus(stim.horizon, sample), Stimulus(stim.horizon, rest)


def relative_packet_error(predicted: int, actual: int) -> float:
    """|predicted - actual| / actual, with 0/0 taken as 0."""
    if actual == 0:
        return 0.0 if predicted == 0 else float("inf")
    return abs(predicted - actual) / actual
