"""0/1 linear models and the crossbar mapping formulation.

A mapping model places every neuron ``i`` on one crossbar ``j`` (``x[i, j]``),
marks which source neurons ``k`` need a word-line on crossbar ``j``
(``s[k, j]``), which crossbars are enabled (``y[j]``) and, for global route
counting, which axons are local (``b[k, j]``: ``k`` also lives on ``j``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import (
    InfeasibleByFanIn,
    InvalidParameter,
    ModelTooLarge,
    NegativeWeight,
    NonIntegerizableCost,
    ParseError,
)
from ._util import gc_paused
from .inventory import Inventory
from .network import Network

DEFAULT_MAX_VARIABLES = 5_000_000
COST_SCALE_LIMIT = 10**9


@dataclass(frozen=True, slots=True)
class LinearConstraint:
    """``lower <= sum(coef * var) <= upper``; a ``None`` bound is infinite."""

    terms: tuple[tuple[int, int], ...]
    lower: int | None = None
    upper: int | None = None
    tag: tuple | None = None

    def activity(self, values: Sequence[int]) -> int:
        return sum(a * values[v] for a, v in self.terms)

    def satisfied(self, values: Sequence[int]) -> bool:
        act = self.activity(values)
        if self.lower is not None and act < self.lower:
            return False
        if self.upper is not None and act > self.upper:
            return False
        return True


class IlpModel:
    """A pure 0/1 minimization model with tagged variables and constraints."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_tags: list[tuple] = []
        self._tag_index: dict[tuple, int] = {}
        self.constraints: list[LinearConstraint] = []
        self.objective: dict[int, int] = {}
        # objective value / scale gives the model quantity (e.g. area in cost units)
        self.objective_scale: int = 1

    @property
    def num_vars(self) -> int:
        return len(self.var_tags)

    def add_var(self, tag: tuple | None = None) -> int:
        v = len(self.var_tags)
        tag = ("v", v) if tag is None else tuple(tag)
        if tag in self._tag_index:
            raise InvalidParameter(f"duplicate variable tag {tag}")
        self.var_tags.append(tag)
        self._tag_index[tag] = v
        return v

    def var(self, tag: tuple) -> int:
        return self._tag_index[tuple(tag)]

    def has_var(self, tag: tuple) -> bool:
        return tuple(tag) in self._tag_index

    def add_constraint(self, terms: Iterable[tuple[int, int]], lower=None, upper=None, tag=None) -> LinearConstraint:
        merged: dict[int, int] = {}
        for coef, v in terms:
            if not 0 <= v < self.num_vars:
                raise InvalidParameter(f"constraint references unknown variable {v}")
            merged[v] = merged.get(v, 0) + int(coef)
        clean = tuple((a, v) for v, a in merged.items() if a != 0)
        con = LinearConstraint(clean, lower, upper, tag)
        self.constraints.append(con)
        return con

    def add_row(self, terms: tuple[tuple[int, int], ...], lower=None, upper=None, tag=None) -> None:
        """Fast path for builders: ``terms`` must already be merged, non-zero and in range."""
        self.constraints.append(LinearConstraint(terms, lower, upper, tag))

    def set_objective(self, coefs: Mapping[int, int], scale: int = 1) -> None:
        for v in coefs:
            if not 0 <= v < self.num_vars:
                raise InvalidParameter(f"objective references unknown variable {v}")
        self.objective = {v: int(c) for v, c in sorted(coefs.items()) if c != 0}
        self.objective_scale = scale

    def objective_value(self, values: Sequence[int]) -> int:
        return sum(c * values[v] for v, c in self.objective.items())

    def violations(self, values: Sequence[int]) -> list[int]:
        """Indices of constraints broken by a full 0/1 assignment."""
        return [idx for idx, c in enumerate(self.constraints) if not c.satisfied(values)]

    def is_feasible(self, values: Sequence[int]) -> bool:
        if len(values) != self.num_vars or any(v not in (0, 1) for v in values):
            return False
        return not self.violations(values)

    def var_name(self, v: int) -> str:
        return "_".join(str(p) for p in self.var_tags[v])

    def structure(self) -> tuple:
        """Hashable summary used to compare models built from the same inputs."""
        return (
            tuple(self.var_tags),
            tuple((c.terms, c.lower, c.upper, c.tag) for c in self.constraints),
            tuple(sorted(self.objective.items())),
            self.objective_scale,
        )


@dataclass
class ModelOptions:
    symmetry_break: bool = True
    max_variables: int = DEFAULT_MAX_VARIABLES


@dataclass
class MappingVars:
    """Variable handles of a mapping model, keyed by their coordinates."""

    neurons: int
    crossbars: int
    x: dict[tuple[int, int], int] = field(default_factory=dict)
    s: dict[tuple[int, int], int] = field(default_factory=dict)
    y: dict[int, int] = field(default_factory=dict)
    b: dict[tuple[int, int], int] = field(default_factory=dict)


def check_fan_in(net: Network, inv: Inventory) -> None:
    widest = inv.max_inputs()
    for i in range(net.node_count):
        f = net.fan_in(i)
        if f > widest:
            raise InfeasibleByFanIn(i, f, widest)


def build_mapping_model(net: Network, inv: Inventory, opts: ModelOptions | None = None) -> tuple[IlpModel, MappingVars]:
    """Construct the placement, axon-sharing and capacity constraints.

    * every neuron on exactly one crossbar;
    * outputs used on ``j`` at most ``N_j * y_j``;
    * ``s[k, j]`` at most the number of ``k``'s successors placed on ``j``;
    * ``s[k, j] >= x[i, j]`` for each edge ``k -> i``;
    * inputs used on ``j`` at most ``A_j * y_j``.

    ``s`` variables exist only for neurons with outgoing edges. With
    ``opts.symmetry_break`` consecutive identical crossbars are enabled in
    order (``y[j] >= y[j+1]``).
    """
    with gc_paused():
        return _build_mapping_model(net, inv, opts)


def _build_mapping_model(net: Network, inv: Inventory, opts: ModelOptions | None) -> tuple[IlpModel, MappingVars]:
    opts = opts or ModelOptions()
    n = net.node_count
    J = len(inv)
    if J == 0 and n > 0:
        raise InvalidParameter("inventory is empty but the network has neurons")
    check_fan_in(net, inv)
    sources = net.sources()
    estimate = n * J + len(sources) * J + J
    if estimate > opts.max_variables:
        raise ModelTooLarge(f"mapping model needs {estimate} variables (limit {opts.max_variables})")

    model = IlpModel(name="mapping")
    mv = MappingVars(neurons=n, crossbars=J)
    for i in range(n):
        for j in range(J):
            mv.x[i, j] = model.add_var(("x", i, j))
    for k in sources:
        for j in range(J):
            mv.s[k, j] = model.add_var(("s", k, j))
    for j in range(J):
        mv.y[j] = model.add_var(("y", j))

    x, sv, y = mv.x, mv.s, mv.y
    add = model.add_row
    for i in range(n):
        add(tuple((1, x[i, j]) for j in range(J)), 1, 1, ("assign", i))
    for j in range(J):
        add(tuple((1, x[i, j]) for i in range(n)) + ((-inv[j].outputs, y[j]),), None, 0, ("out_cap", j))
    for k in sources:
        succ = net.successors[k]
        for j in range(J):
            add(((1, sv[k, j]),) + tuple((-1, x[i, j]) for i in succ), None, 0, ("axon_upper", k, j))
    for e in net.edges:
        k, i = e.pre, e.post
        for j in range(J):
            add(((1, sv[k, j]), (-1, x[i, j])), 0, None, ("axon_lower", k, i, j))
    for j in range(J):
        add(tuple((1, sv[k, j]) for k in sources) + ((-inv[j].inputs, y[j]),), None, 0, ("in_cap", j))
    if opts.symmetry_break:
        for run in inv.identical_runs():
            for j in list(run)[:-1]:
                add(((1, y[j]), (-1, y[j + 1])), 0, None, ("symmetry", j))
    return model, mv


def integer_costs(costs: Sequence[Fraction], limit: int = COST_SCALE_LIMIT) -> tuple[list[int], int]:
    """Scale rational costs to integers by their least common denominator."""
    scale = 1
    for c in costs:
        scale = math.lcm(scale, Fraction(c).denominator)
        if scale > limit:
            raise NonIntegerizableCost(f"cost denominators need scale {scale} > {limit}")
    return [int(Fraction(c) * scale) for c in costs], scale


def add_area_objective(model: IlpModel, mv: MappingVars, inv: Inventory) -> None:
    """Minimize the cost-weighted count of enabled crossbars."""
    scaled, scale = integer_costs(inv.costs)
    model.set_objective({mv.y[j]: scaled[j] for j in range(len(inv))}, scale=scale)


def _check_weights(weights, n: int) -> list[int]:
    if weights is None:
        return [1] * n
    w = list(weights)
    if len(w) != n:
        raise InvalidParameter(f"expected {n} weights, got {len(w)}")
    out = []
    for k, value in enumerate(w):
        if isinstance(value, bool) or int(value) != value:
            raise InvalidParameter(f"weight of neuron {k} must be an integer count, got {value!r}")
        if value < 0:
            raise NegativeWeight(f"neuron {k} has negative weight {value}")
        out.append(int(value))
    return out


def add_locality_vars(model: IlpModel, mv: MappingVars, sources: Iterable[int] | None = None) -> None:
    """Add ``b[k, j] = x[k, j] AND s[k, j]`` for the given sources (default: all)."""
    wanted = None if sources is None else set(sources)
    for (k, j), s in sorted(mv.s.items()):
        if (k, j) in mv.b or (wanted is not None and k not in wanted):
            continue
        b = model.add_var(("b", k, j))
        mv.b[k, j] = b
        x = mv.x[k, j]
        if x == s:
            raise InvalidParameter("locality needs distinct placement and axon variables")
        model.add_row(((1, b), (-1, s), (-1, x)), -1, None, ("local_and", k, j))
        model.add_row(((1, b), (-1, s)), None, 0, ("local_s", k, j))
        model.add_row(((1, b), (-1, x)), None, 0, ("local_x", k, j))


def add_route_objectives(model: IlpModel, mv: MappingVars, mode: str = "global_routes", weights=None) -> None:
    """Route-count objectives.

    ``total_routes`` minimizes the (weighted) number of word-lines in use.
    ``global_routes`` subtracts local axons so only inter-crossbar routes
    count. With ``weights`` every term of source ``k`` is scaled by
    ``weights[k]`` and zero-weight sources are left out entirely, including
    their locality variables.
    """
    if mode not in ("total_routes", "global_routes"):
        raise InvalidParameter(f"unknown route objective mode {mode!r}")
    w = _check_weights(weights, mv.neurons)
    coefs: dict[int, int] = {}
    if mode == "global_routes":
        add_locality_vars(model, mv, sources=[k for k in range(mv.neurons) if w[k] > 0])
    for (k, j), s in sorted(mv.s.items()):
        if w[k] == 0:
            continue
        coefs[s] = w[k]
        if mode == "global_routes":
            coefs[mv.b[k, j]] = -w[k]
    model.set_objective(coefs, scale=1)


def freeze_enabled(model: IlpModel, mv: MappingVars, enabled: Iterable[int]) -> None:
    """Forbid every crossbar outside ``enabled``; the rest stay free."""
    keep = set(enabled)
    for j in range(mv.crossbars):
        if j not in keep:
            model.add_constraint([(1, mv.y[j])], None, 0, ("freeze", j))


# LP text format ------------------------------------------------------------

def _fmt_terms(terms: Iterable[tuple[int, int]], names: Sequence[str]) -> str:
    parts = []
    for coef, v in terms:
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = names[v] if mag == 1 else f"{mag} {names[v]}"
        parts.append(f"{sign} {body}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def _row_name(idx: int, tag: tuple | None) -> str:
    if not tag:
        return f"r{idx}"
    return f"r{idx}." + ".".join(str(p) for p in tag)


def _row_tag(name: str) -> tuple | None:
    parts = name.split(".")
    if len(parts) < 2:
        return None
    return tuple(int(p) if p.lstrip("-").isdigit() else p for p in parts[1:])


def dump_lp(model: IlpModel) -> str:
    """CPLEX-style LP text; ranged rows are split into two single-sided rows."""
    names = [model.var_name(v) for v in range(model.num_vars)]
    lines = [f"\\ {model.name} (objective scale {model.objective_scale})", "Minimize"]
    lines.append(" obj: " + _fmt_terms(((c, v) for v, c in sorted(model.objective.items())), names))
    lines.append("Subject To")
    for idx, con in enumerate(model.constraints):
        lhs = _fmt_terms(con.terms, names)
        row = _row_name(idx, con.tag)
        if con.lower is None and con.upper is None:
            lines.append(f" {row}_lo: {lhs} >= -{10**12}")
            continue
        if con.lower is not None and con.upper is not None and con.lower == con.upper:
            lines.append(f" {row}: {lhs} = {con.upper}")
            continue
        if con.lower is not None:
            suffix = "_lo" if con.upper is not None else ""
            lines.append(f" {row}{suffix}: {lhs} >= {con.lower}")
        if con.upper is not None:
            suffix = "_hi" if con.lower is not None else ""
            lines.append(f" {row}{suffix}: {lhs} <= {con.upper}")
    lines.append("Binaries")
    for name in names:
        lines.append(f" {name}")
    lines.append("End")
    return "\n".join(lines) + "\n"


_TERM = re.compile(r"([+-])\s*(\d+)?\s*([A-Za-z_][A-Za-z0-9_]*)")


def _parse_expr(text: str, index: dict[str, int]) -> list[tuple[int, int]]:
    text = text.strip()
    if text in ("", "0"):
        return []
    if text[0] not in "+-":
        text = "+ " + text
    terms = []
    pos = 0
    for m in _TERM.finditer(text):
        if text[pos:m.start()].strip():
            raise ParseError(f"unexpected text {text[pos:m.start()]!r} in LP expression")
        pos = m.end()
        sign = -1 if m.group(1) == "-" else 1
        coef = int(m.group(2)) if m.group(2) else 1
        name = m.group(3)
        if name not in index:
            raise ParseError(f"undeclared variable {name!r}")
        terms.append((sign * coef, index[name]))
    if text[pos:].strip():
        raise ParseError(f"unexpected trailing text {text[pos:]!r} in LP expression")
    return terms


def parse_lp(text: str) -> IlpModel:
    """Read text written by :func:`dump_lp` back into a model.

    Variable tags are rebuilt from names when they follow the ``x_i_j``
    pattern, so placement-aware search still applies to parsed models.
    """
    section = None
    objective_line = None
    rows: list[tuple[str, str]] = []
    binaries: list[str] = []
    scale = 1
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\"):
            m = re.search(r"objective scale (\d+)", line)
            if m:
                scale = int(m.group(1))
            continue
        low = line.lower()
        if low in ("minimize", "subject to", "binaries", "end"):
            section = low
            continue
        if section == "minimize":
            objective_line = line
        elif section == "subject to":
            if ":" not in line:
                raise ParseError(f"constraint row without a name: {line!r}")
            name, body = line.split(":", 1)
            rows.append((name.strip(), body))
        elif section == "binaries":
            binaries.extend(line.split())
        else:
            raise ParseError(f"text outside any LP section: {line!r}")
    if section != "end":
        raise ParseError("LP text is truncated (no End)")
    model = IlpModel(name="parsed")
    index: dict[str, int] = {}
    for name in binaries:
        parts = name.split("_")
        tag: tuple
        if parts[0] in ("x", "s", "b", "y") and all(p.isdigit() for p in parts[1:]) and len(parts) > 1:
            tag = (parts[0], *(int(p) for p in parts[1:]))
        elif parts[0] == "v" and len(parts) == 2 and parts[1].isdigit():
            tag = ("v", int(parts[1]))
        else:
            tag = (name,)
        index[name] = model.add_var(tag)
    if objective_line is None or ":" not in objective_line:
        raise ParseError("missing objective row")
    obj_terms = _parse_expr(objective_line.split(":", 1)[1], index)
    model.set_objective({v: c for c, v in obj_terms}, scale=scale)
    pending: dict[str, list] = {}
    for name, body in rows:
        m = re.match(r"(.*?)(<=|>=|=)\s*(-?\d+)\s*$", body)
        if not m:
            raise ParseError(f"cannot read constraint {name!r}")
        terms = _parse_expr(m.group(1), index)
        op, rhs = m.group(2), int(m.group(3))
        lower = rhs if op in (">=", "=") else None
        upper = rhs if op in ("<=", "=") else None
        if name.endswith("_lo") or name.endswith("_hi"):
            base = name[:-3]
            slot = pending.setdefault(base, [terms, None, None])
            if name.endswith("_lo"):
                slot[1] = lower
            else:
                slot[2] = upper
            if slot[1] is not None and slot[2] is not None:
                model.add_constraint(slot[0], slot[1], slot[2], _row_tag(base))
                del pending[base]
            continue
        model.add_constraint(terms, lower, upper, _row_tag(name))
    if pending:
        raise ParseError(f"ranged rows missing a side: {sorted(pending)}")
    return model
