"""Relative-improvement comparisons between runs."""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import ReferenceMissing
from .network import rational_to_json, parse_rational

DEFAULT_METRICS = ("area", "total_routes", "global_routes", "weighted_global_packets")
REPORT_COLUMNS = ("label", "metric", "value", "reference", "reference_value", "improvement_pct")


def _as_dict(run) -> dict:
    if isinstance(run, Mapping):
        return dict(run)
    return run.to_dict()


def improvement_pct(value, reference) -> float | None:
    """Percent reduction of ``value`` relative to ``reference`` (positive = better)."""
    if value is None or reference is None:
        return None
    value, reference = Fraction(value), Fraction(reference)
    if reference == 0:
        return 0.0 if value == 0 else None
    return float((reference - value) / reference * 100)


def compare_report(runs: Sequence, reference: str, metrics: Iterable[str] = DEFAULT_METRICS) -> list[dict]:
    """One row per (run, metric) with the improvement over the run labelled ``reference``."""
    docs = [_as_dict(r) for r in runs]
    ref = next((d for d in docs if d.get("label") == reference), None)
    if ref is None:
        raise ReferenceMissing(f"no run labelled {reference!r} among {[d.get('label') for d in docs]}")
    rows = []
    for d in docs:
        for metric in metrics:
            value = d.get(metric)
            base = ref.get(metric)
            if value is None and base is None:
                continue
            v = None if value is None else parse_rational(value, metric)
            b = None if base is None else parse_rational(base, metric)
            pct = improvement_pct(v, b)
            rows.append({
                "label": d.get("label"),
                "metric": metric,
                "value": None if v is None else rational_to_json(v),
                "reference": reference,
                "reference_value": None if b is None else rational_to_json(b),
                "improvement_pct": None if pct is None else round(pct, 6),
            })
    return rows


def report_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: "" if r.get(k) is None else r[k] for k in REPORT_COLUMNS})
    return buf.getvalue()


def report_to_json(rows: Sequence[dict]) -> str:
    return json.dumps(list(rows), indent=1, sort_keys=True) + "\n"
