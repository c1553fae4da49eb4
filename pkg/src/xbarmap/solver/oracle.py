"""Exhaustive enumeration over every 0/1 assignment (test oracle).

Variables are split into a low and a high half. Each half's activity
contributions are tabulated once; rows touching only one half are checked on
that half's table, which discards most codes before the cross product is
formed. Every surviving (low, high) pair is then checked against all rows.
"""

from __future__ import annotations

import numpy as np

from ..errors import TooLargeForOracle
from ..ilp import IlpModel
from .search import Incumbent, SolveResult, Status

ORACLE_MAX_VARS = 24
_BLOCK_ELEMS = 1 << 22


def _half_table(a: np.ndarray, c: np.ndarray, cols: range):
    k = len(cols)
    codes = np.arange(1 << k, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(k, dtype=np.int64)[None, :]) & 1
    return bits @ a[:, cols.start:cols.stop].T, bits @ c[cols.start:cols.stop]


def brute_force(model: IlpModel) -> SolveResult:
    """Return the exact optimum; ties go to the smallest code (bit v = variable v)."""
    n = model.num_vars
    if n > ORACLE_MAX_VARS:
        raise TooLargeForOracle(f"{n} variables exceeds the oracle limit of {ORACLE_MAX_VARS}")
    m = len(model.constraints)
    a = np.zeros((m, n), dtype=np.int64)
    big = 1 << 40
    lo = np.full(m, -big, dtype=np.int64)
    hi = np.full(m, big, dtype=np.int64)
    for r, con in enumerate(model.constraints):
        for coef, v in con.terms:
            a[r, v] += coef
        if con.lower is not None:
            lo[r] = con.lower
        if con.upper is not None:
            hi[r] = con.upper
    c = np.zeros(n, dtype=np.int64)
    for v, coef in model.objective.items():
        c[v] = coef

    nl = n // 2
    low, high = range(0, nl), range(nl, n)
    tl, ol = _half_table(a, c, low)
    th, oh = _half_table(a, c, high)
    nz = a != 0
    only_low = ~nz[:, nl:].any(axis=1)
    only_high = ~nz[:, :nl].any(axis=1)
    keep_l = np.all((tl[:, only_low] >= lo[only_low]) & (tl[:, only_low] <= hi[only_low]), axis=1)
    keep_h = np.all((th[:, only_high] >= lo[only_high]) & (th[:, only_high] <= hi[only_high]), axis=1)
    lidx = np.nonzero(keep_l)[0]
    hidx = np.nonzero(keep_h)[0]
    mixed = ~(only_low | only_high)
    tl_m, th_m = tl[lidx][:, mixed], th[hidx][:, mixed]
    lo_m, hi_m = lo[mixed], hi[mixed]

    best = None  # (objective, code)
    per = max(1, _BLOCK_ELEMS // max(1, len(lidx) * max(1, int(mixed.sum()))))
    for start in range(0, len(hidx), per):
        hs = slice(start, start + per)
        act = th_m[hs][:, None, :] + tl_m[None, :, :]
        ok = np.all((act >= lo_m) & (act <= hi_m), axis=2)
        hh, ll = np.nonzero(ok)
        if hh.size == 0:
            continue
        obj = oh[hidx[hs]][hh] + ol[lidx][ll]
        codes = (hidx[hs][hh] << nl) | lidx[ll]
        k = np.lexsort((codes, obj))[0]
        cand = (int(obj[k]), int(codes[k]))
        if best is None or cand < best:
            best = cand
    work = 1 << n
    if best is None:
        return SolveResult(Status.INFEASIBLE, None, None, work, [], 0)
    values = tuple((best[1] >> v) & 1 for v in range(n))
    return SolveResult(Status.OPTIMAL, values, best[0], work, [Incumbent(work, best[0], values)], 0)
