"""Reproduce the analytic cells of the method-comparison tables.

Tables are keyed 1-4: asymptotic constants, cost, smallest gradient and
final gradient. The per-N tables use the reciprocal convention: a cell holds
``LR^2 / (f - f*)`` or ``LR / ||grad f||``. Only cells with a closed form that is known to be tight
are filled (GM and OGM); the rest need an external SDP solve and are marked
``external``. Measured columns come from the exact worst-case runs.
"""
from __future__ import annotations

import csv
import io
import json
from typing import Sequence

import numpy as np

from .bounds import Metric, asymptotic_table, bound
from .methods import Family, MethodSpec, run
from .oracles import make_huber_psi, make_quadratic_phi, unit_start

DEFAULT_NS = (1, 2, 4, 10, 20, 30, 40, 47, 50)
TABLE_NAMES = {"asymptotic": 1, "cost": 2, "min-grad": 3, "final-grad": 4}
EXTERNAL = "external"

_HEADERS = {
    2: "reciprocal of the cost: LR^2 / (f(x_N) - f*)",
    3: "reciprocal of the smallest gradient norm: LR / min_i ||grad f(x_i)||",
    4: "reciprocal of the final gradient norm: LR / ||grad f(x_N)|| (and y_N)",
}
_COLUMNS = {
    2: ["GM", "FGM", "OGM", "OGM_M", "OGM_OG", "OGM_A4"],
    3: ["GM", "FGM", "OGM", "OGM_M", "OGM_OG", "OGM_A4"],
    4: ["GM", "FGM_y", "FGM_x", "OGM_y", "OGM_x", "OGM_M", "OGM_OG", "OGM_A4_y", "OGM_A4_x"],
}


def ogm_worstcase_gradient(N: int, L: float = 1.0, R: float = 1.0, d: int = 1):
    """OGM on ``(L/2)||x||^2`` from ``R e_1``; returns the trace."""
    phi = make_quadratic_phi(L, d)
    return run(MethodSpec(Family.OGM1, N), phi, unit_start(phi, R))


def gm_worstcase_gradient(N: int, L: float = 1.0, R: float = 1.0, d: int = 1):
    """GM on the Huber function of kink radius ``R/(N+1)`` from ``R e_1``."""
    psi = make_huber_psi(N, R, L, d)
    return run(MethodSpec(Family.GM, N), psi, unit_start(psi, R))


def _analytic(which: int, col: str, N: int):
    if which == 2:
        if col == "GM":
            return bound("GM", Metric.COST_FINAL_X, N).reciprocal
        if col == "OGM":
            return bound("OGM", Metric.COST_FINAL_X, N).reciprocal
    if which == 3:
        if col == "GM":
            return bound("GM", Metric.LOWER_BOUND, N).reciprocal
        if col == "OGM":
            return bound("OGM", Metric.GRAD_SMALLEST, N).reciprocal
    if which == 4:
        if col == "GM":
            return bound("GM", Metric.LOWER_BOUND, N).reciprocal
        if col == "OGM_x":
            return bound("OGM", Metric.GRAD_FINAL, N).reciprocal
    return None


def _measured(which: int, N: int) -> dict:
    if which == 2:
        return {}
    gm = gm_worstcase_gradient(N)
    ogm = ogm_worstcase_gradient(N)
    if which == 3:
        return {"GM_measured": 1 / gm.min_grad_norm_x(), "OGM_measured": 1 / ogm.min_grad_norm_x()}
    return {"GM_measured": 1 / float(gm.gnorm_x[-1]), "OGM_x_measured": 1 / float(ogm.gnorm_x[-1])}


def _fmt(v) -> str:
    return EXTERNAL if v is None else f"{v:.10g}"


def table_rows(which: int, Ns: Sequence[int] = DEFAULT_NS) -> list:
    """One dict per N; values are floats or the string ``external``."""
    if which not in _COLUMNS:
        raise ValueError(f"table {which} has no per-N rows; choose 2, 3 or 4")
    rows = []
    for N in Ns:
        row = {"N": int(N)}
        for col in _COLUMNS[which]:
            v = _analytic(which, col, N)
            row[col] = EXTERNAL if v is None else v
        row.update(_measured(which, N))
        rows.append(row)
    return rows


def table1_rows(N: int = 10 ** 4, a: float = 4.0) -> list:
    out = []
    for r in asymptotic_table(N, a):
        out.append({"method": r.method, "cost_const": r.cost_const, "cost_rate": r.cost_rate,
                    "cost_at_N": r.cost_limit, "grad_const": r.grad_const,
                    "grad_rate": r.grad_rate, "grad_at_N": r.grad_limit, "ok": r.ok()})
    return out


def render_csv(which: int, Ns: Sequence[int] = DEFAULT_NS) -> str:
    buf = io.StringIO()
    if which == 1:
        rows = table1_rows()
        buf.write("# leading constants c of the bound c * N^-rate; *_at_N is bound * N^rate at N=10000\n")
    else:
        rows = table_rows(which, Ns)
        buf.write(f"# {_HEADERS[which]}; L = R = 1; '{EXTERNAL}' cells need an external SDP solve\n")
    w = csv.writer(buf, lineterminator="\n")
    keys = list(rows[0])
    w.writerow(keys)
    for r in rows:
        w.writerow([_fmt(r[k]) if isinstance(r[k], float) else r[k] for k in keys])
    return buf.getvalue()


def render_json(which: int, Ns: Sequence[int] = DEFAULT_NS) -> str:
    rows = table1_rows() if which == 1 else table_rows(which, Ns)
    clean = [{k: (bool(v) if isinstance(v, (bool, np.bool_)) else v) for k, v in r.items()} for r in rows]
    header = "leading constants" if which == 1 else _HEADERS[which]
    return json.dumps({"table": which, "convention": header, "rows": clean}, indent=1)
