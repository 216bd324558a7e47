"""Closed-form worst-case bounds as functions of ``(N, L, R)`` and the momentum sequence.

Where a bound has both a sequence form (e.g. ``LR^2 / (2 t_{i-1}^2)``) and a
simplified form in N alone (``2 LR^2 / (i+1)^2``), :func:`bound` returns the
sequence form and checks that the simplified form is not smaller.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .params import ParamSeq, make_fgm_t, make_ogm_a, make_ogm_og, make_ogm_theta

SIMPLIFIED_RTOL = 1e-12


class Metric(str, Enum):
    COST_FINAL_X = "COST_FINAL_X"          # f(x_i) - f*, i = N by default
    COST_PRIMARY_Y = "COST_PRIMARY_Y"      # f(y_i) - f*, 1 <= i (<= N+1 for t-type methods)
    GRAD_SMALLEST = "GRAD_SMALLEST"        # min_{i <= N} ||grad f(x_i)||
    GRAD_FINAL = "GRAD_FINAL"              # ||grad f(x_i)||, i = N by default
    GRAD_PRIMARY_Y = "GRAD_PRIMARY_Y"      # ||grad f(y_i)||
    LOWER_BOUND = "LOWER_BOUND"            # worst case is at least this


class BoundMethod(str, Enum):
    GM = "GM"
    FGM = "FGM"
    OGM = "OGM"
    GOGM = "GOGM"
    GOGMP = "GOGMP"
    OGM_M = "OGM_M"
    OGM_OG = "OGM_OG"
    OGM_A = "OGM_A"
    ANY = "ANY"


_FAMILY_TO_METHOD = {
    "GM": "GM", "FGM1": "FGM", "FGM2": "FGM", "OGM1": "OGM", "OGM2": "OGM",
    "GOGM1": "GOGM", "GOGM2": "GOGM", "GOGM1P": "GOGMP", "GOGM2P": "GOGMP",
    "OGM_M": "OGM_M", "OGM_OG": "OGM_OG", "OGM_A": "OGM_A",
}


def method_of(tag) -> BoundMethod:
    """Accept a :class:`BoundMethod`, a method family name or a plain string."""
    name = getattr(tag, "value", tag)
    return BoundMethod(_FAMILY_TO_METHOD.get(name, name))


@dataclass
class BoundSpec:
    method: BoundMethod
    metric: Metric
    value: float
    formula: str
    params: dict = field(default_factory=dict)
    simplified: Optional[float] = None

    def __post_init__(self):
        if not (np.isfinite(self.value) and self.value > 0):
            raise ArithmeticError(f"bound {self.formula} evaluated to {self.value!r}")

    @property
    def reciprocal(self) -> float:
        return 1.0 / self.value


class UndefinedBound(ValueError):
    pass


def _with_simplified(spec: BoundSpec, simplified: float) -> BoundSpec:
    if simplified < spec.value * (1 - SIMPLIFIED_RTOL):
        raise ArithmeticError(
            f"{spec.formula}: simplified form {simplified!r} is below sequence form {spec.value!r}")
    spec.simplified = float(simplified)
    return spec


def default_m(N: int) -> int:
    """``floor(2N/3)`` clipped to the admissible range ``1..N-1``."""
    return min(max((2 * N) // 3, 1), N - 1)


def _slack_sum(seq: ParamSeq) -> float:
    """Sum of rule slacks, with rounding-level totals treated as zero."""
    total = float(np.sum(seq.slacks))
    return total if total > 1e-12 * float(np.sum(seq.partial_sums)) else 0.0


def bound(method, metric, N: int, L: float = 1.0, R: float = 1.0,
          seq: Optional[ParamSeq] = None, m: Optional[int] = None,
          a: Optional[float] = None, i: Optional[int] = None) -> BoundSpec:
    """Analytic bound for ``(method, metric)`` after N iterations (or at iterate i)."""
    method, metric = method_of(method), Metric(metric)
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    i = N if i is None else int(i)
    LR, LR2 = L * R, L * R * R
    prm = {"N": N, "L": L, "R": R, "i": i}

    def need_index(lo, hi):
        if not lo <= i <= hi:
            raise ValueError(f"iterate index {i} outside {lo}..{hi} for {method.value} {metric.value}")

    if metric == Metric.LOWER_BOUND:
        if method == BoundMethod.GM:
            return BoundSpec(method, metric, LR / (N + 1), "gm_grad_lower", prm)
        if method == BoundMethod.ANY:
            return BoundSpec(method, metric, LR / (4 * math.e ** 2 * (N + 1) ** 2), "first_order_grad_lower", prm)
        raise UndefinedBound(f"no lower bound recorded for {method.value}")

    if method == BoundMethod.GM:
        if metric == Metric.COST_FINAL_X:
            need_index(0, N)
            return BoundSpec(method, metric, LR2 / (4 * i + 2), "gm_cost_x", prm)
        if metric in (Metric.GRAD_FINAL, Metric.GRAD_SMALLEST) and i == N:
            return BoundSpec(method, metric, math.sqrt(2) * LR / math.sqrt(N * (N + 2)), "gm_grad_x", prm)

    elif method == BoundMethod.FGM:
        t = seq or make_fgm_t(N)
        v = t.values
        if metric == Metric.COST_PRIMARY_Y:
            need_index(1, N)
            s = BoundSpec(method, metric, LR2 / (2 * v[i - 1] ** 2), "fgm_cost_y", prm)
            return _with_simplified(s, 2 * LR2 / (i + 1) ** 2)
        if metric == Metric.COST_FINAL_X:
            need_index(1, N)
            s = BoundSpec(method, metric, LR2 / (2 * v[i] ** 2), "fgm_cost_x", prm)
            return _with_simplified(s, 2 * LR2 / (i + 2) ** 2)
        if metric == Metric.GRAD_PRIMARY_Y:
            need_index(1, N)
            s = BoundSpec(method, metric, LR / v[i - 1], "fgm_grad_y", prm)
            return _with_simplified(s, 2 * LR / (i + 1))
        if metric == Metric.GRAD_FINAL:
            need_index(1, N)
            s = BoundSpec(method, metric, LR / v[i], "fgm_grad_x", prm)
            return _with_simplified(s, 2 * LR / (i + 2))
        if metric == Metric.GRAD_SMALLEST:
            s = BoundSpec(method, metric, LR / math.sqrt(float(np.sum(v * v))), "fgm_grad_min", prm)
            return _with_simplified(s, 2 * math.sqrt(3) * LR / math.sqrt((N + 1) * (N * N + 6 * N + 12)))

    elif method == BoundMethod.OGM:
        th = seq or make_ogm_theta(N)
        v = th.values
        if metric == Metric.COST_PRIMARY_Y:
            need_index(1, N)
            s = BoundSpec(method, metric, LR2 / (4 * v[i - 1] ** 2), "ogm_cost_y", prm)
            return _with_simplified(s, LR2 / (i + 1) ** 2)
        if metric == Metric.COST_FINAL_X and i == N:
            s = BoundSpec(method, metric, LR2 / (2 * v[N] ** 2), "ogm_cost_x", prm)
            return _with_simplified(s, LR2 / ((N + 1) * (N + 1 + math.sqrt(2))))
        if metric == Metric.GRAD_PRIMARY_Y:
            need_index(1, N)
            s = BoundSpec(method, metric, LR / (math.sqrt(2) * v[i - 1]), "ogm_grad_y", prm)
            return _with_simplified(s, math.sqrt(2) * LR / (i + 1))
        if metric in (Metric.GRAD_FINAL, Metric.GRAD_SMALLEST) and i == N:
            s = BoundSpec(method, metric, LR / v[N], "ogm_grad_x", prm)
            return _with_simplified(s, math.sqrt(2) * LR / (N + 1))

    elif method == BoundMethod.GOGM:
        if seq is None or not seq.final_rule_doubled:
            raise ValueError("GOGM bounds need a theta-type sequence")
        s_ = seq.partial_sums
        if metric == Metric.COST_PRIMARY_Y:
            need_index(1, N)
            return BoundSpec(method, metric, LR2 / (4 * s_[i - 1]), "gogm_cost_y", prm)
        if metric == Metric.COST_FINAL_X and i == N:
            return BoundSpec(method, metric, LR2 / (2 * s_[N]), "gogm_cost_x", prm)

    elif method in (BoundMethod.GOGMP, BoundMethod.OGM_OG, BoundMethod.OGM_A):
        if method == BoundMethod.OGM_OG:
            t = seq or make_ogm_og(N)
        elif method == BoundMethod.OGM_A:
            if seq is None and a is None:
                raise ValueError("OGM_A bounds need a")
            t = seq or make_ogm_a(a, N)
            a = t.a if t.a is not None else a
            prm["a"] = a
        else:
            if seq is None or seq.final_rule_doubled:
                raise ValueError("GOGM' bounds need a t-type sequence")
            t = seq
        s_ = t.partial_sums
        if metric == Metric.COST_PRIMARY_Y:
            need_index(1, N + 1)
            s = BoundSpec(method, metric, LR2 / (4 * s_[i - 1]),
                          "gogm_cost_y_extra" if i == N + 1 else "gogm_cost_y", prm)
            if method == BoundMethod.OGM_OG and i == N + 1:
                return _with_simplified(s, 2 * LR2 / (N + 2) ** 2)
            if method == BoundMethod.OGM_A:
                return _with_simplified(s, a * LR2 / (2 * i * (i + 2 * a - 1)))
            return s
        if metric == Metric.GRAD_SMALLEST:
            total = _slack_sum(t)
            if not total > 0:
                raise UndefinedBound("every slack T_k - t_k^2 is zero; the smallest-gradient bound is undefined")
            s = BoundSpec(method, metric, LR / (2 * math.sqrt(total)), "gogm_prime_grad_min", prm)
            if method == BoundMethod.OGM_OG:
                return _with_simplified(s, math.sqrt(6) * LR / (N * math.sqrt(N + 1)))
            if method == BoundMethod.OGM_A:
                den = N * (N + 1) * ((a - 2) * N + 3 * a * a - 4 * a - 2)
                return _with_simplified(s, a * math.sqrt(6) * LR / (2 * math.sqrt(den)))
            return s

    elif method == BoundMethod.OGM_M:
        m = default_m(N) if m is None else int(m)
        if not 1 <= m <= N - 1:
            raise ValueError(f"OGM_M needs 1 <= m <= N-1, got m={m}")
        prm["m"] = m
        if metric in (Metric.GRAD_FINAL, Metric.GRAD_SMALLEST) and i == N:
            return BoundSpec(method, metric, math.sqrt(2) * LR / ((m + 1) * math.sqrt(N - m + 1)),
                             "ogm_m_grad_x", prm)

    raise UndefinedBound(f"no analytic {metric.value} bound for {method.value}"
                         + ("" if i == N else f" at iterate {i}"))


def chain_gradient_bound(method, N: int, L: float = 1.0, R: float = 1.0, i: Optional[int] = None,
                         primary: bool = False) -> tuple:
    """``sqrt(2 L * cost bound)`` next to the stated gradient bound it should equal.

    Covers GM at ``x_i``, FGM at ``y_i``/``x_i`` and OGM at ``y_i``/``x_N``.
    Returns ``(via_chain, stated)``.
    """
    method = method_of(method)
    i = N if i is None else i
    if method == BoundMethod.GM:
        cost = bound(method, Metric.COST_FINAL_X, N, L, R, i=i).value
        return math.sqrt(2 * L * cost), L * R / math.sqrt(2 * i + 1)
    if method in (BoundMethod.FGM, BoundMethod.OGM):
        cm = Metric.COST_PRIMARY_Y if primary else Metric.COST_FINAL_X
        gm = Metric.GRAD_PRIMARY_Y if primary else Metric.GRAD_FINAL
        cost = bound(method, cm, N, L, R, i=i).value
        return math.sqrt(2 * L * cost), bound(method, gm, N, L, R, i=i).value
    raise UndefinedBound(f"no gradient chain for {method.value}")


def ogm_a_slack_sum_printed(a: float, N: int) -> float:
    """The slack-sum closed form as used in the OGM-a gradient bound."""
    return N * (N + 1) * ((a - 2) * N + 3 * a * a - 4 * a - 2) / (6 * a * a)


def ogm_a_slack_sum_exact(a: float, N: int) -> float:
    """``sum_k (T_k - t_k^2)`` for ``t_k = (k+a)/a`` in closed form.

    Each term is ``((a-2) k^2 + a(2a-3) k) / (2a^2)``.
    """
    return N * (N + 1) * ((a - 2) * N + 3 * a * a - 4 * a - 1) / (6 * a * a)


@dataclass
class AsymptoticRow:
    method: str
    cost_const: float
    cost_rate: float
    grad_const: float
    grad_rate: float
    cost_limit: float = float("nan")
    grad_limit: float = float("nan")

    @property
    def cost_rel_err(self) -> float:
        return abs(self.cost_limit - self.cost_const) / self.cost_const

    @property
    def grad_rel_err(self) -> float:
        return abs(self.grad_limit - self.grad_const) / self.grad_const

    def ok(self, rtol: float = 0.01) -> bool:
        return self.cost_rel_err <= rtol and self.grad_rel_err <= rtol


def _asym_specs(a: float) -> list:
    """``(name, cost const, cost rate, grad const, grad rate, cost fn, grad fn)``."""
    sq2, sq6 = math.sqrt(2), math.sqrt(6)
    G = Metric.GRAD_SMALLEST

    def ogm_m_cost(N):
        m = default_m(N)
        return bound("OGM", Metric.COST_FINAL_X, m).value

    return [
        ("GM", 0.25, 1.0, sq2, 1.0,
         lambda N: bound("GM", Metric.COST_FINAL_X, N).value,
         lambda N: bound("GM", G, N).value),
        ("FGM", 2.0, 2.0, 2 * math.sqrt(3), 1.5,
         lambda N: bound("FGM", Metric.COST_FINAL_X, N).value,
         lambda N: bound("FGM", G, N).value),
        ("OGM", 1.0, 2.0, sq2, 1.0,
         lambda N: bound("OGM", Metric.COST_FINAL_X, N).value,
         lambda N: bound("OGM", G, N).value),
        ("OGM_M", 9 / 4, 2.0, 3 * sq6 / 2, 1.5, ogm_m_cost,
         lambda N: bound("OGM_M", G, N).value),
        ("OGM_OG", 2.0, 2.0, sq6, 1.5,
         lambda N: bound("OGM_OG", Metric.COST_PRIMARY_Y, N, i=N + 1).value,
         lambda N: bound("OGM_OG", G, N).value),
        (f"OGM_A(a={a:g})", a / 2, 2.0, a * sq6 / (2 * math.sqrt(a - 2)), 1.5,
         lambda N: bound("OGM_A", Metric.COST_PRIMARY_Y, N, a=a).value,
         lambda N: bound("OGM_A", G, N, a=a).value),
    ]


def asymptotic_table(N: int = 10 ** 4, a: float = 4.0) -> list:
    """Leading constants of every method, each compared with its exact bound at ``N``.

    ``cost_limit`` is ``bound * N**rate`` with ``L = R = 1``; it should be
    within 1% of ``cost_const`` at ``N = 10**4``.
    """
    if not a > 2:
        raise ValueError("the OGM-a gradient constant needs a > 2")
    rows = []
    for name, cc, cr, gc, gr, cf, gf in _asym_specs(a):
        row = AsymptoticRow(name, cc, cr, gc, gr)
        row.cost_limit = cf(N) * N ** cr
        row.grad_limit = gf(N) * N ** gr
        rows.append(row)
    return rows


# ---- bound dominance on measured traces ------------------------------------

def measured(trace, metric, i: Optional[int] = None) -> float:
    """The quantity a bound of ``metric`` talks about, read off a trace."""
    metric = Metric(metric)
    N = trace.N
    i = N if i is None else i
    if metric == Metric.COST_FINAL_X:
        return trace.cost_gap_x(i)
    if metric == Metric.COST_PRIMARY_Y:
        return trace.cost_gap_extra() if i == N + 1 else trace.cost_gap_y(i)
    if metric == Metric.GRAD_FINAL:
        return float(trace.gnorm_x[i])
    if metric == Metric.GRAD_PRIMARY_Y:
        if i == N + 1:
            return float(np.linalg.norm(trace.grad_y_extra))
        return float(trace.gnorm_y[i])
    if metric == Metric.GRAD_SMALLEST:
        return trace.min_grad_norm_x()
    raise ValueError(f"{metric.value} is not a measurable quantity")


@dataclass
class DominanceCheck:
    bound: BoundSpec
    index: int
    measured: float
    slack: float

    @property
    def scale(self) -> float:
        return max(self.bound.value, 1e-300)


def applicable_bounds(spec) -> list:
    """Every ``(metric, index)`` pair with an analytic bound for this method."""
    method = method_of(spec.family)
    N = spec.N
    if spec.family.value == "GM" and spec.step != 1.0:
        return []
    pairs = []
    M = Metric
    if method == BoundMethod.GM:
        pairs += [(M.COST_FINAL_X, i) for i in range(N + 1)]
        pairs += [(M.GRAD_FINAL, N), (M.GRAD_SMALLEST, N)]
    elif method == BoundMethod.FGM:
        pairs += [(m_, i) for i in range(1, N + 1)
                  for m_ in (M.COST_PRIMARY_Y, M.COST_FINAL_X, M.GRAD_PRIMARY_Y, M.GRAD_FINAL)]
        pairs += [(M.GRAD_SMALLEST, N)]
    elif method == BoundMethod.OGM:
        pairs += [(m_, i) for i in range(1, N + 1) for m_ in (M.COST_PRIMARY_Y, M.GRAD_PRIMARY_Y)]
        pairs += [(M.COST_FINAL_X, N), (M.GRAD_FINAL, N), (M.GRAD_SMALLEST, N)]
    elif method == BoundMethod.GOGM:
        pairs += [(M.COST_PRIMARY_Y, i) for i in range(1, N + 1)] + [(M.COST_FINAL_X, N)]
    elif method in (BoundMethod.GOGMP, BoundMethod.OGM_OG, BoundMethod.OGM_A):
        pairs += [(M.COST_PRIMARY_Y, i) for i in range(1, N + 2)]
        if _slack_sum(spec.params) > 0:
            pairs += [(M.GRAD_SMALLEST, N)]
    elif method == BoundMethod.OGM_M:
        pairs += [(M.GRAD_FINAL, N), (M.GRAD_SMALLEST, N)]
    return pairs


def dominance(spec, trace) -> list:
    """Compare every applicable bound with the measured value on ``trace``.

    L comes from the trace and R is the measured ``||x_0 - x*||``.
    """
    method = method_of(spec.family)
    seq = spec.params if method not in (BoundMethod.GM, BoundMethod.OGM_M) else None
    out = []
    for metric, i in applicable_bounds(spec):
        b = bound(method, metric, spec.N, trace.L, trace.R, seq=seq, m=spec.m, i=i)
        val = measured(trace, metric, i)
        out.append(DominanceCheck(b, i, val, b.value - val))
    return out


def sum_t_squared_lower(N: int) -> float:
    """``(N+1)(2N^2+13N+24)/24``, a lower bound on ``sum t_k^2`` for FGM's t."""
    return (N + 1) * (2 * N * N + 13 * N + 24) / 24


def ogm_og_slack_lower(N: int) -> float:
    """``N^2 (N+1) / 24``, a lower bound on the OGM-OG slack sum."""
    return N * N * (N + 1) / 24

