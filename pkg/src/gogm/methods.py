"""Run the fixed-step methods and record their iterates.

Every method is available in two routes: its own recursion (``form="box"``)
and the generic FO replay of its step matrix (``form="fo"``). Comparing the
two is how the form-equivalence claims are checked.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .oracles import FunctionOracle
from .params import (ParamSeq, make_fgm_t, make_ogm_a, make_ogm_og,
                     make_ogm_theta, validate)
from .steps import (StepMatrix, gm_steps, h_fgm, h_gogm, h_gogm_prime, h_ogm)


class Family(str, Enum):
    GM = "GM"
    FGM1 = "FGM1"
    FGM2 = "FGM2"
    OGM1 = "OGM1"
    OGM2 = "OGM2"
    GOGM1 = "GOGM1"
    GOGM2 = "GOGM2"
    GOGM1P = "GOGM1P"
    GOGM2P = "GOGM2P"
    OGM_M = "OGM_M"
    OGM_OG = "OGM_OG"
    OGM_A = "OGM_A"
    FO_GENERIC = "FO_GENERIC"


_THETA_FAMILIES = {Family.OGM1, Family.OGM2, Family.GOGM1, Family.GOGM2}
_T_FAMILIES = {Family.FGM1, Family.FGM2, Family.GOGM1P, Family.GOGM2P,
               Family.OGM_OG, Family.OGM_A}


class NonFiniteError(ArithmeticError):
    def __init__(self, index: int, what: str):
        super().__init__(f"non-finite {what} at iterate {index}")
        self.index = index
        self.what = what


@dataclass(frozen=True)
class MethodSpec:
    """Which method to run and with which parameters.

    ``params`` defaults to the method's standard sequence. For OGM_M it is the
    m-step OGM sequence; ``h`` is only used by FO_GENERIC; ``step`` only by GM.
    """

    family: Family
    N: int
    params: Optional[ParamSeq] = None
    m: Optional[int] = None
    a: Optional[float] = None
    h: Optional[StepMatrix] = None
    step: float = 1.0

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        p = self.params
        if fam == Family.OGM_M:
            if self.m is None or not 1 <= self.m <= self.N - 1:
                raise ValueError(f"OGM_M needs 1 <= m <= N-1, got m={self.m!r}, N={self.N}")
            p = make_ogm_theta(self.m)
        elif fam == Family.FO_GENERIC:
            if self.h is None or self.h.N != self.N:
                raise ValueError("FO_GENERIC needs a step matrix with N rows")
        elif fam == Family.OGM_OG:
            p = p or make_ogm_og(self.N)
        elif fam == Family.OGM_A:
            if p is None:
                if self.a is None:
                    raise ValueError("OGM_A needs a")
                p = make_ogm_a(self.a, self.N)
        elif fam in (Family.FGM1, Family.FGM2, Family.GOGM1P, Family.GOGM2P):
            p = p or make_fgm_t(self.N)
        elif fam in _THETA_FAMILIES:
            p = p or make_ogm_theta(self.N)
        if fam in _THETA_FAMILIES | _T_FAMILIES:
            if p.N != self.N:
                raise ValueError(f"sequence has N={p.N}, method has N={self.N}")
            if p.final_rule_doubled != (fam in _THETA_FAMILIES):
                raise ValueError(f"{fam.value} got a sequence with the wrong final rule")
            rep = validate(p)
            if not rep.ok:
                raise ValueError(f"invalid momentum sequence: {rep}")
        object.__setattr__(self, "params", p)

    @property
    def label(self) -> str:
        if self.family == Family.OGM_M:
            return f"OGM_M(m={self.m})"
        if self.family == Family.OGM_A:
            return f"OGM_A(a={self.params.a:g})"
        return self.family.value

    def steps(self) -> StepMatrix:
        """The step matrix of this method viewed as an FO instance."""
        fam, p = self.family, self.params
        if fam == Family.GM:
            return gm_steps(self.N, self.step)
        if fam == Family.FO_GENERIC:
            return self.h
        if fam in (Family.FGM1, Family.FGM2):
            return h_fgm(p)
        if fam in (Family.OGM1, Family.OGM2):
            return h_ogm(p)
        if fam in (Family.GOGM1, Family.GOGM2):
            return h_gogm(p)
        if fam == Family.OGM_M:
            h = np.eye(self.N)
            h[: self.m, : self.m] = h_ogm(p).h
            return StepMatrix(self.N, h)
        return h_gogm_prime(p)


@dataclass
class IterateTrace:
    """Points, gradients and values of one run.

    ``y[i+1] = x[i] - grad f(x[i]) / L`` for every method (for GM with unit
    step this coincides with ``x[i+1]``); ``y[0] = x[0]``. ``y_extra`` is the
    gradient step taken from the last secondary iterate ``x[N]``.
    """

    method: str
    N: int
    L: float
    x: np.ndarray
    y: np.ndarray
    grads_x: np.ndarray
    grads_y: np.ndarray
    fvals_x: np.ndarray
    fvals_y: np.ndarray
    y_extra: np.ndarray
    grad_y_extra: np.ndarray
    fval_y_extra: float
    f_star: float
    R: float
    z: Optional[np.ndarray] = None

    @property
    def gnorm_x(self) -> np.ndarray:
        return np.linalg.norm(self.grads_x, axis=1)

    @property
    def gnorm_y(self) -> np.ndarray:
        return np.linalg.norm(self.grads_y, axis=1)

    def cost_gap_x(self, i: Optional[int] = None) -> float:
        return float(self.fvals_x[self.N if i is None else i] - self.f_star)

    def cost_gap_y(self, i: Optional[int] = None) -> float:
        return float(self.fvals_y[self.N if i is None else i] - self.f_star)

    def cost_gap_extra(self) -> float:
        return float(self.fval_y_extra - self.f_star)

    def min_grad_norm_x(self) -> float:
        return float(self.gnorm_x.min())

    def to_csv(self, path: Union[str, Path, None] = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "f_x", "f_y", "grad_norm_x", "grad_norm_y"])
        gx, gy = self.gnorm_x, self.gnorm_y
        for i in range(self.N + 1):
            w.writerow([i, repr(float(self.fvals_x[i])), repr(float(self.fvals_y[i])),
                        repr(float(gx[i])), repr(float(gy[i]))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_dict(self, points: bool = False) -> dict:
        d = {
            "method": self.method, "N": self.N, "L": self.L, "R": self.R,
            "f_star": self.f_star,
            "f_x": self.fvals_x.tolist(), "f_y": self.fvals_y.tolist(),
            "grad_norm_x": self.gnorm_x.tolist(), "grad_norm_y": self.gnorm_y.tolist(),
            "f_y_extra": self.fval_y_extra,
            "grad_norm_y_extra": float(np.linalg.norm(self.grad_y_extra)),
        }
        if points:
            d["x"] = self.x.tolist()
            d["y"] = self.y.tolist()
            d["y_extra"] = self.y_extra.tolist()
            if self.z is not None:
                d["z"] = self.z.tolist()
        return d

    def to_json(self, path: Union[str, Path, None] = None, points: bool = False) -> str:
        text = json.dumps(self.to_dict(points), indent=1)
        if path is not None:
            Path(path).write_text(text)
        return text


class _Evaluator:
    """Evaluates the oracle once per point and refuses non-finite results."""

    def __init__(self, oracle: FunctionOracle):
        self.oracle = oracle

    def __call__(self, x: np.ndarray, index: int):
        g = np.asarray(self.oracle.grad(x), dtype=float)
        f = float(self.oracle.value(x))
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(index, "gradient")
        if not np.isfinite(f):
            raise NonFiniteError(index, "function value")
        return g, f


def _finish(method, oracle, X, GX, FX, ev, z=None) -> IterateTrace:
    """Fill in the primary iterates and the extra gradient step."""
    N = X.shape[0] - 1
    L = oracle.L
    Y = np.empty_like(X)
    Y[0] = X[0]
    Y[1:] = X[:-1] - GX[:-1] / L
    GY, FY = np.empty_like(GX), np.empty_like(FX)
    GY[0], FY[0] = GX[0], FX[0]
    for i in range(1, N + 1):
        if np.array_equal(Y[i], X[i]):
            GY[i], FY[i] = GX[i], FX[i]
        else:
            GY[i], FY[i] = ev(Y[i], i)
    y_extra = X[N] - GX[N] / L
    g_extra, f_extra = ev(y_extra, N + 1)
    x_star = oracle.x_star
    f_star = oracle.f_star if x_star is not None else float("nan")
    R = float(np.linalg.norm(X[0] - x_star)) if x_star is not None else float("nan")
    return IterateTrace(method, N, L, X, Y, GX, GY, FX, FY, y_extra, g_extra, f_extra,
                        f_star, R, z)


def run_fo(h: StepMatrix, oracle: FunctionOracle, x0, N: Optional[int] = None,
           method: str = "FO") -> IterateTrace:
    """``x_{i+1} = x_i - (1/L) sum_k h[i, k] grad f(x_k)``."""
    N = h.N if N is None else N
    if h.N != N:
        raise ValueError(f"step matrix has {h.N} rows, asked for N={N}")
    x0 = np.asarray(x0, dtype=float)
    ev = _Evaluator(oracle)
    X = np.empty((N + 1, x0.size))
    G = np.empty_like(X)
    F = np.empty(N + 1)
    X[0] = x0
    for i in range(N):
        G[i], F[i] = ev(X[i], i)
        X[i + 1] = X[i] - (h.h[i, : i + 1] @ G[: i + 1]) / oracle.L
    G[N], F[N] = ev(X[N], N)
    return _finish(method, oracle, X, G, F, ev)


def _momentum_coefs(spec: MethodSpec):
    """Coefficients ``(a_i, b_i)`` of ``x = y' + a (y' - y) + b (y' - x)``."""
    v, s = spec.params.values, spec.params.partial_sums
    fam = spec.family
    if fam == Family.FGM1:
        return (v[:-1] - 1) / v[1:], np.zeros(spec.N)
    if fam in (Family.OGM1, Family.OGM_M):
        return (v[:-1] - 1) / v[1:], v[:-1] / v[1:]
    # GOGM1, GOGM1P
    r = v[1:] / (v[:-1] * s[1:])
    return (s[:-1] - v[:-1]) * r, (2 * v[:-1] ** 2 - s[:-1]) * r


def _averaging_coefs(spec: MethodSpec):
    """Weights ``w_k`` of ``z`` and mixing ``c_{i+1}`` of ``x = (1-c) y + c z``."""
    v, s = spec.params.values, spec.params.partial_sums
    fam = spec.family
    if fam == Family.FGM2:
        return v, 1 / v
    if fam == Family.OGM2:
        return 2 * v, 1 / v
    return 2 * v, v / s


_BOX1 = {Family.FGM1, Family.OGM1, Family.GOGM1, Family.GOGM1P, Family.OGM_M,
         Family.OGM_OG, Family.OGM_A}
_BOX2 = {Family.FGM2, Family.OGM2, Family.GOGM2, Family.GOGM2P}


def _run_box1(spec, oracle, x0):
    N, L = spec.N, oracle.L
    n_mom = spec.m if spec.family == Family.OGM_M else N
    a, b = _momentum_coefs(spec if spec.family not in (Family.OGM_OG, Family.OGM_A)
                           else MethodSpec(Family.GOGM1P, N, params=spec.params))
    ev = _Evaluator(oracle)
    X = np.empty((N + 1, x0.size))
    G = np.empty_like(X)
    F = np.empty(N + 1)
    X[0] = x0
    y_prev = x0
    for i in range(N):
        G[i], F[i] = ev(X[i], i)
        y = X[i] - G[i] / L
        if i < n_mom:
            X[i + 1] = y + a[i] * (y - y_prev) + b[i] * (y - X[i])
        else:
            X[i + 1] = y
        y_prev = y
    G[N], F[N] = ev(X[N], N)
    return _finish(spec.label, oracle, X, G, F, ev)


def _run_box2(spec, oracle, x0):
    N, L = spec.N, oracle.L
    w, c = _averaging_coefs(spec)
    ev = _Evaluator(oracle)
    X = np.empty((N + 1, x0.size))
    Z = np.empty_like(X)
    G = np.empty_like(X)
    F = np.empty(N + 1)
    X[0] = Z[0] = x0
    acc = np.zeros_like(x0)
    for i in range(N):
        G[i], F[i] = ev(X[i], i)
        y = X[i] - G[i] / L
        acc += w[i] * G[i]
        Z[i + 1] = x0 - acc / L
        X[i + 1] = (1 - c[i + 1]) * y + c[i + 1] * Z[i + 1]
    G[N], F[N] = ev(X[N], N)
    return _finish(spec.label, oracle, X, G, F, ev, z=Z)


def run(spec: MethodSpec, oracle: FunctionOracle, x0, form: str = "box") -> IterateTrace:
    """Run ``spec`` from ``x0``; ``form="fo"`` replays its step matrix instead.

    GM and FO_GENERIC have no separate recursion and always use the FO replay.
    OGM-OG and OGM-a run through the GOGM1' recursion with their sequence.
    """
    x0 = np.asarray(x0, dtype=float).copy()
    if x0.ndim != 1 or x0.size != oracle.d:
        raise ValueError(f"start point must have shape ({oracle.d},)")
    if form not in ("box", "fo"):
        raise ValueError(f"unknown form {form!r}")
    if form == "fo" or spec.family in (Family.GM, Family.FO_GENERIC):
        return run_fo(spec.steps(), oracle, x0, spec.N, method=spec.label)
    if spec.family in _BOX2:
        return _run_box2(spec, oracle, x0)
    return _run_box1(spec, oracle, x0)


@dataclass
class EquivalenceReport:
    max_dev_x: float
    max_dev_y: float
    worst_index: int
    labels: tuple = field(default=("A", "B"))

    @property
    def max_dev(self) -> float:
        return max(self.max_dev_x, self.max_dev_y)

    def ok(self, tol: float = 1e-9) -> bool:
        return self.max_dev <= tol

    def __str__(self):
        return (f"{self.labels[0]} vs {self.labels[1]}: max deviation x {self.max_dev_x:.2e}, "
                f"y {self.max_dev_y:.2e} (worst at i={self.worst_index})")


def _rel_dev(P, Q) -> np.ndarray:
    scale = np.maximum(1.0, np.maximum(np.linalg.norm(P, axis=1), np.linalg.norm(Q, axis=1)))
    return np.linalg.norm(P - Q, axis=1) / scale


def compare_traces(a: IterateTrace, b: IterateTrace) -> EquivalenceReport:
    """Largest iterate gap relative to ``max(1, ||x_i||)``."""
    if a.N != b.N:
        raise ValueError("traces differ in N")
    dx, dy = _rel_dev(a.x, b.x), _rel_dev(a.y, b.y)
    worst = int(np.argmax(np.maximum(dx, dy)))
    return EquivalenceReport(float(dx.max()), float(dy.max()), worst, (a.method, b.method))


def check_equivalence(spec_a: MethodSpec, spec_b: MethodSpec, oracle: FunctionOracle, x0,
                      form_a: str = "box", form_b: str = "box") -> EquivalenceReport:
    if spec_a.N != spec_b.N:
        raise ValueError("specs differ in N")
    ta = run(spec_a, oracle, x0, form_a)
    tb = run(spec_b, oracle, x0, form_b)
    rep = compare_traces(ta, tb)
    rep.labels = (f"{spec_a.label}[{form_a}]", f"{spec_b.label}[{form_b}]")
    return rep


def verify_trace(trace: IterateTrace, oracle: FunctionOracle, rtol: float = 1e-12) -> list:
    """Recompute every stored gradient and value; return a list of problems."""
    problems = []
    for name, P, G, F in (("x", trace.x, trace.grads_x, trace.fvals_x),
                          ("y", trace.y, trace.grads_y, trace.fvals_y)):
        for i in range(trace.N + 1):
            g, f = oracle.grad(P[i]), oracle.value(P[i])
            if np.linalg.norm(g - G[i]) > rtol * max(1.0, np.linalg.norm(g)):
                problems.append(f"gradient at {name}_{i} disagrees with oracle")
            if abs(f - F[i]) > rtol * max(1.0, abs(f)):
                problems.append(f"value at {name}_{i} disagrees with oracle")
    for i in range(trace.N):
        if not np.array_equal(trace.y[i + 1], trace.x[i] - trace.grads_x[i] / trace.L):
            problems.append(f"y_{i + 1} is not the gradient step from x_{i}")
    return problems
