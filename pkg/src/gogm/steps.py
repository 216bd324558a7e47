"""Fixed step coefficients ``h_{i+1,k}`` of the first-order class FO.

A step matrix is stored densely as an ``N x N`` lower-triangular array whose
row ``i`` holds ``h_{i+1,0..i}``; the iteration it defines is

    x_{i+1} = x_i - (1/L) * sum_k h[i, k] * grad f(x_k).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Union

import numpy as np

from .params import ParamSeq, SeqKind, is_exact, validate


class StepOrigin(str, Enum):
    FGM = "FGM"
    OGM = "OGM"
    OGM_PRIME = "OGM_PRIME"
    GOGM = "GOGM"
    GOGM_PRIME = "GOGM_PRIME"
    GOGM_RECURSIVE = "GOGM_RECURSIVE"
    CUSTOM = "CUSTOM"


@dataclass(frozen=True)
class StepMatrix:
    N: int
    h: np.ndarray
    origin: StepOrigin = StepOrigin.CUSTOM

    def __post_init__(self):
        h = np.array(self.h, dtype=np.float64)
        if h.shape != (self.N, self.N):
            raise ValueError(f"step matrix must be {self.N}x{self.N}, got {h.shape}")
        if np.any(np.triu(h, 1) != 0):
            raise ValueError("step matrix must be lower triangular")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    def coef(self, i: int, k: int) -> float:
        """``h_{i,k}`` in 1-based row notation (``1 <= i <= N``, ``k < i``)."""
        return float(self.h[i - 1, k])

    def row(self, i: int) -> np.ndarray:
        return self.h[i, : i + 1]

    def diagonal(self) -> np.ndarray:
        return np.diag(self.h).copy()

    def to_csv(self, path: Union[str, Path, None] = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "k", "h_ik"])
        for r in range(self.N):
            for k in range(r + 1):
                w.writerow([r + 1, k, repr(float(self.h[r, k]))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def gm_steps(N: int, step: float = 1.0) -> StepMatrix:
    return StepMatrix(N, np.diag(np.full(N, float(step))), StepOrigin.CUSTOM)


def _closed_form(N, scale, weight, diag, origin) -> StepMatrix:
    """Shared closed form ``h_{i+1,k} = scale[i+1] * (weight[k] - sum_{j=k+1}^{i} h_{j,k})``.

    ``colsum[k]`` carries the running column sum so construction stays O(N^2).
    """
    h = np.zeros((N, N))
    colsum = np.zeros(N)
    for i in range(N):
        if i:
            h[i, :i] = scale[i + 1] * (weight[:i] - colsum[:i])
        h[i, i] = diag[i]
        colsum[: i + 1] += h[i, : i + 1]
    return StepMatrix(N, h, origin)


def _require_rule(seq: ParamSeq, theta: bool) -> None:
    if seq.final_rule_doubled != theta:
        want = "theta-type (doubled final sum)" if theta else "t-type"
        raise ValueError(f"expected a {want} sequence, got kind {seq.kind.value}")
    rep = validate(seq)
    if not rep.ok:
        raise ValueError(f"invalid momentum sequence: {rep}")


def h_fgm(t: ParamSeq) -> StepMatrix:
    """FGM in FO form; needs the exact rule ``t_i^2 = T_i``."""
    _require_rule(t, theta=False)
    if not is_exact(t):
        raise ValueError("FGM step coefficients need t_i^2 = T_i for every i")
    v = t.values
    diag = 1 + (v[:-1] - 1) / v[1:]
    return _closed_form(t.N, 1 / v, v, diag, StepOrigin.FGM)


def h_ogm(theta: ParamSeq) -> StepMatrix:
    """OGM closed form: ``(1/theta_{i+1}) (2 theta_k - sum h)``."""
    if theta.kind != SeqKind.OGM_THETA:
        raise ValueError("h_ogm needs the OGM theta sequence")
    v = theta.values
    diag = 1 + (2 * v[:-1] - 1) / v[1:]
    return _closed_form(theta.N, 1 / v, 2 * v, diag, StepOrigin.OGM)


def h_ogm_prime(t: ParamSeq) -> StepMatrix:
    """OGM' closed form, identical to :func:`h_ogm` with FGM's t."""
    if t.kind != SeqKind.FGM_T:
        raise ValueError("h_ogm_prime needs FGM's t sequence")
    v = t.values
    diag = 1 + (2 * v[:-1] - 1) / v[1:]
    return _closed_form(t.N, 1 / v, 2 * v, diag, StepOrigin.OGM_PRIME)


def _gogm_closed(seq: ParamSeq, origin: StepOrigin) -> StepMatrix:
    v, s = seq.values, seq.partial_sums
    ratio = v / s
    diag = 1 + (2 * v[:-1] - 1) * ratio[1:]
    return _closed_form(seq.N, ratio, 2 * v, diag, origin)


def h_gogm(theta: ParamSeq) -> StepMatrix:
    """Generalized OGM for any theta with ``theta_i^2 <= Theta_i``."""
    _require_rule(theta, theta=True)
    return _gogm_closed(theta, StepOrigin.GOGM)


def h_gogm_prime(t: ParamSeq) -> StepMatrix:
    """Generalized OGM' for any t with ``t_i^2 <= T_i``."""
    _require_rule(t, theta=False)
    return _gogm_closed(t, StepOrigin.GOGM_PRIME)


def _recursive(N, ratio, diag) -> StepMatrix:
    # h_{i+1,k} = ratio_i * h_{i,k} (k <= i-2), ratio_i * (h_{i,i-1} - 1) (k = i-1)
    h = np.zeros((N, N))
    for i in range(N):
        if i:
            h[i, :i] = ratio[i] * h[i - 1, :i]
            h[i, i - 1] = ratio[i] * (h[i - 1, i - 1] - 1)
        h[i, i] = diag[i]
    return h


def h_gogm_recursive(theta: ParamSeq) -> StepMatrix:
    """Same coefficients as :func:`h_gogm`, built row-from-row."""
    _require_rule(theta, theta=True)
    v, s = theta.values, theta.partial_sums
    ratio = np.zeros(theta.N)
    ratio[1:] = (s[1:-1] - v[1:-1]) * v[2:] / (v[1:-1] * s[2:])
    diag = 1 + (2 * v[:-1] - 1) * v[1:] / s[1:]
    return StepMatrix(theta.N, _recursive(theta.N, ratio, diag), StepOrigin.GOGM_RECURSIVE)


def h_ogm_final_recursive(theta: ParamSeq) -> StepMatrix:
    """OGM's recursion ``ratio_i = (theta_i - 1) / theta_{i+1}`` (exact theta only)."""
    if theta.kind != SeqKind.OGM_THETA:
        raise ValueError("h_ogm_final_recursive needs the OGM theta sequence")
    v = theta.values
    ratio = np.zeros(theta.N)
    ratio[1:] = (v[1:-1] - 1) / v[2:]
    diag = 1 + (2 * v[:-1] - 1) / v[1:]
    return StepMatrix(theta.N, _recursive(theta.N, ratio, diag), StepOrigin.GOGM_RECURSIVE)


def max_relative_gap(a: StepMatrix, b: StepMatrix) -> float:
    """Largest entrywise gap relative to ``max(1, |h|)``."""
    if a.N != b.N:
        raise ValueError("step matrices differ in N")
    scale = np.maximum(np.maximum(np.abs(a.h), np.abs(b.h)), 1.0)
    return float(np.max(np.abs(a.h - b.h) / scale, initial=0.0))
