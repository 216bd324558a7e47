"""Momentum-parameter sequences (t_i or theta_i) and their rule checks.

Two families of rules are supported:

* t-type: ``t_0 = 1`` and ``t_i**2 <= T_i = sum(t_0..t_i)`` for every i.
* theta-type: identical for ``i < N``, but the final partial sum doubles the
  prefix, ``Theta_N = 2*sum(theta_0..theta_{N-1}) + theta_N``.

FGM's t, OGM-OG and OGM-a are t-type; OGM's theta is theta-type. Any valid
t-type sequence is also a valid theta-type sequence (doubling the prefix can
only increase the final partial sum), which :func:`as_theta` exploits.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

RULE_RTOL = 1e-9


class SeqKind(str, Enum):
    FGM_T = "FGM_T"
    OGM_THETA = "OGM_THETA"
    OGM_A = "OGM_A"
    OGM_OG = "OGM_OG"
    CUSTOM = "CUSTOM"


def _freeze(a) -> np.ndarray:
    out = np.array(a, dtype=np.float64)
    out.setflags(write=False)
    return out


def partial_sums(values: Sequence[float], doubled: bool) -> np.ndarray:
    """T_i (or Theta_i when ``doubled``) for a sequence of momentum values."""
    v = np.asarray(values, dtype=np.longdouble)
    sums = np.cumsum(v)
    if doubled and len(v) > 1:
        sums[-1] = 2 * sums[-2] + v[-1]
    return sums.astype(np.float64)


@dataclass(frozen=True)
class ParamSeq:
    kind: SeqKind
    N: int
    values: np.ndarray
    partial_sums: np.ndarray
    final_rule_doubled: bool = False
    a: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))
        object.__setattr__(self, "partial_sums", _freeze(self.partial_sums))
        if self.values.shape != (self.N + 1,) or self.partial_sums.shape != (self.N + 1,):
            raise ValueError(f"expected N+1={self.N + 1} values and partial sums")

    @property
    def slacks(self) -> np.ndarray:
        """Rule slacks ``partial_sums[i] - values[i]**2`` (nonnegative when valid)."""
        return self.partial_sums - self.values ** 2

    @property
    def is_theta(self) -> bool:
        return self.final_rule_doubled

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind.value,
            "N": self.N,
            "values": self.values.tolist(),
            "partial_sums": self.partial_sums.tolist(),
            "final_rule_doubled": self.final_rule_doubled,
        }
        if self.a is not None:
            d["a"] = self.a
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ParamSeq":
        return cls(
            kind=SeqKind(d["kind"]),
            N=int(d["N"]),
            values=d["values"],
            partial_sums=d["partial_sums"],
            final_rule_doubled=bool(d.get("final_rule_doubled", False)),
            a=d.get("a"),
        )

    @classmethod
    def from_json(cls, text: str) -> "ParamSeq":
        return cls.from_dict(json.loads(text))


def _check_N(N) -> int:
    if int(N) != N or N < 1:
        raise ValueError(f"iteration count must be a positive integer, got {N!r}")
    return int(N)


def _nesterov_step(t, factor=4):
    return (1 + np.sqrt(1 + factor * t * t)) / 2


def _fgm_values(n_values: int) -> list:
    t = [np.longdouble(1)]
    for _ in range(n_values - 1):
        t.append(_nesterov_step(t[-1]))
    return t


def make_fgm_t(N: int) -> ParamSeq:
    """Nesterov's t sequence, ``t_{i+1} = (1 + sqrt(1 + 4 t_i^2)) / 2``."""
    N = _check_N(N)
    t = _fgm_values(N + 1)
    return ParamSeq(SeqKind.FGM_T, N, np.array(t, dtype=np.float64), partial_sums(t, False))


def make_ogm_theta(N: int) -> ParamSeq:
    """OGM's theta: the FGM recursion with an 8-factor at the last step."""
    N = _check_N(N)
    th = _fgm_values(N)
    th.append(_nesterov_step(th[-1], factor=8))
    return ParamSeq(
        SeqKind.OGM_THETA, N, np.array(th, dtype=np.float64),
        partial_sums(th, True), final_rule_doubled=True,
    )


def make_ogm_og(N: int) -> ParamSeq:
    """OGM-OG: FGM recursion up to ``floor(N/2) - 1``, then ``(N - i + 1) / 2``."""
    N = _check_N(N)
    m = N // 2
    t = [np.longdouble(1)]
    for _ in range(1, m):
        t.append(_nesterov_step(t[-1]))
    for i in range(max(m, 1), N + 1):
        t.append(np.longdouble(N - i + 1) / 2)
    seq = ParamSeq(SeqKind.OGM_OG, N, np.array(t, dtype=np.float64), partial_sums(t, False))
    _require_valid(seq)
    return seq


def make_ogm_a(a: float, N: int) -> ParamSeq:
    """OGM-a: ``t_i = (i + a) / a`` for ``a >= 2``."""
    N = _check_N(N)
    if not a >= 2:
        raise ValueError(f"OGM-a requires a >= 2, got {a!r}")
    i = np.arange(N + 1, dtype=np.longdouble)
    t = (i + a) / a
    sums = partial_sums(t, False)
    closed = ((i + 1) * (i + 2 * a) / (2 * a)).astype(np.float64)
    if not np.allclose(sums, closed, rtol=1e-12, atol=0):
        raise ArithmeticError("running sum disagrees with (i+1)(i+2a)/(2a)")
    return ParamSeq(SeqKind.OGM_A, N, t.astype(np.float64), sums, a=float(a))


def make_custom(values: Sequence[float], doubled: bool = False) -> ParamSeq:
    """Wrap a user-chosen sequence; rejected unless every rule inequality holds."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or len(v) < 2:
        raise ValueError("a sequence needs at least t_0 and t_1")
    seq = ParamSeq(SeqKind.CUSTOM, len(v) - 1, v, partial_sums(v, doubled),
                   final_rule_doubled=doubled)
    _require_valid(seq)
    return seq


def as_theta(seq: ParamSeq) -> ParamSeq:
    """Reinterpret a t-type sequence under the doubled final rule."""
    if seq.final_rule_doubled:
        return seq
    return make_custom(seq.values, doubled=True)


def random_valid_sequence(rng: np.random.Generator, N: int, doubled: bool = False,
                          low: float = 0.3) -> ParamSeq:
    """Draw ``t_i`` uniformly in ``[low, 1]`` times its largest admissible value.

    The last index is pinned below its maximum so the gradient-form certificate
    (which needs one strictly positive slack) is always defined.
    """
    N = _check_N(N)
    t = [1.0]
    prefix = 1.0
    for i in range(1, N + 1):
        if doubled and i == N:
            tmax = (1 + math.sqrt(1 + 8 * prefix)) / 2
        else:
            tmax = (1 + math.sqrt(1 + 4 * prefix)) / 2
        u = rng.uniform(low, 1.0) if i < N else rng.uniform(low, 0.95)
        t.append(u * tmax)
        prefix += t[-1]
    return make_custom(t, doubled=doubled)


@dataclass
class Violation:
    index: int
    rule: str
    slack: float

    def __str__(self):
        return f"i={self.index}: {self.rule} (slack {self.slack:.3e})"


@dataclass
class ValidationReport:
    seq_kind: SeqKind
    violations: list = field(default_factory=list)
    slacks: Optional[np.ndarray] = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return f"{self.seq_kind.value}: all rules hold"
        return f"{self.seq_kind.value}: " + "; ".join(map(str, self.violations))


def validate(seq: ParamSeq) -> ValidationReport:
    """Check every rule inequality and report violations with their slack."""
    rep = ValidationReport(seq.kind, slacks=seq.slacks)
    v, s = seq.values, seq.partial_sums
    if v[0] != 1.0:
        rep.violations.append(Violation(0, "values[0] == 1", float(v[0] - 1.0)))
    for i in np.flatnonzero(~(v > 0)):
        rep.violations.append(Violation(int(i), "values[i] > 0", float(v[i])))
    expected = partial_sums(v, seq.final_rule_doubled)
    for i in np.flatnonzero(~np.isclose(s, expected, rtol=1e-12, atol=0)):
        rep.violations.append(Violation(int(i), "partial_sums consistent", float(s[i] - expected[i])))
    slack = s - v ** 2
    for i in np.flatnonzero(slack < -RULE_RTOL * np.abs(s)):
        rule = "theta_N^2 <= Theta_N" if (seq.final_rule_doubled and i == seq.N) else "t_i^2 <= T_i"
        rep.violations.append(Violation(int(i), rule, float(slack[i])))
    if seq.kind == SeqKind.FGM_T:
        i = np.arange(seq.N + 1)
        for j in np.flatnonzero(v < (i + 2) / 2 - 1e-12):
            rep.violations.append(Violation(int(j), "t_i >= (i+2)/2", float(v[j] - (j + 2) / 2)))
    if seq.kind == SeqKind.OGM_THETA:
        lo = (seq.N + 1) / math.sqrt(2)
        if v[-1] < lo - 1e-12:
            rep.violations.append(Violation(seq.N, "theta_N >= (N+1)/sqrt(2)", float(v[-1] - lo)))
    return rep


def _require_valid(seq: ParamSeq) -> None:
    rep = validate(seq)
    if not rep.ok:
        raise ValueError(f"invalid momentum sequence: {rep}")


def is_exact(seq: ParamSeq, rtol: float = RULE_RTOL) -> bool:
    """True when every rule holds with equality (FGM t, OGM theta)."""
    return bool(np.all(np.abs(seq.slacks) <= rtol * np.abs(seq.partial_sums)))
