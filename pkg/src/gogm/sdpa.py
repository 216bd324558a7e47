"""Write and read the dual certificate problems in SDPA sparse format.

The problem is posed as SDPA's primal::

    minimize c'x  subject to  X = sum_v x_v F_v - F_0  >= 0

Block 1 (order N+2) is the certificate LMI. Block 2 is diagonal and holds
nonnegativity of every multiplier plus each affine equality written as a
pair of opposite inequalities. Variables are ordered
``lambda_1..lambda_N, tau_0..tau_N, [eta, beta_0..beta_N,] gamma``; the
objective is ``gamma / 2``, i.e. the bound for ``L = R = 1``.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .pep import CertKind, DualCertificate, build_matrices
from .steps import StepMatrix


def variable_names(kind: CertKind, N: int) -> list:
    names = [f"lambda_{i}" for i in range(1, N + 1)] + [f"tau_{i}" for i in range(N + 1)]
    if CertKind(kind) == CertKind.D_DPRIME:
        names += ["eta"] + [f"beta_{i}" for i in range(N + 1)]
    return names + ["gamma"]


@dataclass
class SdpaProblem:
    """Sparse SDPA data: ``entries[(mat, blk)][(i, j)]`` with 1-based, upper-triangle keys."""

    m: int
    block_sizes: list
    c: np.ndarray
    entries: dict = field(default_factory=lambda: defaultdict(dict))
    comments: list = field(default_factory=list)

    def add(self, mat: int, blk: int, i: int, j: int, value: float) -> None:
        if i > j:
            i, j = j, i
        key = (mat, blk)
        d = self.entries[key]
        d[(i, j)] = d.get((i, j), 0.0) + float(value)

    def prune(self) -> None:
        for key in list(self.entries):
            d = {ij: v for ij, v in self.entries[key].items() if v != 0.0}
            if d:
                self.entries[key] = d
            else:
                del self.entries[key]

    def dense(self, mat: int, blk: int) -> np.ndarray:
        n = abs(self.block_sizes[blk - 1])
        M = np.zeros((n, n))
        for (i, j), v in self.entries.get((mat, blk), {}).items():
            M[i - 1, j - 1] = v
            M[j - 1, i - 1] = v
        return M

    def slack(self, x: np.ndarray) -> list:
        """The blocks ``X = sum_v x_v F_v - F_0`` at ``x``."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.m,):
            raise ValueError(f"expected {self.m} variables")
        out = []
        for b in range(1, len(self.block_sizes) + 1):
            X = -self.dense(0, b)
            for v in range(1, self.m + 1):
                if (v, b) in self.entries:
                    X += x[v - 1] * self.dense(v, b)
            out.append(X)
        return out

    def to_text(self) -> str:
        lines = [f'" {c}' for c in self.comments]
        lines.append(str(self.m))
        lines.append(str(len(self.block_sizes)))
        lines.append(" ".join(str(s) for s in self.block_sizes))
        lines.append(" ".join(repr(float(v)) for v in self.c))
        for mat, blk in sorted(self.entries):
            for (i, j), v in sorted(self.entries[(mat, blk)].items()):
                lines.append(f"{mat} {blk} {i} {j} {v!r}")
        return "\n".join(lines) + "\n"


def _lmi_data(prob: SdpaProblem, kind: CertKind, h: StepMatrix) -> None:
    pm = build_matrices(h)
    N, n = pm.N, pm.n
    gamma_col = n + 1

    def put(var, M):
        iu = np.triu_indices(n)
        for i, j in zip(*iu):
            if M[i, j] != 0.0:
                prob.add(var, 1, i + 1, j + 1, M[i, j])

    var = 1
    for A in pm.A_adj:
        put(var, A)
        var += 1
    for i, D in enumerate(pm.D):
        put(var, D)
        prob.add(var, 1, i + 1, gamma_col, 0.5)
        var += 1
    if kind == CertKind.D_PRIME:
        prob.add(0, 1, n, n, -0.5)
    if kind == CertKind.D_DPRIME:
        prob.add(var, 1, n, n, 0.5)
        var += 1
        for i in range(n):
            prob.add(var, 1, i + 1, i + 1, -1.0)
            var += 1
    prob.add(var, 1, gamma_col, gamma_col, 0.5)


def _equalities(kind: CertKind, N: int) -> list:
    """Each equality as ``(label, {var_index: coef}, rhs)`` with 1-based indices."""
    lam = lambda i: i                  # noqa: E731  lambda_i, i = 1..N
    tau = lambda i: N + 1 + i          # noqa: E731  tau_i, i = 0..N
    eqs = [("tau_0 = lambda_1", {tau(0): 1.0, lam(1): -1.0}, 0.0)]
    for i in range(1, N):
        eqs.append((f"lambda_{i} - lambda_{i + 1} + tau_{i} = 0",
                    {lam(i): 1.0, lam(i + 1): -1.0, tau(i): 1.0}, 0.0))
    if kind == CertKind.D_DPRIME:
        eta = 2 * N + 2
        eqs.append(("lambda_N + tau_N = eta", {lam(N): 1.0, tau(N): 1.0, eta: -1.0}, 0.0))
        eqs.append(("sum beta = 1", {eta + 1 + i: 1.0 for i in range(N + 1)}, 1.0))
    else:
        eqs.append(("lambda_N + tau_N = 1", {lam(N): 1.0, tau(N): 1.0}, 1.0))
    return eqs


def build_sdpa(kind: Union[CertKind, str], h: StepMatrix) -> tuple:
    """Return ``(problem, sidecar)`` for the dual problem of ``kind`` with steps ``h``."""
    kind = CertKind(kind)
    N = h.N
    names = variable_names(kind, N)
    m = len(names)
    eqs = _equalities(kind, N)
    n_diag = m + 2 * len(eqs)
    c = np.zeros(m)
    c[-1] = 0.5
    prob = SdpaProblem(m, [N + 2, -n_diag], c)
    prob.comments = [f"dual certificate problem {kind.value}, N={N}",
                     "block 1: LMI; block 2: nonnegativity then paired equalities"]
    _lmi_data(prob, kind, h)
    for v in range(1, m + 1):
        prob.add(v, 2, v, v, 1.0)
    row = m
    for _, coefs, rhs in eqs:
        for sign in (1.0, -1.0):
            row += 1
            for v, a in coefs.items():
                prob.add(v, 2, row, row, sign * a)
            if rhs:
                prob.add(0, 2, row, row, sign * rhs)
    prob.prune()
    sidecar = {
        "kind": kind.value, "N": N, "m": m,
        "variables": {str(i + 1): s for i, s in enumerate(names)},
        "objective": "gamma / 2 (bound for L = R = 1)",
        "blocks": {"1": f"LMI of order {N + 2}",
                   "2": f"diagonal of order {n_diag}: rows 1..{m} nonnegativity, "
                        f"then {len(eqs)} equalities as >= pairs"},
        "equalities": [label for label, _, _ in eqs],
    }
    return prob, sidecar


def export_sdpa(kind: Union[CertKind, str], h: StepMatrix, path: Union[str, Path]) -> Path:
    """Write ``path`` (SDPA sparse) and ``path + '.json'`` (variable map)."""
    prob, sidecar = build_sdpa(kind, h)
    path = Path(path)
    path.write_text(prob.to_text())
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=1))
    return path


def parse_sdpa(text: str) -> SdpaProblem:
    lines = []
    comments = []
    for raw in text.splitlines():
        s = raw.strip()
        if not s:
            continue
        if s[0] in '"*':
            comments.append(s[1:].strip())
            continue
        lines.append(s.replace(",", " ").replace("{", " ").replace("}", " ")
                      .replace("(", " ").replace(")", " "))
    m = int(lines[0].split()[0])
    nblocks = int(lines[1].split()[0])
    sizes = [int(v) for v in lines[2].split()[:nblocks]]
    c = np.array([float(v) for v in lines[3].split()[:m]])
    prob = SdpaProblem(m, sizes, c, comments=comments)
    for s in lines[4:]:
        mat, blk, i, j, v = s.split()[:5]
        prob.add(int(mat), int(blk), int(i), int(j), float(v))
    return prob


def read_sdpa(path: Union[str, Path]) -> SdpaProblem:
    return parse_sdpa(Path(path).read_text())


@dataclass
class ConstraintCheck:
    min_eig_lmi: float
    min_diag: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.min_eig_lmi >= -self.tol and self.min_diag >= -self.tol


def check_certificate(prob: SdpaProblem, cert: DualCertificate, tol: float = 1e-9) -> ConstraintCheck:
    """Evaluate every exported constraint at the certificate's multipliers."""
    X1, X2 = prob.slack(cert.vector())
    return ConstraintCheck(float(np.linalg.eigvalsh(X1)[0]), float(np.diag(X2).min()), tol)
