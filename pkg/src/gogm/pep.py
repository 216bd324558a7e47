"""Relaxed performance-estimation matrices and closed-form dual certificates.

All matrices live on the gradient basis ``u_0..u_N`` of R^{N+1}. A certificate
is a set of multipliers making the block

    [[S, tau/2], [tau'/2, gamma/2]]

positive semidefinite, where S depends on the certificate kind:

* D   : ``S = sum_i lam_i A_{i-1,i} + sum_i tau_i D_i``        (bounds f(x_N) - f*)
* D'  : ``S + (1/2) u_N u_N'``                                 (bounds f(y_{N+1}) - f*)
* D'' : ``S + (eta/2) u_N u_N' - sum_i beta_i u_i u_i'``       (bounds min_i ||grad f(x_i)||^2)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np

from .params import ParamSeq, as_theta, is_exact, validate
from .steps import StepMatrix, h_fgm, h_gogm, h_gogm_prime

MEMBERSHIP_TOL = 1e-10
PSD_RTOL = 1e-9
IDENTITY_TOL = 1e-10


class CertKind(str, Enum):
    D = "D"
    D_PRIME = "D_PRIME"
    D_DPRIME = "D_DPRIME"


class CertificateUndefined(ValueError):
    """The closed-form multipliers cannot be formed for this sequence."""


def _sym_outer(n: int, i: int, w: np.ndarray) -> np.ndarray:
    """``u_i w' + w u_i'`` for a vector ``w`` on the basis."""
    M = np.zeros((n, n))
    M[i, :] += w
    M[:, i] += w
    return M


def _diff_outer(n: int, i: int, j: int) -> np.ndarray:
    M = np.zeros((n, n))
    M[i, i] = M[j, j] = 1.0
    M[i, j] = M[j, i] = -1.0
    return M


def _pad(w: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n)
    out[: w.size] = w
    return out


@dataclass(frozen=True)
class PepMatrices:
    """``C_i``, ``D_i`` and the adjacent ``A_{i-1,i}``; other ``A`` and ``B`` on demand."""

    h: StepMatrix

    @property
    def N(self) -> int:
        return self.h.N

    @property
    def n(self) -> int:
        return self.h.N + 1

    def _rows_sum(self, lo: int, hi: int) -> np.ndarray:
        # sum over l = lo+1..hi of h_{l, 0..l-1}, as a vector over the basis
        return _pad(self.h.h[lo:hi].sum(axis=0), self.n)

    def A(self, i: int, j: int) -> np.ndarray:
        """``A_{i,j}`` for ``i < j``."""
        if not 0 <= i < j <= self.N:
            raise IndexError(f"A_{{i,j}} needs 0 <= i < j <= N, got ({i}, {j})")
        return 0.5 * _diff_outer(self.n, i, j) + 0.5 * _sym_outer(self.n, j, self._rows_sum(i, j))

    def B(self, i: int, j: int) -> np.ndarray:
        """``B_{i,j}`` for ``j < i``."""
        if not 0 <= j < i <= self.N:
            raise IndexError(f"B_{{i,j}} needs 0 <= j < i <= N, got ({i}, {j})")
        return 0.5 * _diff_outer(self.n, i, j) - 0.5 * _sym_outer(self.n, j, self._rows_sum(j, i))

    def C(self, i: int) -> np.ndarray:
        M = np.zeros((self.n, self.n))
        M[i, i] = 0.5
        return M

    @cached_property
    def A_adj(self) -> list:
        """``[A_{0,1}, ..., A_{N-1,N}]``."""
        return [self.A(i - 1, i) for i in range(1, self.N + 1)]

    @cached_property
    def D(self) -> list:
        n = self.n
        out = []
        acc = np.zeros(n)
        for i in range(n):
            if i:
                acc[:i] += self.h.h[i - 1, :i]
            M = 0.5 * _sym_outer(n, i, acc)
            M[i, i] += 0.5
            out.append(M)
        return out


def build_matrices(h: StepMatrix) -> PepMatrices:
    return PepMatrices(h)


def _frozen(a) -> Optional[np.ndarray]:
    if a is None:
        return None
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DualCertificate:
    """Multipliers of one dual problem together with the step matrix they certify."""

    kind: CertKind
    lam: np.ndarray
    tau: np.ndarray
    gamma: float
    h: StepMatrix
    eta: Optional[float] = None
    beta: Optional[np.ndarray] = None
    seq: Optional[ParamSeq] = None
    name: str = ""  # which closed-form multiplier family built it

    def __post_init__(self):
        object.__setattr__(self, "kind", CertKind(self.kind))
        object.__setattr__(self, "lam", _frozen(self.lam))
        object.__setattr__(self, "tau", _frozen(self.tau))
        object.__setattr__(self, "beta", _frozen(self.beta))
        N = self.h.N
        if self.lam.shape != (N,) or self.tau.shape != (N + 1,):
            raise ValueError(f"need N={N} lambdas and N+1 taus")
        if (self.kind == CertKind.D_DPRIME) != (self.eta is not None and self.beta is not None):
            raise ValueError("eta and beta are present exactly for D''")
        if self.beta is not None and self.beta.shape != (N + 1,):
            raise ValueError("need N+1 betas")

    @property
    def N(self) -> int:
        return self.h.N

    def bound_value(self, L: float = 1.0, R: float = 1.0) -> float:
        """``LR^2 gamma / 2`` for cost kinds, ``L^2 R^2 gamma / 2`` for D''."""
        scale = (L * R) ** 2 if self.kind == CertKind.D_DPRIME else L * R * R
        return 0.5 * scale * self.gamma

    def norm_bound(self, L: float = 1.0, R: float = 1.0) -> float:
        """Bound on the smallest gradient norm (D'' only)."""
        if self.kind != CertKind.D_DPRIME:
            raise ValueError("only D'' certificates bound a gradient norm")
        return math.sqrt(self.bound_value(L, R))

    def scaled(self, c: float) -> "DualCertificate":
        """All multipliers multiplied by ``c`` (the LMI is linear in them)."""
        return replace(self, lam=c * self.lam, tau=c * self.tau, gamma=c * self.gamma,
                       eta=None if self.eta is None else c * self.eta,
                       beta=None if self.beta is None else c * self.beta)

    def vector(self) -> np.ndarray:
        """Multipliers stacked as ``(lam, tau, [eta, beta,] gamma)``."""
        parts = [self.lam, self.tau]
        if self.kind == CertKind.D_DPRIME:
            parts += [[self.eta], self.beta]
        parts.append([self.gamma])
        return np.concatenate(parts)


def _require(seq: ParamSeq, doubled: bool) -> None:
    if seq.final_rule_doubled != doubled:
        want = "theta-type" if doubled else "t-type"
        raise ValueError(f"certificate needs a {want} sequence")
    rep = validate(seq)
    if not rep.ok:
        raise ValueError(f"invalid momentum sequence: {rep}")


def cert_gogm_D(theta: ParamSeq) -> DualCertificate:
    """Feasible point of D for GOGM; a t-type input is read as theta-type."""
    if not theta.final_rule_doubled:
        theta = as_theta(theta)
    _require(theta, True)
    v, s = theta.values, theta.partial_sums
    tau0 = 2.0 / s[-1]
    tau = v * tau0
    tau[0] = tau0
    tau[-1] = 0.5 * v[-1] * tau0
    return DualCertificate(CertKind.D, s[:-1] * tau0, tau, 0.5 * tau0, h_gogm(theta),
                           seq=theta, name="gogm_cost")


def cert_gogm_Dprime(t: ParamSeq) -> DualCertificate:
    _require(t, False)
    v, s = t.values, t.partial_sums
    tau0 = 1.0 / s[-1]
    tau = v * tau0
    return DualCertificate(CertKind.D_PRIME, s[:-1] * tau0, tau, 0.5 * tau0, h_gogm_prime(t),
                           seq=t, name="gogm_prime_cost")


def cert_fgm_Dpp(t: ParamSeq) -> DualCertificate:
    """Smallest-gradient certificate for FGM; needs ``t_i^2 = T_i``."""
    _require(t, False)
    if not is_exact(t):
        raise ValueError("the FGM gradient certificate needs t_i^2 = T_i for every i")
    v = t.values
    tau0 = 1.0 / (0.5 * float(np.sum(v * v)))
    return DualCertificate(CertKind.D_DPRIME, v[:-1] ** 2 * tau0, v * tau0, tau0, h_fgm(t),
                           eta=float(v[-1] ** 2 * tau0), beta=0.5 * v * v * tau0,
                           seq=t, name="fgm_grad")


def cert_gogm_Dpp(t: ParamSeq) -> DualCertificate:
    """Smallest-gradient certificate for GOGM'; needs some strict slack ``t_i^2 < T_i``."""
    _require(t, False)
    v, s = t.values, t.partial_sums
    slack = s - v * v
    total = float(np.sum(slack))
    if not total > 1e-12 * float(np.sum(s)):
        raise CertificateUndefined(
            "certificate undefined: every slack T_i - t_i^2 is zero, so tau_0 = 1/0")
    tau0 = 1.0 / total
    return DualCertificate(CertKind.D_DPRIME, s[:-1] * tau0, v * tau0, 0.5 * tau0,
                           h_gogm_prime(t), eta=float(s[-1] * tau0), beta=slack * tau0,
                           seq=t, name="gogm_prime_grad")


_CERTIFICATES = {"gogm_cost": cert_gogm_D, "gogm_prime_cost": cert_gogm_Dprime,
                 "fgm_grad": cert_fgm_Dpp, "gogm_prime_grad": cert_gogm_Dpp}


def certify(name: str, seq: ParamSeq) -> DualCertificate:
    """Build the named certificate: gogm_cost, gogm_prime_cost, fgm_grad or gogm_prime_grad."""
    try:
        fn = _CERTIFICATES[name]
    except KeyError:
        raise ValueError(f"unknown certificate {name!r}; choose from {sorted(_CERTIFICATES)}") from None
    return fn(seq)


def assemble_S(pm: PepMatrices, cert: DualCertificate) -> np.ndarray:
    if pm.N != cert.N:
        raise ValueError("certificate and matrices differ in N")
    S = np.zeros((pm.n, pm.n))
    for lam, A in zip(cert.lam, pm.A_adj):
        S += lam * A
    for tau, D in zip(cert.tau, pm.D):
        S += tau * D
    if cert.kind == CertKind.D_PRIME:
        S[pm.N, pm.N] += 0.5
    elif cert.kind == CertKind.D_DPRIME:
        S[pm.N, pm.N] += 0.5 * cert.eta
        S[np.diag_indices(pm.n)] -= cert.beta
    return S


def lmi_block(pm: PepMatrices, cert: DualCertificate) -> np.ndarray:
    n = pm.n
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = assemble_S(pm, cert)
    M[:n, n] = M[n, :n] = 0.5 * cert.tau
    M[n, n] = 0.5 * cert.gamma
    return M


def closed_form_block(cert: DualCertificate) -> Optional[np.ndarray]:
    """The rank-one-plus-diagonal form the block must take for each certificate family."""
    seq = cert.seq
    if seq is None:
        return None
    v, s = seq.values, seq.partial_sums
    tau0 = cert.tau[0]
    if cert.name == "gogm_cost":
        vt = np.concatenate([v[:-1], [v[-1] / 2, 0.5]])
        vT = np.concatenate([s[:-1], [s[-1] / 4, 0.25]])
        return (np.diag(vT - vt * vt) + np.outer(vt, vt)) * tau0
    if cert.name == "gogm_prime_cost":
        vt = np.concatenate([v, [0.5]])
        vT = np.concatenate([s, [0.25]])
        return (np.diag(vT - vt * vt) + np.outer(vt, vt)) * tau0
    if cert.name == "fgm_grad":
        vt = np.concatenate([v, [1.0]])
        return 0.5 * np.outer(vt, vt) * tau0
    if cert.name == "gogm_prime_grad":
        vt = np.concatenate([v, [0.5]])
        return np.outer(vt, vt) * tau0
    return None


@dataclass
class VerificationReport:
    kind: CertKind
    N: int
    violations: list = field(default_factory=list)
    min_eig: float = float("nan")
    trace: float = float("nan")
    identity_gap: Optional[float] = None

    @property
    def psd_margin(self) -> float:
        """Smallest eigenvalue relative to the trace (``>= -1e-9`` passes)."""
        return self.min_eig / self.trace if self.trace > 0 else self.min_eig

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        head = f"{self.kind.value} N={self.N}: "
        if self.ok:
            extra = "" if self.identity_gap is None else f", identity gap {self.identity_gap:.1e}"
            return head + f"verified (min eig {self.min_eig:.3e}{extra})"
        return head + "; ".join(self.violations)


def _membership(cert: DualCertificate, tol: float) -> list:
    out = []
    lam, tau = cert.lam, cert.tau
    N = cert.N

    def eq(name, resid):
        if abs(resid) > tol:
            out.append(f"{name} violated (residual {resid:.3e})")

    for name, arr in (("lambda", lam), ("tau", tau), ("beta", cert.beta)):
        if arr is not None:
            for i in np.flatnonzero(arr < -tol):
                idx = i + 1 if name == "lambda" else i
                out.append(f"{name}_{idx} >= 0 violated (value {arr[i]:.3e})")
    if cert.gamma < -tol:
        out.append(f"gamma >= 0 violated (value {cert.gamma:.3e})")
    eq("tau_0 = lambda_1", tau[0] - lam[0])
    for i in range(1, N):
        eq(f"lambda_{i} - lambda_{i + 1} + tau_{i} = 0", lam[i - 1] - lam[i] + tau[i])
    if cert.kind == CertKind.D_DPRIME:
        if cert.eta < -tol:
            out.append(f"eta >= 0 violated (value {cert.eta:.3e})")
        eq("lambda_N + tau_N = eta", lam[-1] + tau[-1] - cert.eta)
        eq("sum beta = 1", float(np.sum(cert.beta)) - 1.0)
    else:
        eq("lambda_N + tau_N = 1", lam[-1] + tau[-1] - 1.0)
    return out


def verify(cert: DualCertificate, pm: Optional[PepMatrices] = None,
           tol: float = MEMBERSHIP_TOL, psd_rtol: float = PSD_RTOL,
           identity_tol: float = IDENTITY_TOL) -> VerificationReport:
    """Check multiplier membership, PSD-ness of the block and the closed form."""
    pm = pm or build_matrices(cert.h)
    rep = VerificationReport(cert.kind, cert.N)
    rep.violations += _membership(cert, tol)
    M = lmi_block(pm, cert)
    M = 0.5 * (M + M.T)
    rep.trace = float(np.trace(M))
    rep.min_eig = float(np.linalg.eigvalsh(M)[0])
    if rep.min_eig < -psd_rtol * max(abs(rep.trace), 1e-300):
        rep.violations.append(f"block not PSD (min eig {rep.min_eig:.3e}, trace {rep.trace:.3e})")
    ref = closed_form_block(cert)
    if ref is not None:
        scale = max(1.0, float(np.abs(ref).max()))
        rep.identity_gap = float(np.abs(M - ref).max()) / scale
        if rep.identity_gap > identity_tol:
            rep.violations.append(f"closed-form identity off by {rep.identity_gap:.3e}")
    return rep
