"""Smooth convex test functions with known gradient Lipschitz constant and minimizer."""
from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.special import logsumexp, softmax


class FunctionOracle:
    """Base class; subclasses set ``d``, ``L``, ``x_star`` and ``family``."""

    family = "generic"

    def __init__(self, d: int, L: float, x_star: Optional[np.ndarray] = None):
        if L <= 0:
            raise ValueError("Lipschitz constant must be positive")
        self.d = int(d)
        self.L = float(L)
        self.x_star = None if x_star is None else np.asarray(x_star, dtype=float)

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def f_star(self) -> float:
        if self.x_star is None:
            raise ValueError(f"{self.family} oracle has no known minimizer")
        return self.value(self.x_star)

    def __repr__(self):
        return f"<{type(self).__name__} d={self.d} L={self.L:g}>"


class QuadraticPhi(FunctionOracle):
    """``(L/2) ||x||^2``: OGM's worst case for the final gradient norm."""

    family = "quadratic_phi"

    def __init__(self, L: float = 1.0, d: int = 1):
        super().__init__(d, L, np.zeros(d))

    def value(self, x):
        return 0.5 * self.L * float(x @ x)

    def grad(self, x):
        return self.L * np.asarray(x, dtype=float)


class HuberPsi(FunctionOracle):
    """GM's worst case for the gradient norm after N steps from radius R.

    Linear with slope ``LR/(N+1)`` outside the ball of radius ``R/(N+1)``,
    ``(L/2)||x||^2`` inside it.
    """

    family = "huber_psi"

    def __init__(self, N: int, R: float = 1.0, L: float = 1.0, d: int = 1):
        if N < 1 or R <= 0:
            raise ValueError("need N >= 1 and R > 0")
        super().__init__(d, L, np.zeros(d))
        self.N, self.R = int(N), float(R)
        self.kink = self.R / (self.N + 1)

    def value(self, x):
        r = float(np.linalg.norm(x))
        if r >= self.kink:
            return self.L * self.kink * r - 0.5 * self.L * self.kink ** 2
        return 0.5 * self.L * r * r

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        if r >= self.kink:
            return (self.L * self.kink / r) * x
        return self.L * x


class PsdQuadratic(FunctionOracle):
    """``(1/2) x'Qx + p'x`` with ``0 <= Q``, ``||Q|| <= L``."""

    family = "psd_quadratic"

    def __init__(self, Q: np.ndarray, p: np.ndarray, L: Optional[float] = None,
                 x_star: Optional[np.ndarray] = None):
        Q = np.asarray(Q, dtype=float)
        Q = 0.5 * (Q + Q.T)
        eig = np.linalg.eigvalsh(Q)
        if eig[0] < -1e-12 * max(1.0, abs(eig[-1])):
            raise ValueError("Q is not positive semidefinite")
        if L is None:
            L = float(eig[-1])
        elif eig[-1] > L * (1 + 1e-12):
            raise ValueError(f"||Q|| = {eig[-1]} exceeds L = {L}")
        p = np.asarray(p, dtype=float)
        if x_star is None:
            x_star = np.linalg.lstsq(Q, -p, rcond=None)[0]
        super().__init__(Q.shape[0], L, x_star)
        self.Q, self.p = Q, p
        if np.linalg.norm(self.grad(self.x_star)) > 1e-8 * self.L * max(1.0, np.linalg.norm(self.x_star)):
            raise ValueError("p is not in the range of Q; the problem has no minimizer")

    def value(self, x):
        return 0.5 * float(x @ (self.Q @ x)) + float(self.p @ x)

    def grad(self, x):
        return self.Q @ x + self.p


class LeastSquares(PsdQuadratic):
    """``(1/2)||Ax - b||^2`` with ``L = sigma_max(A)^2``."""

    family = "least_squares"

    def __init__(self, A: np.ndarray, b: np.ndarray):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        smax = np.linalg.norm(A, 2)
        x_star = np.linalg.lstsq(A, b, rcond=None)[0]
        self.A, self.b = A, b
        super().__init__(A.T @ A, -A.T @ b, L=smax ** 2, x_star=x_star)

    def value(self, x):
        r = self.A @ x - self.b
        return 0.5 * float(r @ r)

    def grad(self, x):
        return self.A.T @ (self.A @ x - self.b)


class LogSumExp(FunctionOracle):
    """``mu * log sum_j exp(a_j'(x - c) / mu)`` with rows ``a_j`` summing to zero.

    Zero row sum makes ``c`` a minimizer. ``L = max_j ||a_j||^2 / mu`` bounds
    the Hessian ``(1/mu) A'(diag(p) - pp')A``.
    """

    family = "log_sum_exp"

    def __init__(self, A: np.ndarray, center: np.ndarray, mu: float = 1.0):
        A = np.asarray(A, dtype=float)
        if mu <= 0:
            raise ValueError("smoothing parameter must be positive")
        if np.linalg.norm(A.sum(axis=0)) > 1e-12 * max(1.0, np.abs(A).max()):
            raise ValueError("rows of A must sum to zero so that the center is a minimizer")
        L = float(np.max(np.sum(A * A, axis=1))) / mu
        super().__init__(A.shape[1], L, np.asarray(center, dtype=float))
        self.A, self.mu = A, float(mu)

    def value(self, x):
        return self.mu * float(logsumexp(self.A @ (x - self.x_star) / self.mu))

    def grad(self, x):
        return self.A.T @ softmax(self.A @ (x - self.x_star) / self.mu)


def make_quadratic_phi(L: float = 1.0, d: int = 1) -> QuadraticPhi:
    return QuadraticPhi(L, d)


def make_huber_psi(N: int, R: float = 1.0, L: float = 1.0, d: int = 1) -> HuberPsi:
    return HuberPsi(N, R, L, d)


def _orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def make_random_psd_quadratic(seed: int, d: int, L: float = 1.0,
                              singular: bool = True) -> PsdQuadratic:
    """Random class-Q member whose largest eigenvalue is exactly ``L``.

    With ``singular`` the smallest eigenvalue is pinned to 0; the linear term
    is ``-Q x*`` for a random ``x*`` so a minimizer always exists.
    """
    rng = np.random.default_rng(seed)
    eig = np.sort(rng.uniform(0.0, L, size=d))
    eig[-1] = L
    if singular and d > 1:
        eig[0] = 0.0
    U = _orthogonal(rng, d)
    Q = (U * eig) @ U.T
    x_star = rng.standard_normal(d)
    return PsdQuadratic(Q, -Q @ x_star, L=L, x_star=x_star)


def make_random_least_squares(seed: int, m: int, d: int) -> LeastSquares:
    rng = np.random.default_rng(seed)
    return LeastSquares(rng.standard_normal((m, d)), rng.standard_normal(m))


def make_random_log_sum_exp(seed: int, d: int, n_terms: Optional[int] = None,
                            mu: float = 1.0) -> LogSumExp:
    rng = np.random.default_rng(seed)
    k = n_terms or d
    B = rng.standard_normal((k, d))
    return LogSumExp(np.vstack([B, -B]), rng.standard_normal(d), mu)


def random_start(oracle: FunctionOracle, R: float, rng: np.random.Generator) -> np.ndarray:
    """A point at distance exactly ``R`` from the oracle's minimizer."""
    v = rng.standard_normal(oracle.d)
    return oracle.x_star + R * v / np.linalg.norm(v)


def unit_start(oracle: FunctionOracle, R: float = 1.0) -> np.ndarray:
    """``x* + R e_1``: the starting point used by the worst-case constructions."""
    e = np.zeros(oracle.d)
    e[0] = 1.0
    return oracle.x_star + R * e
