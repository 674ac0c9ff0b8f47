"""Smoothing-spline encoder and decoder for coded computing.

The master interpolates (or smooths) the K inputs at encoder points ``alpha``,
samples the resulting curve at the N decoder points ``beta`` to produce coded
inputs, and later fits a smoothing spline through the workers' replies to read
off estimates at ``alpha``.  Vector-valued data is handled one coordinate at a
time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import spline_core
from .errors import InvalidAbscissae, InvalidExponent, InvalidLambda, ResponseOutOfRange, TooFewPoints

__all__ = [
    "CodedTask",
    "VectorSpline",
    "default_alpha",
    "default_beta",
    "design_encoder",
    "encode",
    "choose_lambda_d",
    "fit_decoder",
    "decode",
]


def default_alpha(K: int) -> np.ndarray:
    return np.arange(1, K + 1) / (K + 1)


def default_beta(N: int) -> np.ndarray:
    return np.arange(1, N + 1) / N


def _increasing(name, pts) -> np.ndarray:
    p = np.asarray(pts, dtype=float)
    if p.ndim != 1 or np.any(np.diff(p) <= 0):
        raise InvalidAbscissae(f"{name} must be strictly increasing")
    if p[0] < 0.0 or p[-1] > 1.0:
        raise InvalidAbscissae(f"{name} must lie in [0, 1]")
    return p


@dataclass(frozen=True)
class CodedTask:
    """Inputs plus the fixed encoder/decoder points of one coded computation.

    ``inputs`` has shape (K, d).  ``m`` is the output dimension and ``M`` the
    output bound of the function being computed.
    """

    inputs: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    M: float
    m: int = 1

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "alpha", _increasing("alpha", self.alpha))
        object.__setattr__(self, "beta", _increasing("beta", self.beta))
        if self.K < 3:
            raise TooFewPoints(f"need K >= 3 inputs, got {self.K}")
        if self.alpha.size != self.K:
            raise InvalidAbscissae(f"{self.alpha.size} encoder points for {self.K} inputs")
        if self.N < self.K:
            raise TooFewPoints(f"need N >= K, got N={self.N}, K={self.K}")
        if not self.M > 0:
            raise ValueError("M must be positive")

    @classmethod
    def create(cls, inputs, N: int, M: float, m: int = 1, alpha=None, beta=None) -> "CodedTask":
        x = np.asarray(inputs, dtype=float)
        K = x.shape[0]
        return cls(
            x,
            default_alpha(K) if alpha is None else alpha,
            default_beta(N) if beta is None else beta,
            M,
            m,
        )

    @property
    def K(self) -> int:
        return self.inputs.shape[0]

    @property
    def N(self) -> int:
        return self.beta.size

    @property
    def d(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class VectorSpline:
    """One :class:`SplineModel` per coordinate, all on the same knots and lambda."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("VectorSpline needs at least one component")
        k0 = comps[0].knots
        for c in comps[1:]:
            if c.lam != comps[0].lam or not np.array_equal(c.knots, k0):
                raise ValueError("components must share knots and lambda")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return len(self.components)

    def __call__(self, x) -> np.ndarray:
        """Evaluate at points ``x``; returns shape (len(x), dim)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.column_stack([spline_core.evaluate(c, x) for c in self.components])

    def derivative(self, x, order: int = 1) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.column_stack([spline_core.derivative(c, x, order) for c in self.components])


def _fit_columns(points: np.ndarray, Y: np.ndarray, lam: float) -> VectorSpline:
    return VectorSpline(tuple(spline_core.fit_many(points, Y, lam)))


def design_encoder(task: CodedTask, lambda_e: float = 0.0) -> VectorSpline:
    """Encoder through ``(alpha_k, x_k)``, one coordinate at a time.

    ``lambda_e = 0`` gives the natural interpolating spline.  A positive value
    is the effective smoothing parameter obtained after folding the
    Lipschitz-constant weight and the norm-budget constants into one number.
    """
    lambda_e = float(lambda_e)
    if lambda_e < 0 or not np.isfinite(lambda_e):
        raise InvalidLambda(f"lambda_e must be >= 0, got {lambda_e}")
    return _fit_columns(task.alpha, task.inputs, lambda_e)


def encode(encoder: VectorSpline, beta) -> np.ndarray:
    """Coded inputs ``u_e(beta_n)``, shape (N, d)."""
    return encoder(beta)


def choose_lambda_d(N: int, a: float, J: float = 1.0, C_lambda: float = 1.0) -> float:
    """``J * N**(8/5 * (a - 1))`` clamped into ``(C_lambda * N**-4, 1]``."""
    if not (0.0 <= a < 1.0):
        raise InvalidExponent(f"a must lie in [0, 1), got {a}")
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    lam = J * float(N) ** (1.6 * (a - 1.0))
    lower = C_lambda * float(N) ** -4 * (1 + 1e-9)
    return float(min(max(lam, lower), 1.0))


def _check_responses(responses: np.ndarray, M: Optional[float], policy: str) -> np.ndarray:
    if M is None:
        return responses
    if policy == "clamp":
        return np.clip(responses, -M, M)
    if policy == "reject":
        if np.any(np.abs(responses) > M):
            bad = np.argwhere(np.abs(responses) > M)[0]
            raise ResponseOutOfRange(f"response {tuple(bad)} outside [-{M}, {M}]")
        return responses
    raise ValueError(f"unknown response policy {policy!r}")


def fit_decoder(beta, responses, lambda_d: float, M: Optional[float] = None, policy: str = "clamp") -> VectorSpline:
    lambda_d = float(lambda_d)
    if not (0.0 < lambda_d <= 1.0):
        raise InvalidLambda(f"lambda_d must lie in (0, 1], got {lambda_d}")
    Y = np.asarray(responses, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    Y = _check_responses(Y, M, policy)
    beta = _increasing("beta", beta)
    return _fit_columns(beta, Y, lambda_d)


def decode(beta, responses, lambda_d: float, alpha, M: Optional[float] = None, policy: str = "clamp") -> np.ndarray:
    """Estimates ``u_d(alpha_k)`` of f(x_k), shape (K, m)."""
    return fit_decoder(beta, responses, lambda_d, M, policy)(alpha)
