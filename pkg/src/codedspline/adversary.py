"""Adversarial worker strategies.

Every strategy picks a corrupted index set of size at most ``gamma`` and
overwrites those workers' replies with values inside ``[-M, M]^m``.  Indices
are 0-based positions into ``beta``.

Strategies
----------
``none``
    No corruption.
``cluster_max``
    For each encoder point, the ``gamma // K`` nearest decoder points reply
    ``+M`` in every coordinate.
``impossibility_poly``
    Splices a degree-7 polynomial bump into the honest curve on a window
    around the middle encoder point.  Against ``f(x) = x`` with a budget
    proportional to N this keeps the error bounded away from zero.
``random_uniform``
    ``gamma`` random workers reply i.i.d. uniform values on ``[-M, M]^m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Optional

import numpy as np

from . import spline_core
from .codec import CodedTask, VectorSpline
from .errors import BudgetExceeded, IllConditioned, Unsupported

STRATEGIES = ("none", "cluster_max", "impossibility_poly", "random_uniform")

# Residual threshold for the polynomial's interpolation constraints.
_POLY_TOL = 1e-7


@dataclass(frozen=True)
class AttackPlan:
    gamma: int
    strategy: str = "none"
    delta: float = 1.0
    target_index: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise Unsupported(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.gamma < 0:
            raise BudgetExceeded(f"gamma must be >= 0, got {self.gamma}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def _mid_index(task: CodedTask, plan: AttackPlan) -> int:
    if plan.target_index is not None:
        return int(plan.target_index)
    # alpha_{floor(K/2)} in 1-based numbering.
    return max(task.K // 2 - 1, 0)


def attack_window(plan: AttackPlan, task: CodedTask) -> tuple[float, float, float]:
    """``(alpha_min, alpha_mid, alpha_max)`` for the polynomial attack.

    The window has width ``gamma / N`` centred on the target encoder point and
    clipped to [0, 1].
    """
    mid = task.alpha[_mid_index(task, plan)]
    w = plan.gamma / task.N
    return max(0.0, mid - w / 2), float(mid), min(1.0, mid + w / 2)


def select_corrupted(plan: AttackPlan, task: CodedTask) -> np.ndarray:
    """Sorted indices of the corrupted workers."""
    N = task.N
    if plan.gamma > N:
        raise BudgetExceeded(f"gamma = {plan.gamma} exceeds N = {N}")
    if plan.strategy == "none" or plan.gamma == 0:
        return np.array([], dtype=int)

    if plan.strategy == "cluster_max":
        per = plan.gamma // task.K
        if per == 0:
            return np.array([], dtype=int)
        chosen = []
        for a in task.alpha:
            # Stable sort breaks distance ties toward the lower index.
            order = np.argsort(np.abs(task.beta - a), kind="stable")
            chosen.extend(order[:per].tolist())
        idx = np.unique(chosen)
        return idx[: plan.gamma]

    if plan.strategy == "impossibility_poly":
        lo, mid, hi = attack_window(plan, task)
        inside = np.flatnonzero((task.beta >= lo) & (task.beta <= hi))
        if inside.size > plan.gamma:
            keep = np.argsort(np.abs(task.beta[inside] - mid), kind="stable")[: plan.gamma]
            inside = np.sort(inside[keep])
        return inside

    rng = np.random.default_rng(plan.seed)
    return np.sort(rng.choice(N, size=plan.gamma, replace=False))


@dataclass(frozen=True)
class AttackPolynomial:
    """Degree-7 polynomial in the shifted variable ``z = (x - center) / scale``."""

    coefs: np.ndarray  # increasing degree, length 8
    center: float
    scale: float

    def __call__(self, x, order: int = 0):
        z = (np.asarray(x, dtype=float) - self.center) / self.scale
        p = np.polynomial.Polynomial(self.coefs)
        if order:
            p = p.deriv(order)
        return p(z) / self.scale**order


def _constraint_rows(z: float, order: int) -> np.ndarray:
    row = np.zeros(8)
    for k in range(order, 8):
        row[k] = factorial(k) / factorial(k - order) * z ** (k - order)
    return row


def build_attack_polynomial(
    encoder: spline_core.SplineModel,
    alpha_min: float,
    alpha_max: float,
    alpha_mid: float,
    y_a: float,
) -> AttackPolynomial:
    """Polynomial matching ``encoder`` to second order at both window ends and
    passing through ``(alpha_mid, y_a)``.

    Seven conditions on eight coefficients leave a one-dimensional family; the
    minimum-Euclidean-norm coefficient vector (in the shifted variable) is
    returned.
    """
    if not alpha_min < alpha_mid < alpha_max:
        raise ValueError("need alpha_min < alpha_mid < alpha_max")
    center = 0.5 * (alpha_min + alpha_max)
    scale = 0.5 * (alpha_max - alpha_min)
    if scale < 1e-6:
        raise IllConditioned(f"attack window of width {2 * scale:.3g} is too narrow")

    rows, rhs = [], []
    for x, z in ((alpha_min, -1.0), (alpha_max, 1.0)):
        vals = (
            spline_core.evaluate(encoder, x),
            spline_core.derivative(encoder, x, 1),
            spline_core.derivative(encoder, x, 2),
        )
        for j, v in enumerate(vals):
            # d^j/dx^j = scale^-j d^j/dz^j
            rows.append(_constraint_rows(z, j))
            rhs.append(v * scale**j)
    rows.append(_constraint_rows((alpha_mid - center) / scale, 0))
    rhs.append(y_a)
    A = np.array(rows)
    b = np.array(rhs)
    coefs, *_ = np.linalg.lstsq(A, b, rcond=None)
    poly = AttackPolynomial(coefs, center, scale)

    resid = np.abs(A @ coefs - b)
    if not np.all(resid <= _POLY_TOL * np.maximum(1.0, np.abs(b))):
        raise IllConditioned(f"attack polynomial constraints violated by {resid.max():.3g}")
    return poly


def _impossibility_values(plan, B, task, encoder, M, m):
    if encoder is None:
        raise ValueError("impossibility_poly needs the encoder")
    if encoder.dim != m:
        raise Unsupported("impossibility_poly targets f(x) = x and needs input and output dimensions to match")
    lo, mid, hi = attack_window(plan, task)
    k = _mid_index(task, plan)
    u_mid = encoder(mid)[0]
    delta = u_mid - task.inputs[k]
    y_a = u_mid + plan.delta + 2.0 * np.abs(delta)
    out = np.empty((B.size, m))
    for j, comp in enumerate(encoder.components):
        P = build_attack_polynomial(comp, lo, hi, mid, y_a[j])
        out[:, j] = P(task.beta[B])
    return np.clip(out, -M, M)


def corrupt_responses(
    plan: AttackPlan,
    B,
    honest,
    task: CodedTask,
    encoder: Optional[VectorSpline] = None,
) -> np.ndarray:
    """Copy of ``honest`` (shape (N, m)) with rows in ``B`` overwritten."""
    honest = np.asarray(honest, dtype=float)
    squeeze = honest.ndim == 1
    Y = honest.reshape(honest.shape[0], -1).copy()
    B = np.asarray(B, dtype=int)
    M = task.M
    if B.size:
        if plan.strategy == "cluster_max":
            Y[B] = M
        elif plan.strategy == "impossibility_poly":
            Y[B] = _impossibility_values(plan, B, task, encoder, M, Y.shape[1])
        elif plan.strategy == "random_uniform":
            # Offset stream so index selection and values stay independent.
            rng = np.random.default_rng([plan.seed, 1])
            Y[B] = rng.uniform(-M, M, size=(B.size, Y.shape[1]))
    return Y[:, 0] if squeeze else Y
