"""Sobolev norms on [0, 1], equivalent kernels, and numerical checks of the
analytic facts the error analysis relies on."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from . import spline_core
from .constants import (
    BANDWIDTH_C0,
    FD_STEP,
    INTERP_INEQ_SLACK,
    KERNEL_GRID,
    NORM_EQUIV_HIGH,
    NORM_EQUIV_LOW,
    NORM_EQUIV_SLACK,
    QUADRATURE_POINTS,
)
from .errors import BandwidthTooNarrow, HypothesisNotMet, InvalidLambda, Unsupported

_GRID = np.linspace(0.0, 1.0, QUADRATURE_POINTS)
_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class FunctionHandle:
    """A scalar function on [0, 1] with optional analytic derivatives.

    Missing derivatives fall back to central differences with step
    ``FD_STEP``; the stencil is shifted inward near the ends so it never
    leaves the domain.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    deriv1: Optional[Callable[[np.ndarray], np.ndarray]] = None
    deriv2: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __call__(self, x):
        return self.eval(x)

    def derivative(self, order: int) -> Callable[[np.ndarray], np.ndarray]:
        if order == 0:
            return self.eval
        analytic = {1: self.deriv1, 2: self.deriv2}.get(order)
        if analytic is not None:
            return analytic
        if order not in (1, 2):
            raise Unsupported(f"derivative order {order}")
        h = FD_STEP
        f = self.eval

        def fd(x):
            x = np.asarray(x, dtype=float)
            c = np.clip(x, h, 1.0 - h)
            if order == 1:
                return (f(c + h) - f(c - h)) / (2 * h)
            return (f(c + h) - 2 * f(c) + f(c - h)) / (h * h)

        return fd

    def scaled(self, k: float) -> "FunctionHandle":
        d1 = None if self.deriv1 is None else (lambda x, g=self.deriv1: k * g(x))
        d2 = None if self.deriv2 is None else (lambda x, g=self.deriv2: k * g(x))
        return FunctionHandle(lambda x, g=self.eval: k * g(x), d1, d2, f"{k}*{self.name}")

    @classmethod
    def from_spline(cls, model: spline_core.SplineModel, name: str = "spline") -> "FunctionHandle":
        return cls(
            lambda x: spline_core.evaluate(model, x),
            lambda x: spline_core.derivative(model, x, 1),
            lambda x: spline_core.derivative(model, x, 2),
            name,
        )

    @classmethod
    def polynomial(cls, coefs: Sequence[float], name: str = "") -> "FunctionHandle":
        """Polynomial with coefficients in increasing degree."""
        p = np.polynomial.Polynomial(coefs)
        return cls(p, p.deriv(1), p.deriv(2), name or f"poly{list(coefs)}")


def _values(f: FunctionHandle, order: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(f.derivative(order)(_GRID), dtype=float), _GRID.shape)


def lp_norm(f: FunctionHandle, p=2, deriv_order: int = 0) -> float:
    """L^p norm of ``f`` (or a derivative) on [0, 1], p in {1, 2, inf}."""
    if deriv_order not in (0, 1, 2):
        raise Unsupported(f"derivative order {deriv_order}")
    v = np.abs(_values(f, deriv_order))
    if p == 1:
        return float(simpson(v, x=_GRID))
    if p == 2:
        return float(np.sqrt(max(simpson(v * v, x=_GRID), 0.0)))
    if p in (np.inf, "inf", float("inf")):
        return float(v.max())
    raise Unsupported(f"p = {p!r}; supported are 1, 2 and inf")


def sobolev_norm_sq(f: FunctionHandle) -> float:
    """Squared W^{2,2} norm: ||f||^2 + ||f'||^2 + ||f''||^2."""
    return sum(lp_norm(f, 2, k) ** 2 for k in range(3))


def sobolev_eq_norm_sq(f: FunctionHandle) -> float:
    """Squared equivalent norm f(0)^2 + f'(0)^2 + ||f''||^2."""
    f0 = float(np.asarray(f.derivative(0)(np.array(0.0))))
    f1 = float(np.asarray(f.derivative(1)(np.array(0.0))))
    return f0 * f0 + f1 * f1 + lp_norm(f, 2, 2) ** 2


@dataclass(frozen=True)
class NormEquivalenceReport:
    full_sq: float
    eq_sq: float
    ratio: float  # full_sq / eq_sq
    passed: bool
    name: str = ""


def check_norm_equivalence(f: FunctionHandle) -> NormEquivalenceReport:
    """Check ``eq/5 <= full <= 7*eq`` on (0, 1)."""
    full = sobolev_norm_sq(f)
    eq = sobolev_eq_norm_sq(f)
    if eq == 0.0:
        return NormEquivalenceReport(full, eq, float("nan"), full == 0.0, f.name)
    ratio = full / eq
    ok = NORM_EQUIV_LOW - NORM_EQUIV_SLACK <= ratio <= NORM_EQUIV_HIGH + NORM_EQUIV_SLACK
    return NormEquivalenceReport(full, eq, ratio, bool(ok), f.name)


def kernel_silverman(u):
    """Asymptotic equivalent kernel of the cubic smoothing spline."""
    a = np.abs(np.asarray(u, dtype=float)) / _SQRT2
    out = 0.5 * np.exp(-a) * np.sin(a + np.pi / 4)
    return float(out) if out.ndim == 0 else out


def _phi(u, v):
    return np.exp(-u) * (np.cos(u) - np.sin(u) + 2.0 * np.cos(v))


def kernel_K(x, t, lam: float):
    """Boundary-corrected equivalent kernel for equidistant design on [0, 1].

    Interior term plus reflections about both ends; the scale is
    ``sqrt(2) * lam**(1/4)``.
    """
    lam = float(lam)
    if not (0.0 < lam <= 1.0):
        raise InvalidLambda(f"lambda must lie in (0, 1], got {lam}")
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    s = _SQRT2 * lam**0.25
    d = np.abs(x - t) / s
    main = np.exp(-d) * (np.sin(d) + np.cos((x - t) / s))
    left = _phi((x + t) / s, (x - t) / s)
    right = _phi((1 - x) / s + (1 - t) / s, (1 - x) / s - (1 - t) / s)
    out = (main + left + right) / (2.0 * s)
    return float(out) if out.ndim == 0 else out


def kernel_bound(lam: float) -> float:
    """Uniform bound ``9/sqrt(2) * lam**(-1/4)`` on |K_lam|."""
    return 9.0 / _SQRT2 * lam**-0.25


def kernel_sup(lam: float, grid: int = KERNEL_GRID) -> float:
    g = np.linspace(0.0, 1.0, grid)
    return float(np.abs(kernel_K(g[:, None], g[None, :], lam)).max())


@dataclass
class KernelConvergenceReport:
    N_list: list
    lambdas: list
    sup_diffs: list
    passed: bool


def weight_kernel_gap(N: int, lam: float, grid: int = KERNEL_GRID) -> float:
    """``sup |G_{N,lam}(x, beta_i) - K_lam(x, beta_i)|`` over an x-grid and beta_i = i/N."""
    beta = np.arange(1, N + 1) / N
    x = np.linspace(0.0, 1.0, grid)
    G = spline_core.weight_matrix(beta, lam, x)
    K = kernel_K(x[:, None], beta[None, :], lam)
    return float(np.abs(G - K).max())


def check_kernel_weight_convergence(lambda_rule: Callable[[int], float], N_list: Sequence[int]) -> KernelConvergenceReport:
    """Weight function vs kernel gap must strictly decrease along ``N_list``."""
    lams = [float(lambda_rule(N)) for N in N_list]
    for N, lam in zip(N_list, lams):
        if N * lam**0.25 <= BANDWIDTH_C0:
            raise BandwidthTooNarrow(f"N * lambda^(1/4) = {N * lam**0.25:.3g} <= {BANDWIDTH_C0} at N = {N}")
    gaps = [weight_kernel_gap(N, lam) for N, lam in zip(N_list, lams)]
    ok = all(b < a for a, b in zip(gaps, gaps[1:]))
    return KernelConvergenceReport(list(N_list), lams, gaps, bool(ok))


@dataclass(frozen=True)
class InterpolationReport:
    sup_norm: float
    bound: float
    passed: bool


def check_interpolation_inequality(f: FunctionHandle) -> InterpolationReport:
    """``||f||_inf <= 2 sqrt(||f||_2 ||f'||_2)`` when ``||f||_2 / ||f'||_2 < 1``."""
    n0 = lp_norm(f, 2, 0)
    n1 = lp_norm(f, 2, 1)
    sup = lp_norm(f, np.inf, 0)
    if n0 == 0.0:
        return InterpolationReport(sup, 0.0, sup <= INTERP_INEQ_SLACK)
    if n1 == 0.0 or n0 / n1 >= 1.0:
        raise HypothesisNotMet(f"||f||_2 / ||f'||_2 = {n0 / n1 if n1 else np.inf:.4g} is not below 1")
    bound = 2.0 * np.sqrt(n0 * n1)
    return InterpolationReport(sup, bound, sup <= bound + INTERP_INEQ_SLACK)


def xi(t):
    """Growth function bounding ||(f o u)''||^2 by (eta^2 + nu^2) * xi(||u||_eq^2)."""
    return 7.0 * t + 196.0 * np.asarray(t) ** 2


def psi(t):
    return 2.0 + xi(t)


def check_composition_bound(f1, f2, nu: float, eta: float, u: FunctionHandle) -> tuple[float, float, bool]:
    """Compare ``||(f o u)''||_2^2`` with ``(eta^2 + nu^2) * xi(||u||_eq^2)``.

    ``f1`` and ``f2`` are the first and second derivatives of the outer
    function; ``nu`` and ``eta`` bound them in sup norm.
    """
    u0, u1, u2 = (_values(u, k) for k in range(3))
    comp2 = u2 * f1(u0) + u1**2 * f2(u0)
    lhs = float(simpson(comp2 * comp2, x=_GRID))
    rhs = float((eta**2 + nu**2) * xi(sobolev_eq_norm_sq(u)))
    return lhs, rhs, lhs <= rhs


def norm_corpus(seed: int = 7) -> list[FunctionHandle]:
    """Twenty smooth test functions: polynomials, sinusoids, exponentials, splines."""
    two_pi = 2 * np.pi
    fs = [
        FunctionHandle.polynomial([1.0], "1"),
        FunctionHandle.polynomial([0.0, 1.0], "t"),
        FunctionHandle.polynomial([0.0, 0.0, 0.5], "t^2/2"),
        FunctionHandle.polynomial([1.0, -2.0, 3.0], "3t^2-2t+1"),
        FunctionHandle.polynomial([0.0, 0.0, 0.0, 1.0], "t^3"),
        FunctionHandle.polynomial([0.2, -1.0, 0.0, 4.0, -2.0], "quartic"),
        FunctionHandle.polynomial([0.0, 1.0, -3.0, 0.0, 0.0, 5.0], "quintic"),
        FunctionHandle.polynomial([-0.5, 0.25, 2.0, -1.0, 0.5, -0.25], "quintic2"),
    ]
    for k in (1, 2, 3):
        w = two_pi * k
        fs.append(FunctionHandle(lambda x, w=w: np.sin(w * x), lambda x, w=w: w * np.cos(w * x),
                                 lambda x, w=w: -w * w * np.sin(w * x), f"sin({k}*2pi t)"))
        fs.append(FunctionHandle(lambda x, w=w: np.cos(w * x), lambda x, w=w: -w * np.sin(w * x),
                                 lambda x, w=w: -w * w * np.cos(w * x), f"cos({k}*2pi t)"))
    for r in (1.0, -2.0):
        fs.append(FunctionHandle(lambda x, r=r: np.exp(r * x), lambda x, r=r: r * np.exp(r * x),
                                 lambda x, r=r: r * r * np.exp(r * x), f"exp({r} t)"))
    rng = np.random.default_rng(seed)
    for lam in (1e-2, 1e-4, 0.0, 1e-3):
        t = np.sort(rng.uniform(0.05, 0.95, 12))
        y = rng.normal(size=12)
        model = spline_core.natural_interpolant(t, y) if lam == 0.0 else spline_core.fit(spline_core.RegressionData(t, y), lam)
        fs.append(FunctionHandle.from_spline(model, f"spline(lam={lam})"))
    return fs
