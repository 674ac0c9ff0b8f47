"""Second-order (cubic) smoothing splines on the unit interval.

A fit minimises

    (1/n) * sum_i (g(t_i) - y_i)**2 + lam * integral_0^1 g''(t)**2 dt

over the second-order Sobolev space.  The minimiser is a natural cubic spline
with knots at the abscissae, so a model is stored in value/second-derivative
form: fitted values ``g`` and second derivatives ``gamma`` at every knot
(``gamma`` vanishes at the two end knots).

The linear system is the Reinsch pair

    g + n*lam * Q gamma = y
    Q^T g - R gamma     = 0

kept in augmented form, interleaving the unknowns as
``g_0, g_1, gamma_1, g_2, gamma_2, ..., g_{n-1}``.  That gives a banded matrix
with three sub- and super-diagonals which is solved by pivoted banded LU in
O(n).  The augmented form stays accurate when abscissae nearly coincide, where
the condensed ``(R + n*lam*Q^T Q) gamma = Q^T y`` system loses digits in
proportion to ``(h_max / h_min)**2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .constants import DOMAIN
from .errors import InvalidAbscissae, InvalidLambda, NumericalFailure, OutOfDomain, TooFewPoints

__all__ = [
    "RegressionData",
    "SplineModel",
    "HatMatrix",
    "fit",
    "fit_many",
    "natural_interpolant",
    "evaluate",
    "derivative",
    "hat_matrix",
    "weight_function",
    "weight_matrix",
    "objective",
    "roughness",
]

ORDER = 2


def _check_points(points) -> np.ndarray:
    t = np.asarray(points, dtype=float)
    if t.ndim != 1:
        raise InvalidAbscissae("abscissae must be one-dimensional")
    if t.size < 3:
        raise TooFewPoints(f"need at least 3 points, got {t.size}")
    if not np.all(np.isfinite(t)):
        raise InvalidAbscissae("abscissae must be finite")
    if t[0] < DOMAIN[0] or t[-1] > DOMAIN[1]:
        raise InvalidAbscissae("abscissae must lie in [0, 1]")
    if np.any(np.diff(t) <= 0):
        raise InvalidAbscissae("abscissae must be strictly increasing")
    return t


@dataclass(frozen=True)
class RegressionData:
    """Abscissae ``points`` in [0, 1] with one ordinate per point."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = _check_points(self.points)
        y = np.asarray(self.values, dtype=float)
        if y.shape != t.shape:
            raise InvalidAbscissae(f"got {t.size} points but values of shape {y.shape}")
        object.__setattr__(self, "points", t)
        object.__setattr__(self, "values", y)

    @property
    def n(self) -> int:
        return self.points.size

    @property
    def delta_max(self) -> float:
        # The domain ends count as boundary points.
        gaps = np.diff(np.concatenate(([DOMAIN[0]], self.points, [DOMAIN[1]])))
        return float(gaps.max())

    @property
    def delta_min(self) -> float:
        return float(np.diff(self.points).min())


def _augmented_band(t: np.ndarray, nlam: float) -> np.ndarray:
    """Banded storage (l = u = 3) of the interleaved Reinsch system."""
    n = t.size
    h = np.diff(t)
    size = 2 * n - 2
    j = np.arange(1, n - 1)  # interior knots carrying a gamma unknown

    def pos_g(i):
        return np.where(i == 0, 0, 2 * i - 1)

    pos_c = 2 * j

    # Column j of Q has entries at rows j-1, j, j+1.
    q_rows = np.concatenate((j - 1, j, j + 1))
    q_cols = np.concatenate((j, j, j))
    q_vals = np.concatenate((1.0 / h[j - 1], -1.0 / h[j - 1] - 1.0 / h[j], 1.0 / h[j]))

    rows = [pos_g(np.arange(n)), pos_g(q_rows), 2 * q_cols, pos_c]
    cols = [pos_g(np.arange(n)), 2 * q_cols, pos_g(q_rows), pos_c]
    vals = [np.ones(n), nlam * q_vals, q_vals, -(h[j - 1] + h[j]) / 3.0]
    if n > 3:
        off = j[:-1]
        rows += [2 * off, 2 * (off + 1)]
        cols += [2 * (off + 1), 2 * off]
        vals += [-h[off] / 6.0, -h[off] / 6.0]

    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    ab = np.zeros((7, size))
    np.add.at(ab, (3 + r - c, c), v)
    return ab


def _solve(t: np.ndarray, y: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Return knot values and knot second derivatives; ``y`` may be (n,) or (n, k)."""
    n = t.size
    ab = _augmented_band(t, n * lam)
    rhs = np.zeros((2 * n - 2,) + y.shape[1:])
    rhs[0] = y[0]
    rhs[1::2] = y[1:]
    try:
        z = solve_banded((3, 3), ab, rhs, check_finite=False)
    except (LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"banded spline solve failed: {exc}") from exc
    if not np.all(np.isfinite(z)):
        raise NumericalFailure("banded spline solve produced non-finite values")
    g = np.empty_like(y, dtype=float)
    g[0] = z[0]
    g[1:] = z[1::2]
    gamma = np.zeros_like(g)
    gamma[1:-1] = z[2::2]
    return g, gamma


def _locate(t: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.clip(np.searchsorted(t, x, side="right") - 1, 0, t.size - 2)


def _eval_pp(t: np.ndarray, g: np.ndarray, gamma: np.ndarray, x: np.ndarray, order: int) -> np.ndarray:
    """Evaluate a natural cubic spline (or its derivative) given knot data.

    ``g`` and ``gamma`` may carry a trailing axis; the result then has shape
    ``x.shape + g.shape[1:]``.  Outside ``[t_0, t_{n-1}]`` the spline continues
    linearly.
    """
    i = _locate(t, x)
    h = (t[i + 1] - t[i])
    xe = x
    if g.ndim > 1:
        h = h[..., None]
        xe = x[..., None]
    a = (t[i + 1].reshape(h.shape) - xe) / h
    b = (xe - t[i].reshape(h.shape)) / h
    g0, g1, c0, c1 = g[i], g[i + 1], gamma[i], gamma[i + 1]

    if order == 0:
        out = a * g0 + b * g1 + ((a**3 - a) * c0 + (b**3 - b) * c1) * h * h / 6.0
    elif order == 1:
        out = (g1 - g0) / h + h / 6.0 * (-(3 * a * a - 1) * c0 + (3 * b * b - 1) * c1)
    elif order == 2:
        out = a * c0 + b * c1
    elif order == 3:
        out = (c1 - c0) / h + 0 * a
    else:
        raise ValueError(f"derivative order must be 0..3, got {order}")

    lo = x < t[0]
    hi = x > t[-1]
    if np.any(lo) or np.any(hi):
        h0 = t[1] - t[0]
        hn = t[-1] - t[-2]
        slope0 = (g[1] - g[0]) / h0 - h0 * gamma[1] / 6.0
        slope1 = (g[-1] - g[-2]) / hn + hn * gamma[-2] / 6.0
        if order == 0:
            lo_val = g[0] + slope0 * (xe - t[0])
            hi_val = g[-1] + slope1 * (xe - t[-1])
        elif order == 1:
            lo_val = np.broadcast_to(slope0, out.shape)
            hi_val = np.broadcast_to(slope1, out.shape)
        else:
            lo_val = hi_val = np.zeros_like(out)
        lo_m = lo.reshape(lo.shape + (1,) * (out.ndim - lo.ndim))
        hi_m = hi.reshape(hi.shape + (1,) * (out.ndim - hi.ndim))
        out = np.where(lo_m, lo_val, np.where(hi_m, hi_val, out))
    return out


def _as_domain(x) -> np.ndarray:
    xa = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(xa)) or np.any(xa < DOMAIN[0]) or np.any(xa > DOMAIN[1]):
        raise OutOfDomain("evaluation points must lie in [0, 1]")
    return xa


@dataclass(frozen=True)
class SplineModel:
    """Fitted second-order smoothing spline.

    ``values`` and ``second`` are the spline value and second derivative at
    each knot.  The reproducing-kernel coefficients are derived on demand:
    ``coef_poly`` multiplies the null-space basis ``{1, t}`` and ``coef_kernel``
    multiplies ``phi0(., t_j)``, the kernel of the space of functions with
    ``g(0) = g'(0) = 0``.
    """

    knots: np.ndarray
    values: np.ndarray
    second: np.ndarray
    lam: float
    order: int = ORDER

    def __post_init__(self):
        for name in ("knots", "values", "second"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @cached_property
    def coef_kernel(self) -> np.ndarray:
        # Jumps of the third derivative: c = Q gamma.
        t, gam = self.knots, self.second
        h = np.diff(t)
        c = np.zeros_like(gam)
        s = np.diff(gam) / h  # third derivative on each interval
        c[0] = s[0]
        c[1:-1] = s[1:] - s[:-1]
        c[-1] = -s[-1]
        return c

    @cached_property
    def coef_poly(self) -> np.ndarray:
        # phi0(0, s) and its t-derivative vanish, so d = (g(0), g'(0)).
        x0 = np.array(0.0)
        return np.array([
            float(_eval_pp(self.knots, self.values, self.second, x0, 0)),
            float(_eval_pp(self.knots, self.values, self.second, x0, 1)),
        ])

    def __call__(self, x):
        return evaluate(self, x)


@dataclass(frozen=True)
class HatMatrix:
    entries: np.ndarray

    def __matmul__(self, other):
        return self.entries @ other


def _check_lambda(lam, allow_zero=False) -> float:
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0 or (lam == 0 and not allow_zero):
        raise InvalidLambda(f"smoothing parameter must be positive, got {lam}")
    return lam


def fit(data: RegressionData, lam: float) -> SplineModel:
    """Fit the smoothing spline to ``data`` with smoothing parameter ``lam > 0``."""
    lam = _check_lambda(lam)
    g, gamma = _solve(data.points, data.values, lam)
    return SplineModel(data.points, g, gamma, lam)


def natural_interpolant(points, values) -> SplineModel:
    """Natural cubic interpolating spline, the ``lam -> 0`` limit of :func:`fit`."""
    data = RegressionData(points, values)
    g, gamma = _solve(data.points, data.values, 0.0)
    # The interpolation rows are the identity; restore exact data values.
    return SplineModel(data.points, data.values.copy(), gamma, 0.0)


def fit_many(points, Y, lam: float) -> list[SplineModel]:
    """Fit every column of ``Y`` (shape (n, k)) with one banded solve.

    ``lam = 0`` gives natural interpolating splines.
    """
    t = _check_points(points)
    lam = _check_lambda(lam, allow_zero=True)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != t.size:
        raise InvalidAbscissae(f"expected values of shape ({t.size}, k), got {Y.shape}")
    g, gamma = _solve(t, Y, lam)
    if lam == 0.0:
        g = Y.copy()
    return [SplineModel(t, g[:, j], gamma[:, j], lam) for j in range(Y.shape[1])]


def evaluate(model: SplineModel, x):
    xa = _as_domain(x)
    out = _eval_pp(model.knots, model.values, model.second, xa, 0)
    return float(out) if np.ndim(out) == 0 else out


def derivative(model: SplineModel, x, order: int = 1):
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    xa = _as_domain(x)
    out = _eval_pp(model.knots, model.values, model.second, xa, order)
    return float(out) if np.ndim(out) == 0 else out


def hat_matrix(points, lam: float) -> HatMatrix:
    """Matrix mapping data values to fitted values at the knots."""
    t = _check_points(points)
    lam = _check_lambda(lam)
    g, _ = _solve(t, np.eye(t.size), lam)
    return HatMatrix(g)


def weight_matrix(points, lam: float, x) -> np.ndarray:
    """``W[a, i] = G_{n,lam}(x_a, t_i)`` for every requested ``x_a``.

    The fit evaluated at ``x`` equals ``W @ y / n``.
    """
    t = _check_points(points)
    lam = _check_lambda(lam)
    xa = np.atleast_1d(_as_domain(x))
    g, gamma = _solve(t, np.eye(t.size), lam)
    return t.size * _eval_pp(t, g, gamma, xa, 0)


def weight_function(points, lam: float, x: float, i: int) -> float:
    return float(weight_matrix(points, lam, [x])[0, i])


def roughness(model: SplineModel) -> float:
    """Exact ``integral g''**2`` for a piecewise-linear second derivative."""
    h = np.diff(model.knots)
    a, b = model.second[:-1], model.second[1:]
    return float(np.sum(h * (a * a + a * b + b * b) / 3.0))


def objective(model: SplineModel, data: RegressionData, lam: float) -> float:
    resid = _eval_pp(model.knots, model.values, model.second, data.points, 0) - data.values
    return float(np.mean(resid**2) + lam * roughness(model))
