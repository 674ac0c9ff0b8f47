"""Dense reproducing-kernel construction of the smoothing spline.

O(n^3) reference used to check the banded solver.  Nothing here is on the
simulation path.
"""

from __future__ import annotations

import numpy as np


def phi0(s, t):
    """Kernel of {g : g(0) = g'(0) = 0} with norm ||g''||, in closed form.

    Equals ``integral_0^1 (s - x)_+ (t - x)_+ dx``.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    a = np.minimum(s, t)
    b = np.maximum(s, t)
    return a * a * b / 2.0 - a**3 / 6.0


def sobolev_kernel(s, t):
    """Full kernel ``1 + s*t + phi0(s, t)`` for the norm g(0)^2 + g'(0)^2 + ||g''||^2."""
    return 1.0 + np.asarray(s) * np.asarray(t) + phi0(s, t)


def null_basis(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.column_stack((np.ones_like(x), x))


def dense_coefficients(t, y, lam):
    """Return ``(c, d)`` from c = L^-1 (I - P (P^T L^-1 P)^-1 P^T L^-1) y."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    n = t.size
    P = null_basis(t)
    Sigma = phi0(t[:, None], t[None, :])
    L = Sigma + n * lam * np.eye(n)
    Linv = np.linalg.inv(L)
    M1 = np.linalg.solve(P.T @ Linv @ P, P.T @ Linv)
    M2 = Linv @ (np.eye(n) - P @ M1)
    return M2 @ y, M1 @ y


def dense_evaluate(t, c, d, x):
    t = np.asarray(t, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return null_basis(x) @ d + phi0(x[:, None], t[None, :]) @ c


def dense_hat_matrix(t, lam):
    """``Q (Q^T Q + n*lam*Gamma)^-1 Q^T`` with ``Q = [P Sigma]``, ``Gamma = diag(0, Sigma)``."""
    t = np.asarray(t, dtype=float)
    n = t.size
    P = null_basis(t)
    Sigma = phi0(t[:, None], t[None, :])
    Q = np.hstack((P, Sigma))
    Gamma = np.zeros((n + 2, n + 2))
    Gamma[2:, 2:] = Sigma
    return Q @ np.linalg.solve(Q.T @ Q + n * lam * Gamma, Q.T)


def dense_hat_matrix_coef(t, lam):
    """Hat matrix assembled from the coefficient maps, ``P M1 + Sigma M2``."""
    t = np.asarray(t, dtype=float)
    n = t.size
    c, d = dense_coefficients(t, np.eye(n), lam)
    return null_basis(t) @ d + phi0(t[:, None], t[None, :]) @ c
