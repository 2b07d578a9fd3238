"""High-order AR estimation of the predictor Markov parameters."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, qr, solve_triangular

from wnsf.exceptions import SingularMatrixError
from wnsf.simulate import _as_output

CONDITION_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class MarkovEstimate:
    """Least-squares HOAR fit.

    Attributes
    ----------
    g_hat : ndarray, shape (n,)
        Estimated predictor Markov parameters g_1..g_n.
    R_n : ndarray, shape (n, n)
        Sample covariance of the regressor ``[y[k-1], ..., y[k-n]]``.
    r_factor : ndarray, shape (n, n)
        Upper triangular ``U`` with ``R_n = U.T @ U``.
    N : int
        Normalisation count ``n_samples - n + 1``.
    sigma2_hat : float
        Mean squared residual (denominator ``N``).
    condition : float
        2-norm condition number of ``R_n``.
    """

    g_hat: np.ndarray
    R_n: np.ndarray
    r_factor: np.ndarray
    N: int
    sigma2_hat: float
    condition: float

    @property
    def n(self):
        return self.g_hat.size

    def covariance(self):
        """Asymptotic covariance ``sigma2 R_n^-1 / N`` of ``g_hat``."""
        Uinv = solve_triangular(self.r_factor, np.eye(self.n))
        return self.sigma2_hat * (Uinv @ Uinv.T) / self.N


def regressor(y, n):
    """Rows ``[y[k-1], ..., y[k-n]]`` for k = n .. len(y)-1 (0-based) and targets ``y[k]``."""
    y = _as_output(y)
    if y.size <= n:
        raise ValueError(f"need more than {n} samples, got {y.size}")
    windows = np.lib.stride_tricks.sliding_window_view(y, n + 1)
    return np.ascontiguousarray(windows[:, n - 1::-1]), windows[:, -1].copy()


def estimate_hoar(y, n, ridge=0.0):
    """Fit ``y[k] = sum_{i<=n} g_i y[k-i] + e[k]`` by least squares.

    Parameters
    ----------
    y : Trajectory or array_like
    n : int
        AR order; must satisfy ``n < len(y) / 2``.
    ridge : float
        Optional Tikhonov term added to ``R_n``; off by default.
    """
    y = _as_output(y)
    n_bar = y.size
    if n < 1 or not n < n_bar / 2:
        raise ValueError(f"HOAR order {n} must satisfy 1 <= n < {n_bar}/2")
    Phi, target = regressor(y, n)
    N = n_bar - n + 1

    Q, U = qr(Phi, mode="economic")
    sv = np.linalg.svd(U, compute_uv=False)
    condition = float((sv[0] / sv[-1]) ** 2) if sv[-1] > 0 else math.inf
    scale = 1.0 / math.sqrt(N)
    r_factor = U * scale
    R_n = (Phi.T @ Phi) / N
    R_n = 0.5 * (R_n + R_n.T)

    if ridge > 0:
        R_reg = R_n + ridge * np.eye(n)
        r_n = Phi.T @ target / N
        g_hat = cho_solve(cho_factor(R_reg), r_n)
        r_factor = np.linalg.cholesky(R_reg).T
        sv = np.linalg.eigvalsh(R_reg)
        condition = float(sv[-1] / sv[0])
    else:
        if not condition < CONDITION_LIMIT:
            raise SingularMatrixError(
                f"HOAR regressor covariance is singular (condition {condition:.3g})",
                condition=condition,
            )
        g_hat = solve_triangular(U, Q.T @ target)

    resid = target - Phi @ g_hat
    sigma2_hat = float(resid @ resid / N)
    return MarkovEstimate(g_hat, R_n, r_factor, N, sigma2_hat, condition)


def default_order(n_samples):
    """Default HOAR order ``min(max(ceil(5 N^0.35), 20), N // 10)``."""
    if n_samples < 100:
        raise ValueError("default_order needs n_samples >= 100")
    rule = math.ceil(5.0 * n_samples ** 0.35)
    return min(max(rule, 20), n_samples // 10)
