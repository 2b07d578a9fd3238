"""Null space fitting of the characteristic polynomial from Markov parameters.

With ``w = [alpha_nx, ..., alpha_1, 1]`` the stacked Hankel matrix of the
predictor Markov parameters satisfies ``w @ H = 0`` (Cayley-Hamilton). The
unweighted fit solves this in the least-squares sense; the weighted fit uses
the inverse covariance of the residual, ``(T' R_n^-1 T)^-1``, where ``T`` is
the banded Toeplitz matrix with ``w @ dH = dg @ T`` for any Hankel
perturbation ``dH`` built from ``dg``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular

from wnsf.exceptions import NonFiniteError, SingularMatrixError

CONDITION_LIMIT = 1e12
CONVERGENCE_TOL = 1e-10
JITTER_START = 1e-12
JITTER_STEPS = 3


@dataclass(frozen=True, eq=False)
class HankelPair:
    H_plus: np.ndarray
    H_minus: np.ndarray

    @property
    def n_x(self):
        return self.H_plus.shape[0]

    @property
    def p(self):
        return self.H_plus.shape[1]

    @property
    def full(self):
        return np.vstack([self.H_plus, self.H_minus[None, :]])


@dataclass(frozen=True, eq=False)
class NullSpaceEstimate:
    """Characteristic polynomial coefficients ``alpha_1 .. alpha_nx``.

    ``stage`` is ``"ols"`` or ``"wls"``; ``iteration`` counts weighted
    passes (0 for ols). ``degraded`` is set when a weighting had to fall
    back to identity.
    """

    alpha: np.ndarray
    stage: str = "ols"
    iteration: int = 0
    weighting_condition: float = 1.0
    degraded: bool = False
    converged: bool = False
    history: tuple = field(default=(), repr=False)

    @property
    def alpha_vec(self):
        """Row vector ``[alpha_nx, ..., alpha_1]`` multiplying ``H_plus``."""
        return self.alpha[::-1].copy()


def build_hankel(g, n_x):
    """Split Hankel matrix of ``g_1..g_n`` with ``n_x + 1`` rows and ``n - n_x`` columns."""
    g = np.asarray(g, dtype=float).reshape(-1)
    n = g.size
    if n_x < 1 or n < 2 * n_x + 1:
        raise ValueError(
            f"need at least {2 * n_x + 1} Markov parameters for n_x={n_x}, got {n}; "
            f"increase the HOAR order"
        )
    p = n - n_x
    H = np.lib.stride_tricks.sliding_window_view(g, p)[: n_x + 1]
    return HankelPair(H[:n_x].copy(), H[n_x].copy())


def _solve_nullspace(H_plus, H_minus, what):
    # min || a H_plus + H_minus ||  <=>  lstsq(H_plus.T, -H_minus)
    sv = np.linalg.svd(H_plus, compute_uv=False)
    condition = float((sv[0] / sv[-1]) ** 2) if sv[-1] > 0 else math.inf
    if not condition < CONDITION_LIMIT:
        raise SingularMatrixError(
            f"{what} normal matrix is singular (condition {condition:.3g}); "
            f"the data may not support this state dimension",
            condition=condition,
        )
    a_vec, *_ = np.linalg.lstsq(H_plus.T, -H_minus, rcond=None)
    return a_vec, condition


def estimate_alpha_ols(h):
    a_vec, condition = _solve_nullspace(h.H_plus, h.H_minus, "OLS")
    return NullSpaceEstimate(a_vec[::-1].copy(), "ols", 0, condition)


def toeplitz_operator(alpha, n):
    """``n x p`` banded Toeplitz matrix with first column ``[alpha_nx, ..., alpha_1, 1, 0, ...]``."""
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    n_x = alpha.size
    p = n - n_x
    if p < 1:
        raise ValueError(f"n={n} too small for n_x={n_x}")
    w = np.concatenate((alpha[::-1], [1.0]))
    T = np.zeros((n, p))
    for j in range(p):
        T[j:j + n_x + 1, j] = w
    return T


class Weighting:
    """Residual covariance ``Lambda = sigma2 T' R_n^-1 T`` held in factored form.

    Parameters
    ----------
    alpha : array_like
        Coefficients used to build ``T``.
    r_factor : ndarray
        Upper triangular ``U`` with ``R_n = U' U``.
    sigma2 : float
    n : int
        Number of Markov parameters.
    """

    def __init__(self, alpha, r_factor, sigma2, n):
        alpha = np.asarray(alpha, dtype=float).reshape(-1)
        if n <= 2 * alpha.size:
            raise ValueError(f"n={n} must exceed 2*n_x={2 * alpha.size}")
        self.T = toeplitz_operator(alpha, n)
        M = solve_triangular(r_factor, self.T, trans="T")
        lam = sigma2 * (M.T @ M)
        self.matrix = 0.5 * (lam + lam.T)
        self.p = self.matrix.shape[0]
        self.degraded = False
        self.jitter = 0.0
        self._chol = self._factor()
        if self._chol is None:
            self.degraded = True
        ev = np.linalg.eigvalsh(self.matrix)
        self.condition = float(ev[-1] / ev[0]) if ev[0] > 0 else math.inf

    def _factor(self):
        try:
            return cho_factor(self.matrix, lower=True)
        except LinAlgError:
            pass
        jitter = JITTER_START * np.trace(self.matrix) / self.p
        for _ in range(JITTER_STEPS):
            try:
                chol = cho_factor(self.matrix + jitter * np.eye(self.p), lower=True)
                self.jitter = jitter
                return chol
            except LinAlgError:
                jitter *= 10
        return None

    def solve(self, X):
        """Apply ``Lambda^-1`` to the columns of ``X`` (identity if degraded)."""
        if self._chol is None:
            return np.array(X, dtype=float)
        return cho_solve(self._chol, X)

    def whiten(self, X):
        """Return ``X L^-T`` for ``Lambda = L L'``, so ``whiten(X) whiten(X)' = X Lambda^-1 X'``."""
        X = np.atleast_2d(X)
        if self._chol is None:
            return X.copy()
        L = np.tril(self._chol[0])
        return solve_triangular(L, X.T, lower=True).T


def build_weighting(alpha, r_factor, sigma2, n):
    return Weighting(alpha, r_factor, sigma2, n)


def estimate_alpha_wls(h, prior, markov, iterations=1, tol=CONVERGENCE_TOL):
    """Refine ``prior`` by weighted least squares, repeated ``iterations`` times.

    The weighting is rebuilt from the previous iterate each pass. The noise
    variance is a common scale factor of the weighting and is left out.
    Stops early once successive iterates differ by less than ``tol``
    (infinity norm).
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    n = h.n_x + h.p
    if markov.g_hat.size != n:
        raise ValueError(f"Hankel built from {n} parameters, Markov estimate has {markov.g_hat.size}")
    alpha = np.asarray(prior.alpha, dtype=float)
    history = [alpha]
    degraded = prior.degraded
    condition = prior.weighting_condition
    converged = False
    it = 0
    for it in range(1, iterations + 1):
        W = Weighting(alpha, markov.r_factor, 1.0, n)
        degraded = degraded or W.degraded
        Hp = W.whiten(h.H_plus)
        Hm = W.whiten(h.H_minus[None, :])[0]
        a_vec, _ = _solve_nullspace(Hp, Hm, f"WLS iteration {it}")
        new = a_vec[::-1].copy()
        if not np.all(np.isfinite(new)):
            raise NonFiniteError(f"WLS iteration {it} produced a non-finite estimate")
        condition = W.condition
        step = float(np.max(np.abs(new - alpha)))
        alpha = new
        history.append(alpha)
        if step < tol:
            converged = True
            break
    return NullSpaceEstimate(alpha, "wls", it, condition, degraded, converged, tuple(history))
