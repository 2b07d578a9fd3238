"""Observer-form realization: A_K from alpha, then K by least squares."""

import math

import numpy as np
from scipy.signal import lfilter

from wnsf.exceptions import SingularMatrixError, UnstableModelError
from wnsf.model import STABILITY_MARGIN, StateSpaceModel, spectral_radius
from wnsf.simulate import _as_output

CONDITION_LIMIT = 1e12


def build_predictor_regressor(alpha_hat, y):
    """Filter ``y`` through each gain channel of ``C (qI - A_K)^-1``.

    Column ``j`` is ``q^-(j+1) / A_K(q^-1)`` applied to ``y`` from zero
    initial state, so row ``k`` only depends on ``y[:k]`` and
    ``xi @ K`` is the one-step-ahead prediction of ``y``.
    """
    alpha_hat = np.asarray(alpha_hat, dtype=float).reshape(-1)
    rho = spectral_radius(alpha_hat)
    if not rho < 1.0 - STABILITY_MARGIN:
        raise UnstableModelError(
            f"estimated A_K is unstable (spectral radius {rho:.4g}); "
            f"try more data or a different order",
            spectral_radius=rho,
        )
    y = _as_output(y)
    n_x = alpha_hat.size
    den = np.concatenate(([1.0], alpha_hat))
    xi = np.empty((y.size, n_x))
    base = lfilter([1.0], den, y)
    for j in range(n_x):
        xi[: j + 1, j] = 0.0
        xi[j + 1:, j] = base[: y.size - j - 1]
    return xi


def estimate_k_gain(xi, y):
    """Least-squares gain minimising ``sum (y[k] - xi[k] @ K)^2``."""
    y = _as_output(y)
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    sv = np.linalg.svd(xi, compute_uv=False)
    condition = float((sv[0] / sv[-1]) ** 2) if sv[-1] > 0 else math.inf
    if not condition < CONDITION_LIMIT:
        raise SingularMatrixError(
            f"predictor regressor is singular (condition {condition:.3g})", condition=condition
        )
    k_hat, *_ = np.linalg.lstsq(xi, y, rcond=None)
    return k_hat


def assemble_model(alpha_hat, k_hat, sigma2_hat=1.0):
    return StateSpaceModel(alpha_hat, k_hat, sigma2_hat)
