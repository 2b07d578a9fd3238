"""End-to-end weighted null space fitting."""

from dataclasses import dataclass, field

import numpy as np

from wnsf.exceptions import IdentificationError
from wnsf.hoar import MarkovEstimate, estimate_hoar
from wnsf.model import StateSpaceModel
from wnsf.nullspace import (
    NullSpaceEstimate,
    build_hankel,
    estimate_alpha_ols,
    estimate_alpha_wls,
)
from wnsf.realization import assemble_model, build_predictor_regressor, estimate_k_gain
from wnsf.simulate import _as_output


def _stage(label, fn, *args):
    """Call ``fn`` and tag any failure with the algorithm step that raised it."""
    try:
        return fn(*args)
    except (IdentificationError, ValueError) as exc:
        if not hasattr(exc, "stage"):
            exc.stage = label
        raise


@dataclass(eq=False)
class WNSFResult:
    markov: MarkovEstimate
    ols: NullSpaceEstimate
    wls: NullSpaceEstimate
    k_hat: np.ndarray
    model: StateSpaceModel
    diagnostics: dict = field(default_factory=dict)

    @property
    def status(self):
        return "degraded" if self.wls.degraded else "ok"


def wnsf_identify(y, n_x, n, iterations=1):
    """Identify an ``n_x``-state observer-form model from outputs ``y``.

    Parameters
    ----------
    y : Trajectory or array_like
    n_x : int
        State dimension.
    n : int
        HOAR order, at least ``2 n_x + 1``.
    iterations : int
        Number of weighted refinement passes (1 is the standard procedure).

    Raises
    ------
    IdentificationError
        From whichever step fails, with a ``stage`` attribute naming it.
    """
    y = _as_output(y)
    markov = _stage("step 1 (HOAR)", estimate_hoar, y, n)
    h = _stage("step 2 (Hankel)", build_hankel, markov.g_hat, n_x)
    ols = _stage("step 2 (OLS)", estimate_alpha_ols, h)
    wls = _stage("step 3 (WLS)", estimate_alpha_wls, h, ols, markov, iterations)
    xi = _stage("step 4 (realization)", build_predictor_regressor, wls.alpha, y)
    k_hat = _stage("step 4 (gain)", estimate_k_gain, xi, y)
    resid = y - xi @ k_hat
    sigma2 = float(resid @ resid / y.size)
    model = assemble_model(wls.alpha, k_hat, sigma2)
    diagnostics = {
        "hoar_condition": markov.condition,
        "hoar_sigma2": markov.sigma2_hat,
        "ols_condition": ols.weighting_condition,
        "wls_weighting_condition": wls.weighting_condition,
        "wls_iterations": wls.iteration,
        "wls_converged": wls.converged,
        "prediction_sigma2": sigma2,
    }
    return WNSFResult(markov, ols, wls, k_hat, model, diagnostics)

