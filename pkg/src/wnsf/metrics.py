"""FIT score, Monte Carlo aggregation and a numeric Cramer-Rao bound."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from wnsf.exceptions import IdentificationError, NonFiniteError
from wnsf.model import STABILITY_MARGIN, spectral_radius
from wnsf.simulate import simulate

STATUSES = ("ok", "degraded", "failed")
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)
FD_STEP = 1e-6
SINGULAR_RCOND = 1e-10


def fit_score(g_true, g_est):
    """``100 (1 - ||g_true - g_est|| / ||g_true - mean(g_true)||)``."""
    g_true = np.asarray(g_true, dtype=float).reshape(-1)
    g_est = np.asarray(g_est, dtype=float).reshape(-1)
    if g_true.size != g_est.size or g_true.size < 2:
        raise ValueError("FIT needs two vectors of equal length >= 2")
    spread = np.linalg.norm(g_true - g_true.mean())
    if spread == 0:
        raise ValueError("FIT is undefined for a constant reference response")
    return float(100.0 * (1.0 - np.linalg.norm(g_true - g_est) / spread))


# --- Cramer-Rao bound ---------------------------------------------------------

def parameter_names(n_x):
    return [f"alpha_{i + 1}" for i in range(n_x)] + [f"k_{i + 1}" for i in range(n_x)]


def prediction_errors(theta, y, n_x):
    """``eps = H^-1(q, theta) y`` for ``theta = [alpha, k]`` in observer form."""
    alpha, k = theta[:n_x], theta[n_x:]
    if not spectral_radius(alpha) < 1.0 - STABILITY_MARGIN:
        return np.full(y.size, np.nan)
    return lfilter(np.concatenate(([1.0], alpha - k)), np.concatenate(([1.0], alpha)), y)


def prediction_error_gradient(model, y, step=FD_STEP):
    """``zeta = -d eps / d theta`` by central differences, shape ``(len(y), 2 n_x)``.

    If a perturbed predictor is unstable or produces non-finite output the
    step is shrunk tenfold once before giving up.
    """
    y = np.asarray(getattr(y, "y", y), dtype=float)
    n_x = model.n_x
    theta = np.concatenate((model.alpha, model.k_gain))
    zeta = np.empty((y.size, theta.size))
    for j in range(theta.size):
        h = step
        for attempt in range(2):
            d = np.zeros(theta.size)
            d[j] = h
            diff = prediction_errors(theta + d, y, n_x) - prediction_errors(theta - d, y, n_x)
            if np.all(np.isfinite(diff)):
                break
            h /= 10
        else:
            raise NonFiniteError(f"gradient filter for {parameter_names(n_x)[j]} is not finite")
        zeta[:, j] = -diff / (2 * h)
    return zeta


@dataclass(frozen=True, eq=False)
class CRLBResult:
    """Per-sample Fisher information ``E[zeta zeta'] / sigma2`` and derived bounds."""

    fisher: np.ndarray
    fisher_stderr: np.ndarray
    names: list
    horizon: int
    n_mc: int
    singular: bool = False
    meta: dict = field(default_factory=dict)

    def per_sample_covariance(self):
        ev = np.linalg.eigvalsh(self.fisher)
        if not self.singular:
            return np.linalg.inv(self.fisher)
        cov = np.linalg.pinv(self.fisher, rcond=SINGULAR_RCOND, hermitian=True)
        # parameters without information get an infinite bound
        dead = np.diag(self.fisher) <= SINGULAR_RCOND * max(ev[-1], 0.0)
        cov[dead, :] = 0.0
        cov[:, dead] = 0.0
        cov[dead, dead] = math.inf
        return cov

    def covariance(self, N):
        return self.per_sample_covariance() / N

    def variances(self, N):
        """Mapping parameter name -> CRLB variance at sample count ``N``."""
        d = np.diag(self.per_sample_covariance()) / N
        return {name: float(v) for name, v in zip(self.names, d)}


def crlb(model, horizon=100_000, n_mc=4, seed=0, step=FD_STEP, burn_in=1000):
    """Numeric Cramer-Rao bound for ``(alpha, k)`` of an observer-form model.

    ``n_mc`` independent trajectories of ``horizon`` samples (seeds
    ``seed .. seed + n_mc - 1``) each give an average of ``zeta zeta'``;
    the returned information is their mean with its standard error.
    """
    if horizon < 1 or n_mc < 1:
        raise ValueError("horizon and n_mc must be positive")
    blocks = []
    for i in range(n_mc):
        y = simulate(model, horizon, seed + i, burn_in).y
        zeta = prediction_error_gradient(model, y, step)
        blocks.append(zeta.T @ zeta / (horizon * model.sigma2_e))
    blocks = np.array(blocks)
    fisher = blocks.mean(axis=0)
    fisher = 0.5 * (fisher + fisher.T)
    stderr = blocks.std(axis=0, ddof=1) / math.sqrt(n_mc) if n_mc > 1 else np.zeros_like(fisher)
    ev = np.linalg.eigvalsh(fisher)
    singular = bool(ev[0] <= SINGULAR_RCOND * ev[-1])
    return CRLBResult(fisher, stderr, parameter_names(model.n_x), horizon, n_mc, singular,
                      {"seed": seed, "step": step})


# --- Monte Carlo records --------------------------------------------------------

@dataclass
class TrialRecord:
    method: str
    N: int
    n: int
    trial: int
    seed: int
    status: str
    alpha_hat: np.ndarray | None = None
    alpha_ols: np.ndarray | None = None
    k_hat: np.ndarray | None = None
    fit: float = math.nan
    sq_err_alpha: float = math.nan
    message: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == "failed":
            self.alpha_hat = self.alpha_ols = self.k_hat = None
            self.fit = self.sq_err_alpha = math.nan
        elif not self.fit <= 100.0 + 1e-9:
            raise ValueError(f"FIT cannot exceed 100, got {self.fit}")

    @property
    def ok(self):
        return self.status != "failed"


def _describe(values, truth=None):
    v = np.asarray(values, dtype=float)
    out = {
        "mean": float(v.mean()),
        "median": float(np.median(v)),
        "quantiles": {f"{q:g}": float(np.quantile(v, q)) for q in QUANTILES},
    }
    if truth is not None:
        err = v - truth
        out["truth"] = float(truth)
        out["mse"] = float(np.mean(err ** 2))
        out["bias"] = float(err.mean())
    return out


def aggregate(records, alpha_true=None, k_true=None):
    """Summary statistics over the usable (ok or degraded) records.

    Returns a dict with counts per status and, per estimated quantity, mean,
    median, quantiles and (when the truth is given) MSE and bias. Failed
    trials are excluded from every statistic but counted in ``n_failed``.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to aggregate")
    usable = [r for r in records if r.ok]
    if not usable:
        raise IdentificationError(f"all {len(records)} trials failed")
    counts = {s: sum(r.status == s for r in records) for s in STATUSES}
    summary = {
        "n_trials": len(records),
        "n_ok": counts["ok"],
        "n_degraded": counts["degraded"],
        "n_failed": counts["failed"],
        "n_used": len(usable),
        "quantities": {},
    }
    q = summary["quantities"]
    n_x = usable[0].alpha_hat.size
    for i in range(n_x):
        t = None if alpha_true is None else alpha_true[i]
        q[f"alpha_{i + 1}"] = _describe([r.alpha_hat[i] for r in usable], t)
        ols = [r.alpha_ols[i] for r in usable if r.alpha_ols is not None]
        if ols:
            q[f"alpha_ols_{i + 1}"] = _describe(ols, t)
        t = None if k_true is None else k_true[i]
        q[f"k_{i + 1}"] = _describe([r.k_hat[i] for r in usable], t)
    fits = [r.fit for r in usable if np.isfinite(r.fit)]
    if fits:
        q["fit"] = _describe(fits)
    sq = [r.sq_err_alpha for r in usable if np.isfinite(r.sq_err_alpha)]
    if sq:
        summary["mse_alpha"] = float(np.mean(sq))
    return summary
