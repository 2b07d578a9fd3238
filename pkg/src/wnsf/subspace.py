"""Subspace identification baseline (past-output regression, SVD, shift invariance).

A plain SSARX/CVA-flavoured pipeline used as a comparison method:

1. stack past outputs ``Y_p`` and future outputs ``Y_f``;
2. regress ``Y_f`` on ``Y_p``;
3. optionally whiten (CVA: ``L_f^-1 Theta L_p`` with Cholesky factors of
   the future and past sample covariances);
4. truncate the SVD to ``n_x`` directions for ``Gamma_f`` and the state map;
5. ``C`` from the first row of ``Gamma_f``, ``A`` from its shift invariance;
6. states from the past outputs, ``K`` from the innovation regression;
7. convert to observer canonical form.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from wnsf.exceptions import DegenerateOrderError, SingularMatrixError
from wnsf.model import StateSpaceModel, gain_from_markov
from wnsf.simulate import _as_output

WEIGHTINGS = ("none", "cva")
GAP_TOL = 1e-10


@dataclass(frozen=True)
class SubspaceConfig:
    f: int
    p: int
    weighting: str = "cva"

    def __post_init__(self):
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}, got {self.weighting!r}")
        if self.f < 1 or self.p < 1:
            raise ValueError("horizons must be positive")

    @classmethod
    def default(cls, n_x, weighting="cva"):
        h = max(2 * n_x, 10)
        return cls(h, h, weighting)

    def check(self, n_x):
        if not (self.f > n_x and self.p >= n_x):
            raise ValueError(f"need f > n_x and p >= n_x, got f={self.f}, p={self.p}, n_x={n_x}")


@dataclass(eq=False)
class SubspaceResult:
    model: StateSpaceModel
    A: np.ndarray
    C: np.ndarray
    K: np.ndarray
    singular_values: np.ndarray
    canonical_correlations: np.ndarray
    rank: int
    degenerate: bool
    diagnostics: dict = field(default_factory=dict)


def past_future(y, f, p):
    """Block Hankel matrices of past and future outputs.

    Column ``j`` corresponds to time ``k = p + j`` (0-based) with
    ``Y_p[:, j] = y[k-p : k]`` (oldest first) and ``Y_f[:, j] = y[k : k+f]``.
    Returns ``(Y_p, Y_f, k)``.
    """
    y = _as_output(y)
    n_f = y.size - f - p + 1
    if n_f < 1:
        raise ValueError(f"{y.size} samples too few for f={f}, p={p}")
    W = np.lib.stride_tricks.sliding_window_view(y, f + p)[:n_f]
    Y_p = np.ascontiguousarray(W[:, :p].T)
    Y_f = np.ascontiguousarray(W[:, p:].T)
    return Y_p, Y_f, np.arange(p, p + n_f)


def _canonical_correlations(Y_p, Y_f):
    n_f = Y_p.shape[1]
    Lp = cholesky(Y_p @ Y_p.T / n_f, lower=True)
    Lf = cholesky(Y_f @ Y_f.T / n_f, lower=True)
    Qp = solve_triangular(Lp, Y_p, lower=True)
    Qf = solve_triangular(Lf, Y_f, lower=True)
    return np.linalg.svd(Qf @ Qp.T / n_f, compute_uv=False)


def sim_identify(y, n_x, cfg=None):
    """Subspace estimate of an ``n_x``-state model, returned in observer form.

    Raises
    ------
    DegenerateOrderError
        If singular values ``n_x`` and ``n_x + 1`` are not separated.
    SingularMatrixError
        If the shift-invariance or gain regression is rank deficient.
    UnstableModelError
        If the identified A - K C is not stable.
    """
    y = _as_output(y)
    cfg = cfg or SubspaceConfig.default(n_x)
    cfg.check(n_x)
    f, p = cfg.f, cfg.p
    if not y.size > f + p + 10 * n_x:
        raise ValueError(f"need more than {f + p + 10 * n_x} samples, got {y.size}")
    Y_p, Y_f, _ = past_future(y, f, p)
    n_f = Y_p.shape[1]

    theta, *_ = np.linalg.lstsq(Y_p.T, Y_f.T, rcond=None)
    theta = theta.T

    if cfg.weighting == "cva":
        Lf = cholesky(Y_f @ Y_f.T / n_f, lower=True)
        Lp = cholesky(Y_p @ Y_p.T / n_f, lower=True)
        M = solve_triangular(Lf, theta, lower=True) @ Lp
    else:
        Lf = np.eye(f)
        Lp = np.eye(p)
        M = theta
    U, s, Vt = np.linalg.svd(M)
    if s.size > n_x and s[n_x - 1] - s[n_x] < GAP_TOL * s[0]:
        raise DegenerateOrderError(
            f"no singular value gap at order {n_x}: s[{n_x}]={s[n_x - 1]:.3g}, s[{n_x + 1}]={s[n_x]:.3g}"
        )
    sq = np.sqrt(s[:n_x])
    gamma = Lf @ (U[:, :n_x] * sq)
    delta = solve_triangular(Lp, Vt[:n_x].T, lower=True, trans="T").T * sq[:, None]

    cc = s if cfg.weighting == "cva" else _canonical_correlations(Y_p, Y_f)
    noise_floor = (math.sqrt(f) + math.sqrt(p)) / math.sqrt(n_f)
    degenerate = bool(cc[n_x - 1] < noise_floor)

    C = gamma[:1]
    sv_shift = np.linalg.svd(gamma[:-1], compute_uv=False)
    if sv_shift[-1] <= 1e-12 * sv_shift[0]:
        raise SingularMatrixError("shift-invariance regression is rank deficient",
                                  condition=math.inf)
    A = np.linalg.lstsq(gamma[:-1], gamma[1:], rcond=None)[0]

    X = delta @ Y_p
    e_hat = Y_f[0] - (C @ X)[0]
    dX = X[:, 1:] - A @ X[:, :-1]
    ee = e_hat[:-1]
    denom = float(ee @ ee)
    if not denom > 0:
        raise SingularMatrixError("innovation estimate is identically zero", condition=math.inf)
    K = (dX @ ee / denom).reshape(-1, 1)
    sigma2 = float(e_hat @ e_hat / e_hat.size)

    A_K = A - K @ C
    alpha = np.real(np.poly(np.linalg.eigvals(A_K))[1:])
    g = np.empty(n_x)
    v = K[:, 0].copy()
    for i in range(n_x):
        g[i] = (C @ v)[0]
        v = A_K @ v
    k_obs = gain_from_markov(alpha, g)
    model = StateSpaceModel(alpha, k_obs, sigma2 if sigma2 > 0 else 1.0)
    return SubspaceResult(
        model, A, C, K, s, cc, n_x, degenerate,
        {"f": f, "p": p, "weighting": cfg.weighting, "noise_floor": noise_floor},
    )
