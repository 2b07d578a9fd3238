"""SISO state-space models in observer canonical form.

The predictor form is

    x[k+1] = A_K x[k] + K y[k]
    y[k]   = C x[k] + e[k]

with ``A_K`` a companion matrix whose first column is ``-alpha`` and
``C = [1, 0, ..., 0]``. Only ``alpha``, ``K`` and the innovation variance
are stored; the matrices are built on demand.
"""

from dataclasses import dataclass

import numpy as np

from wnsf.exceptions import UnstableModelError

# rho(A_K) must stay below 1 - STABILITY_MARGIN
STABILITY_MARGIN = 1e-10


def companion(alpha):
    """Observer canonical companion matrix with first column ``-alpha``."""
    alpha = np.asarray(alpha, dtype=float)
    n_x = alpha.size
    A = np.zeros((n_x, n_x))
    A[:, 0] = -alpha
    A[np.arange(n_x - 1), np.arange(1, n_x)] = 1.0
    return A


def spectral_radius(alpha):
    """Largest root modulus of ``z^n + alpha_1 z^(n-1) + ... + alpha_n``."""
    roots = np.linalg.eigvals(companion(alpha))
    return float(np.max(np.abs(roots))) if roots.size else 0.0


def is_stable(alpha, margin=STABILITY_MARGIN):
    return spectral_radius(alpha) < 1.0 - margin


@dataclass(frozen=True)
class PolynomialRoots:
    """Eigenvalues of A_K, i.e. the predictor poles."""

    roots: np.ndarray

    def __len__(self):
        return self.roots.size

    @property
    def moduli(self):
        return np.abs(self.roots)


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Innovation/predictor-form SISO model in observer canonical form.

    Parameters
    ----------
    alpha : array_like
        Characteristic polynomial coefficients ``alpha_1 .. alpha_nx`` of A_K.
    k_gain : array_like
        Kalman gain ``k_1 .. k_nx``.
    sigma2_e : float
        Innovation variance.

    Construction raises :class:`UnstableModelError` if A_K is not stable.
    """

    alpha: np.ndarray
    k_gain: np.ndarray
    sigma2_e: float = 1.0

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float).reshape(-1)
        k_gain = np.array(self.k_gain, dtype=float).reshape(-1)
        if alpha.size == 0 or alpha.size != k_gain.size:
            raise ValueError(
                f"alpha and k_gain need equal positive length, got {alpha.size} and {k_gain.size}"
            )
        if not self.sigma2_e > 0:
            raise ValueError(f"sigma2_e must be positive, got {self.sigma2_e}")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(k_gain))):
            raise ValueError("model coefficients must be finite")
        rho = spectral_radius(alpha)
        if not rho < 1.0 - STABILITY_MARGIN:
            raise UnstableModelError(
                f"A_K is not stable: spectral radius {rho:.6g} >= 1", spectral_radius=rho
            )
        alpha.flags.writeable = False
        k_gain.flags.writeable = False
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "k_gain", k_gain)
        object.__setattr__(self, "sigma2_e", float(self.sigma2_e))

    @property
    def n_x(self):
        return self.alpha.size

    @property
    def A_K(self):
        return companion(self.alpha)

    @property
    def K(self):
        return self.k_gain.reshape(-1, 1).copy()

    @property
    def C(self):
        C = np.zeros((1, self.n_x))
        C[0, 0] = 1.0
        return C

    @property
    def A(self):
        """Innovation-form system matrix ``A_K + K C``."""
        return self.A_K + self.K @ self.C

    @property
    def spectral_radius(self):
        return spectral_radius(self.alpha)

    def transfer_polynomials(self):
        """Coefficients (in powers of q^-1) of ``H(q) = num/den`` with ``y = H e``.

        ``num`` is the characteristic polynomial of A_K and ``den`` that of
        A, so ``den = [1, alpha - k]``.
        """
        num = np.concatenate(([1.0], self.alpha))
        den = np.concatenate(([1.0], self.alpha - self.k_gain))
        return num, den

    def __eq__(self, other):
        if not isinstance(other, StateSpaceModel):
            return NotImplemented
        return (
            np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.k_gain, other.k_gain)
            and self.sigma2_e == other.sigma2_e
        )

    def __hash__(self):
        return hash((self.alpha.tobytes(), self.k_gain.tobytes(), self.sigma2_e))

    def __repr__(self):
        return (
            f"StateSpaceModel(alpha={self.alpha.tolist()}, "
            f"k_gain={self.k_gain.tolist()}, sigma2_e={self.sigma2_e})"
        )


def build_observer_canonical(alpha, k_gain, sigma2_e=1.0):
    return StateSpaceModel(alpha, k_gain, sigma2_e)


def from_arma(a, c, sigma2_e=1.0):
    """Model for ``y[k] + sum a_i y[k-i] = e[k] + sum c_i e[k-i]``.

    The shorter coefficient list is zero-padded. The predictor poles are the
    MA roots, so ``alpha = c`` and ``K = c - a``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    n = max(a.size, c.size)
    a = np.pad(a, (0, n - a.size))
    c = np.pad(c, (0, n - c.size))
    return StateSpaceModel(c, c - a, sigma2_e)


def to_arma(model):
    """Inverse of :func:`from_arma`: returns ``(a, c)``."""
    return model.alpha - model.k_gain, model.alpha.copy()


def markov_parameters(model, count):
    """Predictor Markov parameters ``g_i = C A_K^(i-1) K`` for i = 1..count."""
    if count < 1:
        raise ValueError("count must be >= 1")
    A_K = model.A_K
    v = model.k_gain.copy()
    g = np.empty(count)
    for i in range(count):
        g[i] = v[0]
        v = A_K @ v
    return g


def impulse_response(model, count):
    """Impulse response of ``y = H(q) e``: ``h_0 = 1``, ``h_i = C A^(i-1) K``.

    A = A_K + K C may be unstable even though A_K is not; no check is made,
    see :func:`innovation_stable`.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    A = model.A
    v = model.k_gain.copy()
    h = np.empty(count)
    h[0] = 1.0
    for i in range(1, count):
        h[i] = v[0]
        v = A @ v
    return h


def innovation_stable(model):
    """True when ``A = A_K + K C`` has spectral radius below one."""
    return spectral_radius(model.alpha - model.k_gain) < 1.0


def characteristic_roots(model):
    return PolynomialRoots(np.linalg.eigvals(model.A_K))


def gain_from_markov(alpha, g):
    """Observer-form gain reproducing the leading Markov parameters ``g``.

    From ``K(q) = A_K(q) G(q)``: ``k_j = g_j + sum_{i<j} alpha_i g_{j-i}``.
    """
    alpha = np.asarray(alpha, dtype=float)
    g = np.asarray(g, dtype=float)[: alpha.size]
    k = g.copy()
    for j in range(alpha.size):
        for i in range(j):
            k[j] += alpha[i] * g[j - 1 - i]
    return k
