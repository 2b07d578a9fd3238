"""Seeded output-only simulation of innovation-form models.

Innovations come from ``numpy.random.default_rng(seed)`` (PCG64 bit
generator, ziggurat normal sampler). Trial ``i`` of a Monte Carlo run uses
seed ``base_seed + i``.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from wnsf.exceptions import UnstableModelError
from wnsf.model import from_arma, spectral_radius

DEFAULT_BURN_IN = 1000


@dataclass(frozen=True, eq=False)
class Trajectory:
    y: np.ndarray
    e: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        object.__setattr__(self, "y", y)
        if self.e is not None:
            e = np.asarray(self.e, dtype=float).reshape(-1)
            if e.size != y.size:
                raise ValueError(f"innovations have length {e.size}, outputs {y.size}")
            object.__setattr__(self, "e", e)

    def __len__(self):
        return self.y.size


def _as_output(y):
    if isinstance(y, Trajectory):
        return y.y
    return np.asarray(y, dtype=float).reshape(-1)


def innovations(n, seed, sigma2_e=1.0):
    rng = np.random.default_rng(seed)
    return np.sqrt(sigma2_e) * rng.standard_normal(n)


def simulate(model, n_samples, seed, burn_in=DEFAULT_BURN_IN, keep_innovations=False):
    """Simulate ``n_samples`` outputs of ``model`` from ``x_0 = 0``.

    The first ``burn_in`` samples are generated and discarded.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    # A_K is checked when the model is built; the output recursion runs on A = A_K + K C
    rho = spectral_radius(model.alpha - model.k_gain)
    if not rho < 1.0:
        raise UnstableModelError(
            f"cannot simulate: A = A_K + K C has spectral radius {rho:.6g} >= 1",
            spectral_radius=rho,
        )
    e = innovations(burn_in + n_samples, seed, model.sigma2_e)
    num, den = model.transfer_polynomials()
    y = lfilter(num, den, e)[burn_in:]
    return Trajectory(y, e[burn_in:] if keep_innovations else None, seed)


def arma_simulate(a, c, n_samples, seed, sigma2_e=1.0, burn_in=DEFAULT_BURN_IN,
                  keep_innovations=False):
    """Simulate ``y[k] + sum a_i y[k-i] = e[k] + sum c_i e[k-i]``."""
    model = from_arma(a, c, sigma2_e)
    return simulate(model, n_samples, seed, burn_in, keep_innovations)


def write_csv(trajectory, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if trajectory.e is None:
            writer.writerow(["y"])
            writer.writerows([repr(float(v))] for v in trajectory.y)
        else:
            writer.writerow(["y", "e"])
            writer.writerows(
                (repr(float(v)), repr(float(w))) for v, w in zip(trajectory.y, trajectory.e)
            )


def read_csv(path, seed=None):
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if not header or header[0] != "y":
            raise ValueError(f"{path}: first column must be 'y', got {header}")
        has_e = len(header) > 1 and header[1] == "e"
        ys, es = [], []
        for row in reader:
            if not row:
                continue
            ys.append(float(row[0]))
            if has_e:
                es.append(float(row[1]))
    return Trajectory(np.array(ys), np.array(es) if has_e else None, seed)
