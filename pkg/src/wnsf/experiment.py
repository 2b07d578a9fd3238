"""Monte Carlo experiments: configuration, trial execution, CSV/JSON output.

Config files are flat ``key = value`` lines. ``#`` starts a comment, lists
are written ``[a, b, c]`` and the literal ``auto`` is allowed for
``hoar_order``. Keys are the field names of :class:`ExperimentConfig`
(``arma_a``/``arma_c`` or ``alpha``/``k`` select the model).
"""

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from wnsf.exceptions import IdentificationError
from wnsf.hoar import default_order
from wnsf.metrics import TrialRecord, aggregate, crlb, fit_score
from wnsf.model import StateSpaceModel, from_arma, impulse_response
from wnsf.pipeline import wnsf_identify
from wnsf.simulate import DEFAULT_BURN_IN, simulate
from wnsf.subspace import SubspaceConfig, sim_identify

SCHEMA_VERSION = 1
METHODS = ("wnsf", "wnsf-iterated", "sim")
WORKERS_ENV = "WNSF_WORKERS"

# sample sizes and HOAR orders of the ARMA(1,1) study
STUDY_GRID = ((300, 30), (600, 40), (1000, 50), (3000, 60))


@dataclass
class ExperimentConfig:
    arma_a: list | None = None
    arma_c: list | None = None
    alpha: list | None = None
    k: list | None = None
    sigma2: float = 1.0
    n_samples: list = field(default_factory=lambda: [n for n, _ in STUDY_GRID])
    hoar_order: list | str = field(default_factory=lambda: [o for _, o in STUDY_GRID])
    n_x: int | None = None
    trials: int = 1000
    base_seed: int = 0
    methods: list = field(default_factory=lambda: ["wnsf"])
    wls_iterations: int = 10
    fit_horizon: int = 100
    sim_f: int | None = None
    sim_p: int | None = None
    sim_weighting: str = "cva"
    burn_in: int = DEFAULT_BURN_IN
    crlb_horizon: int = 100_000
    crlb_n_mc: int = 4
    crlb_seed: int = 1_000_003
    results: str | None = None
    summary: str | None = None

    def __post_init__(self):
        self.validate()

    def model(self):
        if self.alpha is not None:
            if self.arma_a is not None or self.arma_c is not None:
                raise ValueError("give either alpha/k or arma_a/arma_c, not both")
            k = self.k if self.k is not None else [0.0] * len(self.alpha)
            return StateSpaceModel(self.alpha, k, self.sigma2)
        a = self.arma_a if self.arma_a is not None else [-0.8]
        c = self.arma_c if self.arma_c is not None else [0.9]
        return from_arma(a, c, self.sigma2)

    def state_dim(self):
        return self.n_x if self.n_x is not None else self.model().n_x

    def grid(self):
        """``(N, n)`` pairs, pairing lists by index."""
        if isinstance(self.hoar_order, str):
            return [(N, default_order(N)) for N in self.n_samples]
        return list(zip(self.n_samples, self.hoar_order))

    def validate(self):
        if not self.n_samples:
            raise ValueError("n_samples must not be empty")
        if isinstance(self.hoar_order, str):
            if self.hoar_order != "auto":
                raise ValueError(f"hoar_order must be a list or 'auto', got {self.hoar_order!r}")
        elif len(self.hoar_order) != len(self.n_samples):
            raise ValueError(
                f"hoar_order has {len(self.hoar_order)} entries but n_samples has {len(self.n_samples)}"
            )
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            raise ValueError(f"methods must be a non-empty subset of {METHODS}, got {self.methods}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.fit_horizon < 2:
            raise ValueError("fit_horizon must be >= 2")
        if self.wls_iterations < 1:
            raise ValueError("wls_iterations must be >= 1")
        if self.sim_weighting not in ("cva", "none"):
            raise ValueError("sim_weighting must be 'cva' or 'none'")

    def subspace_config(self):
        d = SubspaceConfig.default(self.state_dim(), self.sim_weighting)
        return SubspaceConfig(self.sim_f or d.f, self.sim_p or d.p, self.sim_weighting)


# --- config file grammar --------------------------------------------------------

_LIST_KEYS = {"arma_a", "arma_c", "alpha", "k", "n_samples", "hoar_order", "methods"}
_INT_KEYS = {"n_x", "trials", "base_seed", "wls_iterations", "fit_horizon", "sim_f", "sim_p",
             "burn_in", "crlb_horizon", "crlb_n_mc", "crlb_seed"}
_FLOAT_LIST_KEYS = {"arma_a", "arma_c", "alpha", "k"}
_INT_LIST_KEYS = {"n_samples", "hoar_order"}


def _scalar(text):
    return text.strip().strip("'\"")


def parse_value(key, text):
    text = text.strip()
    if key in _LIST_KEYS:
        if key == "hoar_order" and _scalar(text) == "auto":
            return "auto"
        if text.startswith("[") and text.endswith("]"):
            items = [_scalar(t) for t in text[1:-1].split(",") if t.strip()]
        else:
            items = [_scalar(text)]
        if key in _FLOAT_LIST_KEYS:
            return [float(t) for t in items]
        if key in _INT_LIST_KEYS:
            return [int(t) for t in items]
        return items
    if key in _INT_KEYS:
        return int(_scalar(text))
    if key == "sigma2":
        return float(_scalar(text))
    return _scalar(text)


def parse_config_text(text):
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        values[key] = parse_value(key, value)
    return values


def load_config(path=None, overrides=None):
    """Config from an optional file, with ``overrides`` (non-None entries) winning."""
    values = parse_config_text(Path(path).read_text()) if path else {}
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    # a model given on the command line replaces the file's model entirely
    if overrides.keys() & {"arma_a", "arma_c", "alpha", "k"}:
        for key in ("arma_a", "arma_c", "alpha", "k"):
            values.pop(key, None)
    values.update(overrides)
    return ExperimentConfig(**values)


# --- trials ----------------------------------------------------------------------

def _identify(method, y, n_x, n, config):
    if method == "sim":
        res = sim_identify(y, n_x, config.subspace_config())
        return res.model, None, "ok"
    iters = 1 if method == "wnsf" else config.wls_iterations
    res = wnsf_identify(y, n_x, n, iters)
    return res.model, res.ols.alpha, res.status


def run_cell(config, N, n, trial, methods=None):
    """All methods on one simulated trajectory; returns one record per method."""
    truth = config.model()
    n_x = config.state_dim()
    seed = config.base_seed + trial
    y = simulate(truth, N, seed, config.burn_in).y
    h_true = impulse_response(truth, config.fit_horizon)
    out = []
    for method in methods or config.methods:
        try:
            model, alpha_ols, status = _identify(method, y, n_x, n, config)
            fit = fit_score(h_true, impulse_response(model, config.fit_horizon))
            if not math.isfinite(fit):
                raise IdentificationError("estimated model has a divergent impulse response")
            sq = float(np.sum((model.alpha - truth.alpha) ** 2)) if model.n_x == truth.n_x else math.nan
            rec = TrialRecord(method, N, n, trial, seed, status, model.alpha, alpha_ols,
                              model.k_gain, fit, sq)
        except (IdentificationError, ValueError, np.linalg.LinAlgError) as exc:
            stage = getattr(exc, "stage", method)
            rec = TrialRecord(method, N, n, trial, seed, "failed", message=f"{stage}: {exc}")
        out.append(rec)
    return out


def _run_chunk(args):
    config, tasks = args
    return [rec for N, n, t in tasks for rec in run_cell(config, N, n, t)]


def worker_count():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_montecarlo(config, workers=None, progress=None):
    """Run every (N, trial) cell of the grid for all configured methods.

    Records come back sorted by (method order in the config, N, trial) no
    matter how the work was scheduled.
    """
    workers = workers or worker_count()
    tasks = [(N, n, t) for N, n in config.grid() for t in range(config.trials)]
    if workers == 1:
        records = []
        for i, task in enumerate(tasks):
            records.extend(run_cell(config, *task))
            if progress:
                progress(i + 1, len(tasks))
    else:
        size = max(1, math.ceil(len(tasks) / (4 * workers)))
        chunks = [(config, tasks[i:i + size]) for i in range(0, len(tasks), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = [rec for part in pool.map(_run_chunk, chunks) for rec in part]
    order = {m: i for i, m in enumerate(config.methods)}
    records.sort(key=lambda r: (order[r.method], r.N, r.trial))
    if all(r.status == "failed" for r in records):
        raise IdentificationError(f"all {len(records)} trials failed; first error: {records[0].message}")
    return records


# --- output ------------------------------------------------------------------------

def _num(v):
    if v is None:
        return ""
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def csv_header(n_x):
    cols = ["method", "N", "n", "trial", "seed"]
    cols += [f"alpha_hat_{i + 1}" for i in range(n_x)]
    cols += [f"alpha_ols_{i + 1}" for i in range(n_x)]
    cols += [f"k_hat_{i + 1}" for i in range(n_x)]
    cols += ["fit", "sq_err_alpha", "status"]
    return cols


def write_results_csv(records, path, n_x):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(n_x))
        for r in records:
            def vec(v):
                return [_num(x) for x in v] if v is not None else [""] * n_x
            w.writerow([r.method, r.N, r.n, r.trial, r.seed, *vec(r.alpha_hat),
                        *vec(r.alpha_ols), *vec(r.k_hat), _num(r.fit), _num(r.sq_err_alpha),
                        r.status])


def read_results_csv(path):
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def summarize(records, config, crlb_result=None):
    """Summary document: aggregate statistics per (method, N) plus CRLB references."""
    truth = config.model()
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": {k: v for k, v in asdict(config).items() if k not in ("results", "summary")},
        "truth": {"alpha": truth.alpha.tolist(), "k": truth.k_gain.tolist(),
                  "sigma2_e": truth.sigma2_e},
        "fit_horizon": config.fit_horizon,
        "cells": [],
    }
    if crlb_result is not None:
        doc["crlb_per_sample"] = {
            "names": crlb_result.names,
            "fisher": crlb_result.fisher.tolist(),
            "fisher_stderr": crlb_result.fisher_stderr.tolist(),
            "horizon": crlb_result.horizon,
            "n_mc": crlb_result.n_mc,
            "singular": crlb_result.singular,
        }
    for method in config.methods:
        for N, n in config.grid():
            cell = [r for r in records if r.method == method and r.N == N]
            entry = {"method": method, "N": N, "n": n}
            try:
                entry.update(aggregate(cell, truth.alpha, truth.k_gain))
            except IdentificationError as exc:
                entry.update({"n_trials": len(cell), "n_failed": len(cell), "error": str(exc)})
            if crlb_result is not None:
                entry["crlb"] = _finite(crlb_result.variances(N))
                mse = entry.get("quantities", {}).get("alpha_1", {}).get("mse")
                bound = entry["crlb"].get("alpha_1")
                if mse is not None and bound:
                    entry["mse_over_crlb_alpha_1"] = mse / bound
            doc["cells"].append(entry)
    return doc


def _finite(d):
    return {k: (v if math.isfinite(v) else None) for k, v in d.items()}


def write_json(doc, path):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def run_experiment(config, workers=None, with_crlb=True, progress=None):
    """Run the Monte Carlo study and write the configured outputs.

    Returns ``(records, summary)``.
    """
    records = run_montecarlo(config, workers, progress)
    bound = None
    if with_crlb:
        bound = crlb(config.model(), config.crlb_horizon, config.crlb_n_mc, config.crlb_seed)
    summary = summarize(records, config, bound)
    if config.results:
        write_results_csv(records, config.results, config.state_dim())
    if config.summary:
        write_json(summary, config.summary)
    return records, summary
