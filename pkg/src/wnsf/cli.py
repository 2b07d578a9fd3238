"""Command-line interface: ``wnsf simulate | identify | montecarlo | crlb``.

Exit codes: 0 success, 1 usage or invalid input, 2 numerical failure,
3 file I/O error. The Monte Carlo worker count is read from ``WNSF_WORKERS``.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from wnsf import __version__
from wnsf.exceptions import IdentificationError
from wnsf.experiment import load_config, run_experiment, worker_count
from wnsf.hoar import default_order
from wnsf.metrics import crlb, fit_score
from wnsf.model import (
    StateSpaceModel,
    characteristic_roots,
    from_arma,
    impulse_response,
    innovation_stable,
)
from wnsf.pipeline import wnsf_identify
from wnsf.simulate import DEFAULT_BURN_IN, read_csv, simulate, write_csv
from wnsf.subspace import SubspaceConfig, sim_identify

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_model_args(p):
    g = p.add_argument_group("model")
    g.add_argument("--arma-a", type=float, nargs="+", metavar="A",
                   help="AR coefficients a_1..a_n of y[k] + sum a_i y[k-i] = e[k] + sum c_i e[k-i]")
    g.add_argument("--arma-c", type=float, nargs="+", metavar="C", help="MA coefficients c_1..c_n")
    g.add_argument("--alpha", type=float, nargs="+", help="characteristic polynomial of A_K")
    g.add_argument("--k", type=float, nargs="+", help="observer-form Kalman gain")
    g.add_argument("--sigma2", type=float, default=None, help="innovation variance (default 1)")


def _model_from_args(args, required=True):
    sigma2 = args.sigma2 if args.sigma2 is not None else 1.0
    if args.alpha is not None:
        if args.arma_a is not None or args.arma_c is not None:
            raise ValueError("give either --alpha/--k or --arma-a/--arma-c")
        k = args.k if args.k is not None else [0.0] * len(args.alpha)
        return StateSpaceModel(args.alpha, k, sigma2)
    if args.arma_a is not None or args.arma_c is not None:
        return from_arma(args.arma_a or [0.0], args.arma_c or [0.0], sigma2)
    if required:
        raise ValueError("a model is required: --arma-a/--arma-c or --alpha/--k")
    return None


def _model_meta(model):
    return {"alpha": model.alpha.tolist(), "k": model.k_gain.tolist(), "sigma2_e": model.sigma2_e,
            "n_x": model.n_x}


def _emit(doc, path):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args):
    model = _model_from_args(args)
    traj = simulate(model, args.n, args.seed, args.burn_in, keep_innovations=args.keep_innovations)
    out = Path(args.output)
    write_csv(traj, out)
    sidecar = out.with_suffix(".json")
    _emit({"seed": args.seed, "n_samples": args.n, "burn_in": args.burn_in,
           "generator": "numpy PCG64 / standard_normal", "model": _model_meta(model)}, sidecar)
    return EXIT_OK


def _poles(model):
    r = characteristic_roots(model).roots
    return {"real": r.real.tolist(), "imag": r.imag.tolist(), "modulus": np.abs(r).tolist()}


def cmd_identify(args):
    y = read_csv(args.trajectory).y
    truth = _model_from_args(args, required=False)
    n = default_order(y.size) if args.order in (None, "auto") else int(args.order)
    report = {"method": args.method, "n_x": args.n_x, "n_samples": int(y.size)}
    if args.method == "sim":
        cfg = SubspaceConfig.default(args.n_x, args.weighting)
        cfg = SubspaceConfig(args.f or cfg.f, args.p or cfg.p, args.weighting)
        res = sim_identify(y, args.n_x, cfg)
        model = res.model
        report.update({
            "alpha": model.alpha.tolist(),
            "singular_values": res.singular_values.tolist(),
            "canonical_correlations": res.canonical_correlations.tolist(),
            "rank": res.rank,
            "degenerate": res.degenerate,
            "horizons": {"f": cfg.f, "p": cfg.p},
            "weighting": cfg.weighting,
            "status": "degenerate" if res.degenerate else "ok",
        })
    else:
        iters = 1 if args.method == "wnsf" else args.iterations
        res = wnsf_identify(y, args.n_x, n, iters)
        model = res.model
        report.update({
            "hoar_order": n,
            "alpha_ols": res.ols.alpha.tolist(),
            "alpha_wls": res.wls.alpha.tolist(),
            "alpha": model.alpha.tolist(),
            "status": res.status,
            "diagnostics": res.diagnostics,
        })
    report["k_hat"] = model.k_gain.tolist()
    report["sigma2_hat"] = model.sigma2_e
    report["poles"] = _poles(model)
    report["innovation_form_stable"] = innovation_stable(model)
    if truth is not None:
        h = impulse_response(truth, args.fit_horizon)
        report["truth"] = _model_meta(truth)
        report["fit"] = fit_score(h, impulse_response(model, args.fit_horizon))
        report["fit_horizon"] = args.fit_horizon
    _emit(report, args.output)
    return EXIT_OK


def _parse_list(text, cast):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        text = text[1:-1]
    return [cast(t) for t in text.split(",") if t.strip()]


def cmd_montecarlo(args):
    overrides = {
        "arma_a": args.arma_a, "arma_c": args.arma_c, "alpha": args.alpha, "k": args.k,
        "sigma2": args.sigma2,
        "n_samples": _parse_list(args.n_samples, int) if args.n_samples else None,
        "hoar_order": (None if args.hoar_order is None else
                       "auto" if args.hoar_order.strip() == "auto" else
                       _parse_list(args.hoar_order, int)),
        "n_x": args.n_x, "trials": args.trials, "base_seed": args.base_seed,
        "methods": _parse_list(args.methods, str) if args.methods else None,
        "wls_iterations": args.wls_iterations, "fit_horizon": args.fit_horizon,
        "results": args.results, "summary": args.summary,
    }
    config = load_config(args.config, overrides)
    if config.results is None:
        config.results = "results.csv"
    if config.summary is None:
        config.summary = "summary.json"
    progress = None
    if args.verbose:
        def progress(done, total):
            if done == total or done % max(1, total // 20) == 0:
                print(f"  {done}/{total} cells", file=sys.stderr)
    _, summary = run_experiment(config, worker_count(), with_crlb=not args.no_crlb,
                                progress=progress)
    for cell in summary["cells"]:
        q = cell.get("quantities", {})
        mse = q.get("alpha_1", {}).get("mse", float("nan"))
        fit = q.get("fit", {}).get("median", float("nan"))
        print(f"{cell['method']:>14} N={cell['N']:<6} n={cell['n']:<4} "
              f"mse(alpha_1)={mse:.4g} median_fit={fit:.2f} failed={cell.get('n_failed', 0)}")
    return EXIT_OK


def cmd_crlb(args):
    model = _model_from_args(args)
    res = crlb(model, args.horizon, args.n_mc, args.seed)
    doc = {
        "model": _model_meta(model),
        "names": res.names,
        "fisher_per_sample": res.fisher.tolist(),
        "fisher_stderr": res.fisher_stderr.tolist(),
        "singular": res.singular,
        "horizon": res.horizon,
        "n_mc": res.n_mc,
        "seed": args.seed,
        "bounds": [],
    }
    for N in args.N:
        v = res.variances(N)
        doc["bounds"].append({"N": N, **{k: (x if np.isfinite(x) else None) for k, x in v.items()}})
    _emit(doc, args.output)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="wnsf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate an output trajectory to CSV")
    _add_model_args(p)
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
    p.add_argument("--keep-innovations", action="store_true", help="add an 'e' column")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("identify", help="identify a model from a trajectory CSV")
    p.add_argument("trajectory")
    p.add_argument("--n-x", type=int, default=1)
    p.add_argument("--order", default="auto", help="HOAR order or 'auto'")
    p.add_argument("--method", choices=["wnsf", "wnsf-iterated", "sim"], default="wnsf")
    p.add_argument("--iterations", type=int, default=10, help="WLS passes for wnsf-iterated")
    p.add_argument("--f", type=int, help="SIM future horizon")
    p.add_argument("--p", type=int, help="SIM past horizon")
    p.add_argument("--weighting", choices=["cva", "none"], default="cva")
    p.add_argument("--fit-horizon", type=int, default=100)
    _add_model_args(p)
    p.add_argument("-o", "--output", help="report path (default stdout)")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("montecarlo", help="run a Monte Carlo benchmark")
    p.add_argument("--config", help="key = value experiment file; flags override it")
    _add_model_args(p)
    p.add_argument("--n-samples", help="list such as [300,600,1000,3000]")
    p.add_argument("--hoar-order", help="list paired with --n-samples, or 'auto'")
    p.add_argument("--n-x", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--base-seed", type=int)
    p.add_argument("--methods", help="subset of [wnsf,wnsf-iterated,sim]")
    p.add_argument("--wls-iterations", type=int)
    p.add_argument("--fit-horizon", type=int)
    p.add_argument("--results", help="per-trial CSV (default results.csv)")
    p.add_argument("--summary", help="summary JSON (default summary.json)")
    p.add_argument("--no-crlb", action="store_true", help="skip the CRLB reference")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("crlb", help="numeric Cramer-Rao bound for (alpha, k)")
    _add_model_args(p)
    p.add_argument("--N", type=int, nargs="+", default=[300, 600, 1000, 3000])
    p.add_argument("--horizon", type=int, default=100_000)
    p.add_argument("--n-mc", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="JSON path (default stdout)")
    p.set_defaults(func=cmd_crlb)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IdentificationError as exc:
        stage = getattr(exc, "stage", None)
        print(f"wnsf: numerical failure{f' in {stage}' if stage else ''}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"wnsf: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        stage = getattr(exc, "stage", None)
        print(f"wnsf: invalid input{f' in {stage}' if stage else ''}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
