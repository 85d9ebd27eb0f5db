"""Batch command-line interface.

Subcommands: fit, select, bound, optimal-k, simulate.  Every run writes its
outputs plus a manifest JSON echoing the resolved options and seed, with no
timestamps, so identical invocations produce byte-identical files.  Exit
codes: 0 success, 1 computation error (machine-readable JSON on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bounds, selector, simulate
from .data import load_csv, standardize, to_original_coefficients
from .errors import GemselError
from .estimators import (
    FsrConfig,
    fit_bridge,
    fit_fsr,
    fit_lasso,
    fit_ols,
    fit_ridge,
)
from . import metrics


def _write(path: str, content: str, written: list):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(content)
    written.append(path)


def _manifest(out_prefix: str, command: str, options: dict, written: list):
    manifest = {
        "command": command,
        "options": {k: v for k, v in sorted(options.items())},
        "outputs": list(written),
    }
    path = f"{out_prefix}.manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _coef_payload(coef, data_std):
    slopes, intercept = to_original_coefficients(coef.b, data_std)
    return {
        "coefficients_standardized": [float(v) for v in coef.b],
        "slopes_original": [float(v) for v in slopes],
        "intercept_original": float(intercept),
        "solver_iters": coef.solver_iters,
        "converged": coef.converged,
        "ete_standardized": metrics.ete(coef, data_std),
    }


def _cmd_fit(args) -> int:
    data = load_csv(args.input)
    data_std = standardize(data)
    if args.estimator == "ols":
        coef = fit_ols(data_std)
    elif args.estimator == "ridge":
        coef = fit_ridge(data_std, args.lam)
    elif args.estimator == "lasso":
        coef = fit_lasso(data_std, args.lam, tol=args.tol, max_iters=args.max_iters)
    elif args.estimator == "bridge":
        coef = fit_bridge(data_std, args.lam, args.gamma, tol=args.tol,
                          max_iters=args.max_iters)
    else:  # fsr
        cfg = None
        if args.fsr_step is not None:
            cfg = FsrConfig(step=args.fsr_step, max_iters=args.max_iters)
        coef = fit_fsr(data_std, cfg)
    written = []
    _write(f"{args.output}.fit.json",
           json.dumps(_coef_payload(coef, data_std), indent=2) + "\n", written)
    _manifest(args.output, "fit", _options(args), written)
    return 0


def _cmd_select(args) -> int:
    data = load_csv(args.input)
    data_std = standardize(data)
    gamma = {"lasso": 1.0, "ridge": 2.0, "bridge": args.gamma}[args.penalty]
    grid = selector.lambda_grid(data_std, args.grid_points, args.min_ratio)
    if args.cv is not None:
        report = selector.select_cv(data_std, gamma, grid, K=args.cv, seed=args.seed)
    else:
        report = selector.select_validation(data_std, gamma, grid,
                                            ratio=args.ratio, seed=args.seed)
    written = []
    _write(f"{args.output}.selection.json",
           selector.report_to_json(report, indent=2) + "\n", written)
    _write(f"{args.output}.path.csv", selector.report_path_csv(report), written)
    _manifest(args.output, "select", _options(args), written)
    return 0


def _tail_from_args(args) -> bounds.TailSpec:
    if args.tail == "bounded":
        return bounds.TailSpec.bounded(args.b)
    if args.tail == "light":
        return bounds.TailSpec.light(args.varq, nu=args.nu if args.nu and args.nu > 2 else None)
    return bounds.TailSpec.heavy(nu=args.nu, tau=args.tau, mean_q=args.meanq)


def _cmd_bound(args) -> int:
    if args.thm == "vc":
        inputs = bounds.BoundInputs(n_t=args.nt, n_s=max(args.ns, 1), h=args.h,
                                    varpi=args.varpi, tail=None, ete=args.ete,
                                    eta=args.eta)
        report = bounds.vc_population_bound(inputs)
    elif args.thm == "2.1":
        inputs = bounds.BoundInputs(n_t=args.nt, n_s=args.ns, h=args.h,
                                    varpi=args.varpi, tail=_tail_from_args(args),
                                    ete=args.ete)
        report = bounds.ege_bound_validation(inputs)
    elif args.thm == "2.2":
        inputs = bounds.BoundInputs(n_t=max(args.n - args.n // args.k, 1),
                                    n_s=max(args.n // args.k, 1), h=args.h,
                                    varpi=args.varpi, tail=_tail_from_args(args),
                                    ete=args.ete)
        report = bounds.ege_bound_cv(inputs, n=args.n, K=args.k,
                                     tq_mean=args.tq_mean, tq_var=args.tq_var,
                                     bernstein_b=args.bernstein_b)
    else:  # ols (Gaussian least-squares bound)
        report = bounds.ols_ege_bound(args.ete, args.nt, args.ns, args.h,
                                      args.varpi, args.sigma2, mode=args.mode)
    written = []
    _write(f"{args.output}.bound.json", report.to_json(indent=2) + "\n", written)
    _write(f"{args.output}.bound.csv", report.to_csv_row(), written)
    _manifest(args.output, "bound", _options(args), written)
    return 0


def _cmd_optimal_k(args) -> int:
    k_star, curve = bounds.optimal_k(args.n, args.h, args.sigma2, args.varpi,
                                     (args.kmin, args.kmax))
    written = []
    payload = {"k_star": k_star,
               "curve": [{"K": k, "bias_term": b, "variance_term": v, "total": t}
                         for k, b, v, t in curve]}
    _write(f"{args.output}.optimal_k.json",
           json.dumps(payload, indent=2, default=float) + "\n", written)
    lines = ["K,bias_term,variance_term,total"]
    for k, b, v, t in curve:
        lines.append(f"{k},{b:.17g},{v:.17g},{t:.17g}")
    _write(f"{args.output}.optimal_k.csv", "\n".join(lines) + "\n", written)
    _manifest(args.output, "optimal-k", _options(args), written)
    return 0


def _cmd_simulate(args) -> int:
    if args.preset == "table2":
        cfg = simulate.table2_config(args.p, args.sigma2,
                                     replications=args.reps, root_seed=args.seed)
    else:
        cfg = simulate.SimConfig(
            n=args.n, p=args.p, sigma2=args.sigma2, rho_x=args.rho_x,
            replications=args.reps, root_seed=args.seed,
            estimator_set=tuple(args.estimators.split(",")),
            selection=("cv" if args.cv is not None else "validation"),
            ratio=args.ratio, cv_k=args.cv or 10,
        )
    report = simulate.run_study(cfg)
    written = []
    _write(f"{args.output}.aggregates.csv", simulate.aggregates_csv(report), written)
    _write(f"{args.output}.boxplot.csv", simulate.boxplot_csv(report), written)
    _write(f"{args.output}.gr2.csv", simulate.gr2_csv(report), written)
    _write(f"{args.output}.study.json", simulate.study_manifest(report) + "\n", written)
    _manifest(args.output, "simulate", _options(args), written)
    return 0


def _options(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gemsel",
        description="Penalized regression tuned by held-out generalization error, "
                    "with finite-sample error bounds and simulation studies.",
    )
    parser.add_argument("--threads", type=int, default=0,
                        help="cap the numba thread pool (0 = leave default)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit one estimator on a CSV dataset")
    p_fit.add_argument("--input", required=True)
    p_fit.add_argument("--estimator", required=True,
                       choices=["ols", "ridge", "lasso", "bridge", "fsr"])
    p_fit.add_argument("--lam", type=float, default=0.0)
    p_fit.add_argument("--gamma", type=float, default=3.0)
    p_fit.add_argument("--tol", type=float, default=1e-8)
    p_fit.add_argument("--max-iters", type=int, default=100_000)
    p_fit.add_argument("--fsr-step", type=float, default=None)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--output", default="gemsel")
    p_fit.set_defaults(func=_cmd_fit)

    p_sel = sub.add_parser("select", help="tune the penalty by held-out error")
    p_sel.add_argument("--input", required=True)
    p_sel.add_argument("--penalty", required=True, choices=["lasso", "ridge", "bridge"])
    p_sel.add_argument("--gamma", type=float, default=3.0,
                       help="bridge exponent (only with --penalty bridge)")
    p_sel.add_argument("--cv", type=int, default=None, help="fold count; omit for a split")
    p_sel.add_argument("--ratio", type=float, default=0.8)
    p_sel.add_argument("--grid-points", type=int, default=100)
    p_sel.add_argument("--min-ratio", type=float, default=1e-4)
    p_sel.add_argument("--seed", type=int, default=0)
    p_sel.add_argument("--output", default="gemsel")
    p_sel.set_defaults(func=_cmd_select)

    p_bnd = sub.add_parser("bound", help="evaluate a closed-form error bound")
    p_bnd.add_argument("--thm", required=True, choices=["vc", "2.1", "2.2", "ols"],
                       help="bound family: vc = population, 2.1 = single-split eGE, "
                            "2.2 = cross-validated eGE, ols = Gaussian least squares")
    p_bnd.add_argument("--nt", type=int, default=100)
    p_bnd.add_argument("--ns", type=int, default=100)
    p_bnd.add_argument("--h", type=int, default=1)
    p_bnd.add_argument("--eta", type=float, default=0.05)
    p_bnd.add_argument("--varpi", type=float, default=0.5)
    p_bnd.add_argument("--ete", type=float, required=True)
    p_bnd.add_argument("--tail", choices=["bounded", "light", "heavy"], default="light")
    p_bnd.add_argument("--b", type=float, default=1.0)
    p_bnd.add_argument("--varq", type=float, default=1.0)
    p_bnd.add_argument("--nu", type=float, default=None)
    p_bnd.add_argument("--tau", type=float, default=1.0)
    p_bnd.add_argument("--meanq", type=float, default=1.0)
    p_bnd.add_argument("--n", type=int, default=100)
    p_bnd.add_argument("--k", type=int, default=5)
    p_bnd.add_argument("--tq-mean", type=float, default=0.0)
    p_bnd.add_argument("--tq-var", type=float, default=0.0)
    p_bnd.add_argument("--bernstein-b", type=float, default=None)
    p_bnd.add_argument("--sigma2", type=float, default=1.0)
    p_bnd.add_argument("--mode", choices=["validation", "cv"], default="validation")
    p_bnd.add_argument("--output", default="gemsel")
    p_bnd.set_defaults(func=_cmd_bound)

    p_opt = sub.add_parser("optimal-k", help="fold count minimizing the expected bound")
    p_opt.add_argument("--n", type=int, required=True)
    p_opt.add_argument("--h", type=int, required=True)
    p_opt.add_argument("--sigma2", type=float, required=True)
    p_opt.add_argument("--varpi", type=float, default=0.5)
    p_opt.add_argument("--kmin", type=int, default=2)
    p_opt.add_argument("--kmax", type=int, default=25)
    p_opt.add_argument("--output", default="gemsel")
    p_opt.set_defaults(func=_cmd_optimal_k)

    p_sim = sub.add_parser("simulate", help="replication study on the synthetic DGP")
    p_sim.add_argument("--preset", choices=["table2"], default=None)
    p_sim.add_argument("--n", type=int, default=250)
    p_sim.add_argument("--p", type=int, default=200)
    p_sim.add_argument("--sigma2", type=float, default=1.0,
                       help="noise variance (with --preset table2: the column label)")
    p_sim.add_argument("--rho-x", type=float, default=0.9)
    p_sim.add_argument("--reps", type=int, default=50)
    p_sim.add_argument("--estimators", default="lasso,ols")
    p_sim.add_argument("--cv", type=int, default=None)
    p_sim.add_argument("--ratio", type=float, default=0.8)
    p_sim.add_argument("--seed", type=int, default=202400)
    p_sim.add_argument("--output", default="gemsel")
    p_sim.set_defaults(func=_cmd_simulate)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads and args.threads > 0:
        import numba

        numba.set_num_threads(args.threads)
    try:
        return args.func(args)
    except (GemselError, ValueError, OSError) as exc:
        sys.stderr.write(json.dumps(
            {"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
