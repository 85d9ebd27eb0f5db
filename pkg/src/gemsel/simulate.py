"""Replication studies on the equicorrelated sparse-signal DGP.

The data-generating process: covariate rows are equicorrelated Gaussians
built from one common factor, x_j = sqrt(rho) z0 + sqrt(1 - rho) z_j (exact
target correlation, O(np) cost), and y = X beta + u with beta =
(beta1, 0, ..., 0) and i.i.d. Gaussian noise.

Per replication, penalized estimators are tuned on the sample itself
(validation split or K-fold CV), unpenalized baselines (OLS, or forward
stagewise when p >= n) are fit on the full standardized sample, and every
estimator is scored on a fresh evaluation sample in original units.  Error
and R^2 summaries reported by the study are original-unit quantities.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from . import bounds, metrics
from .data import (
    Dataset,
    make_folds,
    split_validation,
    standardize,
    to_original_coefficients,
    transform_like,
)
from .errors import BadCorrelation, GemselError
from .estimators import Coefficients, FsrConfig, default_fsr_config, fit_fsr, fit_ols
from .rng import derive_rng
from .selector import lambda_grid, select_cv, select_validation

PENALIZED = {"lasso": 1.0, "ridge": 2.0}


@dataclass(frozen=True)
class SimConfig:
    """One simulation regime.

    ``sigma2`` is the noise variance of u.  ``estimator_set`` entries are
    "lasso", "ridge", "ols", "fsr"; "ols" is replaced by "fsr" automatically
    when p >= n.  ``selection`` is "validation" (ratio) or "cv" (cv_k).
    """

    n: int = 250
    p: int = 200
    sigma2: float = 1.0
    beta1: tuple = (2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    rho_x: float = 0.9
    replications: int = 50
    root_seed: int = 202400
    estimator_set: tuple = ("lasso", "ols")
    selection: str = "validation"
    ratio: float = 0.8
    cv_k: int = 10
    # Tuned penalties land in [6e-4, 7e-3] * lambda_max on the default
    # regimes (unit noise); this grid brackets them with margin.
    grid_points: int = 60
    grid_min_ratio: float = 2.5e-4
    solver_tol: float = 1e-7
    # Stagewise budget for the unpenalized p > n baseline.  Run to
    # convergence, small-step stagewise fits these regimes nearly as well as
    # the tuned lasso; the reference failure pattern (training R^2 near 0.5,
    # coefficient error an order of magnitude above the lasso's) corresponds
    # to a budget of a few hundred steps at step = 0.001 * max correlation.
    fsr_max_iters: int = 400
    eval_n: int = 0  # 0 means: same size as n

    def beta(self) -> np.ndarray:
        if self.p < len(self.beta1):
            raise ValueError("p must be at least len(beta1)")
        beta = np.zeros(self.p)
        beta[: len(self.beta1)] = self.beta1
        return beta

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v)
                for k, v in self.__dict__.items()}


def table2_config(p: int, sigma_label: float, replications: int = 50,
                  root_seed: int = 202400) -> SimConfig:
    """Config for one column of the four-regime study (n = 250).

    The study's sigma^2 label behaves numerically as a noise standard
    deviation: its reference errors scale by label^2 and its biases by label
    between the two noise levels, so the preset uses variance = label**2.
    """
    estimators = ("lasso", "fsr") if p >= 250 else ("lasso", "ols")
    return SimConfig(
        n=250,
        p=p,
        sigma2=float(sigma_label) ** 2,
        replications=replications,
        root_seed=root_seed,
        estimator_set=estimators,
        # tuned penalties scale with the noise sd, so the grid floor does too
        grid_min_ratio=2.5e-4 * float(sigma_label),
    )


def child_seed(root: int, *path) -> int:
    """Derived integer seed for the documented (root, *path) stream rule."""
    return int(derive_rng(root, *path).integers(0, 2**63 - 1))


def generate_dgp(cfg: SimConfig, seed: int):
    """Draw one raw sample; returns (Dataset, beta) in original units."""
    if not 0.0 <= cfg.rho_x < 1.0:
        raise BadCorrelation(f"rho_x must be in [0, 1), got {cfg.rho_x}")
    rng = derive_rng(seed, "dgp")
    beta = cfg.beta()
    z0 = rng.standard_normal(cfg.n)
    x = math.sqrt(cfg.rho_x) * z0[:, None] + math.sqrt(1.0 - cfg.rho_x) * rng.standard_normal(
        (cfg.n, cfg.p)
    )
    u = math.sqrt(cfg.sigma2) * rng.standard_normal(cfg.n)
    y = x @ beta + u
    return Dataset.from_arrays(y, x), beta


@dataclass(frozen=True)
class EstimatorOutcome:
    metrics: metrics.FitMetrics
    coefficients_original: np.ndarray
    intercept_original: float
    lambda_star: float  # NaN for unpenalized fits
    converged: bool


@dataclass(frozen=True)
class SimulationReport:
    config: SimConfig
    estimators: tuple
    per_replication: tuple  # tuple of dict estimator -> EstimatorOutcome
    aggregates: dict  # estimator -> metric name -> mean
    boxplot_columns: dict  # estimator -> tuple of 10 column indices (1-based)
    n_failed: int
    failures: tuple = ()


def _mean(values) -> float:
    values = [v for v in values if not math.isnan(v)]
    return math.fsum(values) / len(values) if values else float("nan")


def _fit_one_estimator(name: str, data_std: Dataset, cfg: SimConfig, rep: int):
    """Returns (coefficients, train_dataset_for_ete, ete_std, lambda_star)."""
    if name in PENALIZED:
        grid = lambda_grid(data_std, cfg.grid_points, cfg.grid_min_ratio)
        seed_sel = child_seed(cfg.root_seed, rep, "select", name)
        if cfg.selection == "validation":
            report = select_validation(data_std, PENALIZED[name], grid,
                                       ratio=cfg.ratio, seed=seed_sel,
                                       tol=cfg.solver_tol)
            train_ds = report.split.train
        elif cfg.selection == "cv":
            report = select_cv(data_std, PENALIZED[name], grid, K=cfg.cv_k,
                               seed=seed_sel, tol=cfg.solver_tol)
            train_ds = report.data
        else:
            raise ValueError(f"unknown selection mode {cfg.selection!r}")
        coef = report.best.coefficients
        return coef, train_ds, metrics.ete(coef, train_ds), report.best.lam
    if name == "ols":
        coef = fit_ols(data_std)
    elif name == "fsr":
        base = default_fsr_config(data_std)
        coef = fit_fsr(data_std, FsrConfig(step=base.step, corr_tol=base.corr_tol,
                                           max_iters=cfg.fsr_max_iters))
    else:
        raise ValueError(f"unknown estimator {name!r}")
    return coef, data_std, metrics.ete(coef, data_std), float("nan")


def _score_on_eval(coef: Coefficients, train_ds: Dataset, ete_std: float,
                   eval_raw: Dataset, beta: np.ndarray) -> EstimatorOutcome:
    slopes, intercept = to_original_coefficients(coef.b, train_ds)
    resid = eval_raw.y - (eval_raw.x @ slopes + intercept)
    ege_orig = float(resid @ resid / eval_raw.n)
    ete_orig = ete_std * train_ds.col_scales[0] ** 2
    r2_t = 1.0 - ete_std / metrics.tss(train_ds)
    r2_s = 1.0 - ege_orig / metrics.tss(eval_raw)
    fm = metrics.FitMetrics(
        ete=ete_orig,
        ege=ege_orig,
        r2_t=r2_t,
        r2_s=r2_s,
        gr2=r2_s * r2_t,
        l2_bias=float(np.linalg.norm(slopes - beta)),
        l1_bias=float(np.sum(np.abs(slopes - beta))),
    )
    return EstimatorOutcome(
        metrics=fm,
        coefficients_original=slopes,
        intercept_original=intercept,
        lambda_star=float("nan"),
        converged=coef.converged,
    )


def run_study(cfg: SimConfig) -> SimulationReport:
    """Run the replication study for one regime.

    Per replication: a fresh sample and a fresh same-distribution evaluation
    sample are drawn with seeds derived from (root_seed, replication);
    penalized estimators are tuned by the configured selection mode, then
    every estimator is scored on the evaluation sample in original units.
    Failed replications are recorded and skipped; more than 20% failures
    aborts the study.
    """
    if not cfg.estimator_set:
        raise ValueError("estimator_set must be nonempty")
    estimators = tuple(
        ("fsr" if (name == "ols" and cfg.p >= cfg.n) else name)
        for name in cfg.estimator_set
    )
    eval_n = cfg.eval_n or cfg.n
    eval_cfg = replace(cfg, n=eval_n)
    records, failures = [], []
    for rep in range(cfg.replications):
        try:
            raw, beta = generate_dgp(cfg, child_seed(cfg.root_seed, rep, "data"))
            eval_raw, _ = generate_dgp(eval_cfg, child_seed(cfg.root_seed, rep, "eval"))
            data_std = standardize(raw)
            outcome = {}
            for name in estimators:
                coef, train_ds, ete_std, lam_star = _fit_one_estimator(
                    name, data_std, cfg, rep
                )
                res = _score_on_eval(coef, train_ds, ete_std, eval_raw, beta)
                outcome[name] = replace(res, lambda_star=lam_star)
            records.append(outcome)
        except GemselError as exc:  # pragma: no cover - defensive
            failures.append((rep, repr(exc)))
    if len(failures) > 0.2 * cfg.replications:
        raise GemselError(
            f"{len(failures)}/{cfg.replications} replications failed: {failures[:3]}"
        )
    aggregates = {}
    for name in estimators:
        rows = [rec[name].metrics.row() for rec in records]
        aggregates[name] = {k: _mean([r[k] for r in rows]) for k in metrics.TABLE_FIELDS}
    boxplot_columns = {name: _boxplot_columns(records, name, len(cfg.beta1), cfg.p)
                       for name in estimators}
    return SimulationReport(
        config=cfg,
        estimators=estimators,
        per_replication=tuple(records),
        aggregates=aggregates,
        boxplot_columns=boxplot_columns,
        n_failed=len(failures),
        failures=tuple(failures),
    )


def _boxplot_columns(records, name, n_active, p):
    """Active coefficients plus the four worst null ones (largest mean |est|)."""
    if not records:
        return tuple()
    est = np.stack([rec[name].coefficients_original for rec in records])
    null_mean_abs = np.mean(np.abs(est[:, n_active:]), axis=0)
    n_worst = min(4, p - n_active)
    worst = np.argsort(null_mean_abs)[::-1][:n_worst] + n_active
    return tuple(range(1, n_active + 1)) + tuple(int(j) + 1 for j in sorted(worst))


# ---------------------------------------------------------------------------
# Study CSV / JSON emitters
# ---------------------------------------------------------------------------

_ROW_LABELS = (
    ("bias_l2", "Bias_L2"),
    ("bias_l1", "Bias_L1"),
    ("ete", "eTE"),
    ("ege", "eGE"),
    ("r2_t", "R2_t"),
    ("r2_s", "R2_s"),
    ("gr2", "GR2"),
)


def aggregates_csv(report: SimulationReport) -> str:
    """Measure-by-estimator table of replication means."""
    lines = ["measure," + ",".join(report.estimators)]
    for key, label in _ROW_LABELS:
        vals = ",".join(f"{report.aggregates[e][key]:.17g}" for e in report.estimators)
        lines.append(f"{label},{vals}")
    return "\n".join(lines) + "\n"


def boxplot_csv(report: SimulationReport) -> str:
    """Per-replication coefficient estimates for the boxplot columns."""
    lines = ["estimator,replication,coefficient,value"]
    for name in report.estimators:
        cols = report.boxplot_columns[name]
        for r, rec in enumerate(report.per_replication):
            est = rec[name].coefficients_original
            for j in cols:
                lines.append(f"{name},{r},b{j},{est[j - 1]:.17g}")
    return "\n".join(lines) + "\n"


def gr2_csv(report: SimulationReport) -> str:
    """Per-replication GR^2 values (histogram data)."""
    lines = ["estimator,replication,gr2"]
    for name in report.estimators:
        for r, rec in enumerate(report.per_replication):
            lines.append(f"{name},{r},{rec[name].metrics.gr2:.17g}")
    return "\n".join(lines) + "\n"


def study_manifest(report: SimulationReport) -> str:
    return json.dumps(
        {
            "config": report.config.to_dict(),
            "estimators": list(report.estimators),
            "n_failed": report.n_failed,
            "seed_rule": "SeedSequence([root, replication, tag]) per stream",
        },
        indent=2,
    )


# ---------------------------------------------------------------------------
# Property studies
# ---------------------------------------------------------------------------

def bound_coverage_study(cfg: SimConfig, bound: str = "thm21", varpi: float = 0.5,
                         reps: int = 500) -> float:
    """Fraction of replications whose test error respects the computed bound.

    Per replication: split the standardized sample, fit OLS on the training
    part, build the bound from training-side quantities only (plug-in
    variance of the squared-residual losses, or the unbiased residual
    variance for the Gaussian least-squares bound), and check the held-out
    error against it.  The held-out part is mapped through the training
    transform (not re-standardized on itself): the bound guarantees compare
    errors of one estimate on a common population, and an independently
    rescaled test part breaks that premise by an O(1/n_s) scale mismatch
    that dominates when the fit is tight.
    """
    if bound not in ("thm21", "lemma31"):
        raise ValueError("bound must be 'thm21' or 'lemma31'")
    hits = 0
    for rep in range(reps):
        raw, _ = generate_dgp(cfg, child_seed(cfg.root_seed, rep, "coverage"))
        data_std = standardize(raw)
        split = split_validation(data_std, cfg.ratio,
                                 child_seed(cfg.root_seed, rep, "coverage-split"))
        test = transform_like(split.train, data_std.subset(np.array(split.test_rows)))
        ols = fit_ols(split.train)
        e_t = split.train.y - split.train.x @ ols.b
        ete = float(e_t @ e_t / split.train.n)
        ege = metrics.ege(ols, test)
        n_t, n_s, p = split.train.n, test.n, split.train.p
        if bound == "thm21":
            tail = bounds.estimate_tail(e_t**2, "light")
            rep_bound = bounds.ege_bound_validation(
                bounds.BoundInputs(n_t=n_t, n_s=n_s, h=p, varpi=varpi,
                                   tail=tail, ete=ete)
            )
        else:
            sigma2_hat = float(e_t @ e_t / (n_t - p))
            rep_bound = bounds.ols_ege_bound(ete, n_t, n_s, p, varpi, sigma2_hat)
        # 1e-15 absorbs rounding when both sides are degenerate (sigma2 ~ 0);
        # errors live on the standardized scale, so this is machine noise
        if ege <= rep_bound.bound_value + 1e-15:
            hits += 1
    return hits / reps


def population_error_std(cfg: SimConfig) -> float:
    """Population error of the true model in standardized-outcome units.

    var(y) = 0.1 ||beta||^2 + 0.9 (sum beta)^2 + sigma2 under the
    equicorrelated one-factor design with rho = 0.9; generally
    (1-rho)||beta||^2 + rho (sum beta)^2 + sigma2.
    """
    beta = cfg.beta()
    var_y = ((1.0 - cfg.rho_x) * float(beta @ beta)
             + cfg.rho_x * float(beta.sum()) ** 2 + cfg.sigma2)
    return cfg.sigma2 / var_y


def k_tradeoff_study(cfg: SimConfig, K_list, outer_reps: int = 100) -> dict:
    """Mean and variance of the K-round averaged CV errors of OLS.

    Each outer replication draws a fresh sample and fresh fold assignment, so
    the reported variance includes both sampling and fold (sub-sampling)
    randomness.  Every fold part is standardized on its own sample (the
    splitting step of the selection algorithm taken literally); that makes
    the per-round test error noisier as folds shrink, which is the
    volatility side of the fold-count trade-off.  Folds too small to
    standardize (under 2 rows, e.g. K = n) fall back to the training
    transform.  Returns {K: {mean_cv_ege, var_cv_ege, mean_cv_ete}}.
    """
    out = {}
    for K in K_list:
        eges, etes = [], []
        for rep in range(outer_reps):
            raw, _ = generate_dgp(cfg, child_seed(cfg.root_seed, "ktrade", K, rep))
            data_std = standardize(raw)
            folds = make_folds(data_std, K,
                               child_seed(cfg.root_seed, "ktrade-folds", K, rep))
            round_ege, round_ete = [], []
            for q in range(K):
                test_rows = np.asarray(folds.folds[q], dtype=np.int64)
                mask = np.ones(data_std.n, dtype=bool)
                mask[test_rows] = False
                train_q = standardize(data_std.subset(np.flatnonzero(mask)),
                                      on_constant="center")
                test_part = data_std.subset(test_rows)
                if test_part.n >= 2:
                    test_q = standardize(test_part, on_constant="center")
                else:
                    test_q = transform_like(train_q, test_part)
                ols = fit_ols(train_q)
                round_ete.append(metrics.ete(ols, train_q))
                round_ege.append(metrics.ege(ols, test_q))
            eges.append(float(np.mean(round_ege)))
            etes.append(float(np.mean(round_ete)))
        out[K] = {
            "mean_cv_ege": float(np.mean(eges)),
            "var_cv_ege": float(np.var(eges, ddof=1)),
            "mean_cv_ete": float(np.mean(etes)),
        }
    return out


def consistency_study(base_cfg: SimConfig, n_list, reps: int = 30) -> dict:
    """Mean L2 distance of the tuned estimate to the truth, per sample size."""
    out = {}
    for n in n_list:
        cfg = replace(base_cfg, n=int(n))
        biases = []
        for rep in range(reps):
            raw, beta = generate_dgp(cfg, child_seed(cfg.root_seed, "consist", n, rep))
            data_std = standardize(raw)
            coef, train_ds, _, _ = _fit_one_estimator("lasso", data_std, cfg, rep)
            slopes, _ = to_original_coefficients(coef.b, train_ds)
            biases.append(float(np.linalg.norm(slopes - beta)))
        out[int(n)] = float(np.mean(biases))
    return out


def prop31_check(cfg: SimConfig, candidates, n_large: int = 10_000, seed: int = 0) -> int:
    """Index of the candidate coefficient vector with minimal fresh-sample eGE.

    Candidates are original-unit vectors and must include the true beta.
    """
    big = replace(cfg, n=int(n_large))
    sample, _ = generate_dgp(big, child_seed(cfg.root_seed, "prop31", seed))
    eges = []
    for cand in candidates:
        c = np.asarray(cand, dtype=float)
        r = sample.y - sample.x @ c
        eges.append(float(r @ r / sample.n))
    return int(np.argmin(eges))
