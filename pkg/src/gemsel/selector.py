"""Penalty-path model selection by generalization-error minimization.

Sweeps a decreasing lambda grid, fits the penalized estimator on training
data, scores every candidate by its error on held-out data, and returns the
minimizer.  Held-out scoring is either a single validation split or K-fold
cross-validation (per-fold errors averaged).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import metrics
from .data import Dataset, FoldSet, SplitPair, cv_round, make_folds, split_validation, standardize
from .errors import AllFitsFailed, NoConvergence, Singular, Underdetermined, ZeroTSS
from .estimators import Coefficients, fit_bridge, fit_lasso, fit_ols, fit_ridge, lambda_max_lasso

_SOLVER_ERRORS = (Singular, Underdetermined, NoConvergence, np.linalg.LinAlgError)


@dataclass(frozen=True)
class LambdaGrid:
    """Strictly decreasing candidate penalties, from full shrinkage to ~0."""

    values: np.ndarray
    lambda_max: float
    n_points: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.size == 0:
            raise ValueError("empty grid")
        if np.any(np.diff(vals) >= 0):
            raise ValueError("grid values must be strictly decreasing")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class SelectionMode:
    kind: str  # "validation" or "cv"
    seed: int
    ratio: float = 0.0
    K: int = 0


@dataclass(frozen=True)
class FitResult:
    """One path entry: penalty, coefficients, and its errors.

    Under cross-validation ``ete``/``ege`` are K-round averages and
    ``coefficients`` is the full-sample refit at this penalty.
    """

    lam: float
    coefficients: Coefficients | None
    ete: float
    ege: float
    failed: bool = False
    error: str = ""

    @property
    def l1_norm(self) -> float:
        return self.coefficients.l1 if self.coefficients is not None else float("nan")

    @property
    def nnz(self) -> int:
        return self.coefficients.nnz if self.coefficients is not None else -1


@dataclass(frozen=True)
class SelectionReport:
    path: tuple
    best: FitResult
    mode: SelectionMode
    gr2_of_best: float
    gamma: float
    data: Dataset
    split: SplitPair | None = None
    folds: FoldSet | None = None
    round_best: tuple = ()


def lambda_grid(train: Dataset, n_points: int = 100, min_ratio: float = 1e-4) -> LambdaGrid:
    """Log-spaced grid from lambda_max down to min_ratio * lambda_max.

    lambda_max = max_j |(2/n) x_j' y| is the smallest penalty with an all-zero
    lasso fit on ``train``.  An exact 0 is appended when n > p (where the
    unpenalized fit is well defined).  If the outcome is orthogonal to every
    column the grid degenerates to {0}.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if not 0.0 < min_ratio < 1.0:
        raise ValueError("min_ratio must be in (0, 1)")
    lmax = lambda_max_lasso(train)
    if lmax == 0.0:
        return LambdaGrid(values=np.array([0.0]), lambda_max=0.0, n_points=1)
    vals = np.geomspace(lmax, lmax * min_ratio, n_points)
    if train.n > train.p:
        vals = np.append(vals, 0.0)
    return LambdaGrid(values=vals, lambda_max=lmax, n_points=len(vals))


def _fit_at(train: Dataset, gamma: float, lam: float, warm, tol: float, max_iters: int):
    if lam == 0.0:
        # the unpenalized candidate; raises Underdetermined when n <= p, which
        # selection records as a failed path entry
        return fit_ols(train)
    if gamma == 1.0:
        return fit_lasso(train, lam, tol=tol, max_iters=max_iters, b0=warm)
    if gamma == 2.0:
        return fit_ridge(train, lam)
    return fit_bridge(train, lam, gamma, tol=max(tol, 1e-8), max_iters=max_iters, b0=warm)


def _pick_best(path):
    best = None
    for entry in path:  # grid is decreasing, so '<' keeps the largest lambda on ties
        if entry.failed:
            continue
        if best is None or entry.ege < best.ege:
            best = entry
    if best is None:
        raise AllFitsFailed("every penalty on the grid failed to fit")
    return best


def select_validation(
    data: Dataset,
    gamma: float,
    grid: LambdaGrid,
    ratio: float = 0.8,
    seed: int = 0,
    tol: float = 1e-8,
    max_iters: int = 100_000,
) -> SelectionReport:
    """Tune the penalty on a single train/test split.

    For each lambda the estimator is fit on the (re-standardized) training
    part and scored on the test part; the report's best entry is the
    smallest-eGE candidate, ties broken toward the larger (sparser) penalty.
    Failed fits are recorded and skipped.
    """
    data_std = data if data.standardized else standardize(data)
    split = split_validation(data_std, ratio, seed)
    path = []
    warm = None
    for lam in grid.values:
        try:
            coef = _fit_at(split.train, gamma, float(lam), warm, tol, max_iters)
        except _SOLVER_ERRORS as exc:
            path.append(
                FitResult(lam=float(lam), coefficients=None, ete=float("nan"),
                          ege=float("nan"), failed=True, error=repr(exc))
            )
            continue
        warm = coef.b
        path.append(
            FitResult(
                lam=float(lam),
                coefficients=coef,
                ete=metrics.ete(coef, split.train),
                ege=metrics.ege(coef, split.test),
            )
        )
    best = _pick_best(path)
    g = metrics.gr2(best.coefficients, split.train, split.test).gr2
    return SelectionReport(
        path=tuple(path),
        best=best,
        mode=SelectionMode(kind="validation", seed=seed, ratio=ratio),
        gr2_of_best=g,
        gamma=gamma,
        data=data_std,
        split=split,
    )


def select_cv(
    data: Dataset,
    gamma: float,
    grid: LambdaGrid,
    K: int,
    seed: int = 0,
    tol: float = 1e-8,
    max_iters: int = 100_000,
) -> SelectionReport:
    """Tune the penalty by K-fold cross-validation.

    Per lambda, eTE and eGE are the K-round averages; the reported
    coefficients are refit on the full standardized sample at each lambda
    (the per-round fits at the winning penalty are kept in ``round_best``).
    """
    data_std = data if data.standardized else standardize(data)
    folds = make_folds(data_std, K, seed)
    rounds = [cv_round(data_std, folds, q) for q in range(K)]

    path = []
    round_coef_by_lambda = {}
    warm_rounds = [None] * K
    warm_full = None
    for lam in grid.values:
        lam = float(lam)
        etes, eges, coefs = [], [], []
        err = ""
        try:
            for q, (train_q, test_q) in enumerate(rounds):
                coef_q = _fit_at(train_q, gamma, lam, warm_rounds[q], tol, max_iters)
                warm_rounds[q] = coef_q.b
                etes.append(metrics.ete(coef_q, train_q))
                eges.append(metrics.ege(coef_q, test_q))
                coefs.append(coef_q)
            full = _fit_at(data_std, gamma, lam, warm_full, tol, max_iters)
            warm_full = full.b
        except _SOLVER_ERRORS as exc:
            path.append(
                FitResult(lam=lam, coefficients=None, ete=float("nan"),
                          ege=float("nan"), failed=True, error=repr(exc))
            )
            continue
        round_coef_by_lambda[lam] = tuple(coefs)
        path.append(
            FitResult(
                lam=lam,
                coefficients=full,
                ete=float(np.mean(etes)),
                ege=float(np.mean(eges)),
            )
        )
    best = _pick_best(path)
    round_best = round_coef_by_lambda[best.lam]
    gr2_vals = []
    for coef_q, (train_q, test_q) in zip(round_best, rounds):
        try:
            gr2_vals.append(metrics.gr2(coef_q, train_q, test_q).gr2)
        except ZeroTSS:
            pass  # single-row folds have no test-side R^2
    g = float(np.mean(gr2_vals)) if gr2_vals else float("nan")
    return SelectionReport(
        path=tuple(path),
        best=best,
        mode=SelectionMode(kind="cv", seed=seed, K=K),
        gr2_of_best=g,
        gamma=gamma,
        data=data_std,
        folds=folds,
        round_best=round_best,
    )


def report_to_dict(report: SelectionReport) -> dict:
    """Full-path JSON form of a report."""
    return {
        "mode": {
            "kind": report.mode.kind,
            "seed": report.mode.seed,
            "ratio": report.mode.ratio,
            "K": report.mode.K,
        },
        "gamma": report.gamma,
        "best_lambda": report.best.lam,
        "best_ege": report.best.ege,
        "gr2_of_best": report.gr2_of_best,
        "best_coefficients": [float(v) for v in report.best.coefficients.b],
        "path": [
            {
                "lambda": e.lam,
                "ete": e.ete,
                "ege": e.ege,
                "l1_norm": e.l1_norm,
                "nnz": e.nnz,
                "failed": e.failed,
                "error": e.error,
                "coefficients": None if e.coefficients is None
                else [float(v) for v in e.coefficients.b],
            }
            for e in report.path
        ],
        "data": report.data.metadata(),
    }


def report_path_csv(report: SelectionReport) -> str:
    """One row per lambda: lambda, eTE, eGE, l1 norm, nonzero count."""
    lines = ["lambda,ete,ege,l1_norm,nnz"]
    for e in report.path:
        lines.append(f"{e.lam:.17g},{e.ete:.17g},{e.ege:.17g},{e.l1_norm:.17g},{e.nnz}")
    return "\n".join(lines) + "\n"


def report_to_json(report: SelectionReport, indent: int | None = None) -> str:
    return json.dumps(report_to_dict(report), indent=indent)
