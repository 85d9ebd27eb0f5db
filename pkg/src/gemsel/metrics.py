"""Error functionals and goodness-of-fit measures.

Everything uses the 1/n normalization: the training error of a fit is
(1/n_t) ||y_t - X_t b||^2, the generalization error is the same functional on
held-out data, and TSS is (1/n) sum (y - ybar)^2 so that R^2 = 1 - err/TSS is
scale-consistent with the error functionals.  On standardized data TSS = 1
exactly, so a zero fit has error 1 and R^2 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import nan

import numpy as np

from .data import Dataset
from .errors import DimensionMismatch, ZeroTSS
from .estimators import Coefficients

TABLE_FIELDS = ("bias_l2", "bias_l1", "ete", "ege", "r2_t", "r2_s", "gr2")


@dataclass(frozen=True)
class FitMetrics:
    """Joint in-sample/out-of-sample summary of one fit.

    ``gr2`` is exactly ``r2_s * r2_t``.  Bias fields are NaN unless the true
    coefficient vector is known (simulation studies).
    """

    ete: float
    ege: float
    r2_t: float
    r2_s: float
    gr2: float
    l2_bias: float = nan
    l1_bias: float = nan

    def row(self) -> dict:
        return {
            "bias_l2": self.l2_bias,
            "bias_l1": self.l1_bias,
            "ete": self.ete,
            "ege": self.ege,
            "r2_t": self.r2_t,
            "r2_s": self.r2_s,
            "gr2": self.gr2,
        }


def _mean_sq_residual(b: Coefficients, data: Dataset) -> float:
    bv = np.asarray(b.b, dtype=float)
    if bv.shape[0] != data.p:
        raise DimensionMismatch(
            f"coefficients have {bv.shape[0]} entries, data has p = {data.p}"
        )
    r = data.y - (data.x @ bv + b.intercept)
    return float(r @ r / data.n)


def ete(b: Coefficients, train: Dataset) -> float:
    """Empirical training error (1/n_t) ||y_t - X_t b||^2."""
    return _mean_sq_residual(b, train)


def ege(b: Coefficients, test: Dataset) -> float:
    """Empirical generalization error (1/n_s) ||y_s - X_s b||^2."""
    return _mean_sq_residual(b, test)


def tss(data: Dataset) -> float:
    """(1/n) sum (y - ybar)^2; raises ZeroTSS for a constant outcome."""
    dev = data.y - data.y.mean()
    val = float(dev @ dev / data.n)
    if val <= 0.0:
        raise ZeroTSS("outcome has zero total sum of squares")
    return val


def r2(b: Coefficients, data: Dataset) -> float:
    """1 - err/TSS; can be negative for fits worse than the mean."""
    return 1.0 - _mean_sq_residual(b, data) / tss(data)


def gr2(b: Coefficients, train: Dataset, test: Dataset) -> FitMetrics:
    """All fit metrics for one (train, test) pair; gr2 = r2_s * r2_t."""
    e_t = ete(b, train)
    e_s = ege(b, test)
    r_t = 1.0 - e_t / tss(train)
    r_s = 1.0 - e_s / tss(test)
    return FitMetrics(ete=e_t, ege=e_s, r2_t=r_t, r2_s=r_s, gr2=r_s * r_t)


def l2_bias(b: Coefficients, beta_true) -> float:
    """||b - beta||_2 against a known true coefficient vector."""
    beta = np.asarray(beta_true, dtype=float)
    bv = np.asarray(b.b, dtype=float)
    if bv.shape != beta.shape:
        raise DimensionMismatch(f"lengths differ: {bv.shape[0]} vs {beta.shape[0]}")
    return float(np.sqrt(np.sum((bv - beta) ** 2)))


def l1_bias(b: Coefficients, beta_true) -> float:
    beta = np.asarray(beta_true, dtype=float)
    bv = np.asarray(b.b, dtype=float)
    if bv.shape != beta.shape:
        raise DimensionMismatch(f"lengths differ: {bv.shape[0]} vs {beta.shape[0]}")
    return float(np.sum(np.abs(bv - beta)))
