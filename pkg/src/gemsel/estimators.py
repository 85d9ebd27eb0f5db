"""Regression solvers: OLS, ridge, lasso, bridge, and forward stagewise.

All solvers minimize variants of

    (1/n) * ||y - X b||_2^2  +  lam * sum_j |b_j|^gamma

on a Dataset (usually standardized, but nothing here requires it).  Lasso
uses cyclic coordinate descent with exact soft-threshold updates; bridge uses
damped Newton for gamma >= 2 and exact-scalar coordinate descent for
1 < gamma < 2, where the second derivative of |b|^gamma blows up at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import Dataset
from .errors import DimensionMismatch, NoConvergence, Singular, Underdetermined

# Relative eigenvalue threshold below which X'X is treated as singular.
SINGULAR_RTOL = 1e-10


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty family (gamma >= 1) and strength (lambda >= 0)."""

    gamma: float
    lam: float

    def __post_init__(self):
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1 (non-convex penalties unsupported)")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")

    @classmethod
    def lasso(cls, lam: float) -> "PenaltySpec":
        return cls(gamma=1.0, lam=lam)

    @classmethod
    def ridge(cls, lam: float) -> "PenaltySpec":
        return cls(gamma=2.0, lam=lam)

    @classmethod
    def bridge(cls, gamma: float, lam: float) -> "PenaltySpec":
        return cls(gamma=gamma, lam=lam)


@dataclass(frozen=True)
class Coefficients:
    """Fit result in the units of the dataset it was trained on."""

    b: np.ndarray
    intercept: float = 0.0
    solver_iters: int = 0
    converged: bool = True

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        if not np.all(np.isfinite(b)):
            raise ValueError("non-finite coefficients")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @property
    def l1(self) -> float:
        return float(np.sum(np.abs(self.b)))

    @property
    def l2(self) -> float:
        return float(np.sqrt(np.sum(self.b**2)))

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.b))


@dataclass(frozen=True)
class FsrConfig:
    """Forward stagewise hyperparameters (coefficient increment per step)."""

    step: float
    max_iters: int = 1_000_000
    corr_tol: float = 0.0

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be > 0")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.corr_tol <= 0:
            object.__setattr__(self, "corr_tol", 10.0 * self.step)


def gram(train: Dataset):
    """(1/n) X'X and (1/n) X'y for the normalized objectives.

    Cached on the dataset (its arrays are immutable), so penalty paths pay
    for the Gram product once instead of once per lambda.
    """
    cached = getattr(train, "_gram_cache", None)
    if cached is None:
        n = train.n
        cached = (train.x.T @ train.x / n, train.x.T @ train.y / n)
        object.__setattr__(train, "_gram_cache", cached)
    return cached


def _gram_eigh(train: Dataset):
    """Eigendecomposition of the normalized Gram, cached like gram()."""
    cached = getattr(train, "_gram_eigh_cache", None)
    if cached is None:
        G, _ = gram(train)
        w, V = np.linalg.eigh((G + G.T) / 2.0)
        cached = (w, V)
        object.__setattr__(train, "_gram_eigh_cache", cached)
    return cached


def lambda_max_lasso(train: Dataset) -> float:
    """Smallest lam with all-zero lasso solution: max_j |(2/n) x_j' y|."""
    return float(2.0 * np.max(np.abs(train.x.T @ train.y)) / train.n)


def fit_ols(train: Dataset) -> Coefficients:
    """Least squares via a rank-revealing eigendecomposition of X'X.

    Requires n > p; raises Singular when the smallest eigenvalue of X'X
    falls below SINGULAR_RTOL * trace / p.
    """
    if train.n <= train.p:
        raise Underdetermined(f"n = {train.n} <= p = {train.p}; use fit_fsr")
    w, V = _gram_eigh(train)  # eigenvalues of X'X are n * w
    thresh = SINGULAR_RTOL * np.sum(w) / train.p
    if w[0] <= thresh:
        raise Singular(
            f"min eigenvalue {train.n * w[0]:.3e} below threshold {train.n * thresh:.3e}"
        )
    _, c = gram(train)
    b = V @ ((V.T @ c) / w)
    return Coefficients(b=b, solver_iters=1, converged=True)


def fit_ridge(train: Dataset, lam: float, b0=None) -> Coefficients:
    """Unique minimizer of (1/n)||y - Xb||^2 + lam * ||b||_2^2.

    Solves ((1/n) X'X + lam I) b = (1/n) X'y via the cached Gram
    eigendecomposition (so a whole penalty path costs one factorization).
    lam = 0 falls back to the OLS singularity handling.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if lam == 0.0:
        if train.n <= train.p:
            raise Singular("lambda = 0 with n <= p is rank deficient")
        return Coefficients(b=fit_ols(train).b, solver_iters=1, converged=True)
    w, V = _gram_eigh(train)
    _, c = gram(train)
    b = V @ ((V.T @ c) / (w + lam))
    return Coefficients(b=b, solver_iters=1, converged=True)


def fit_lasso(
    train: Dataset,
    lam: float,
    tol: float = 1e-8,
    max_iters: int = 100_000,
    b0=None,
) -> Coefficients:
    """Coordinate-descent lasso; convergence is max |coefficient change| < tol
    over a full sweep.  ``max_iters`` counts sweeps.  ``b0`` warm-starts the
    solve (used along penalty paths)."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    G, c = gram(train)
    b = np.zeros(train.p) if b0 is None else np.array(b0, dtype=float)
    q = G @ b if b0 is not None else np.zeros(train.p)
    sweeps, delta = _kernels.lasso_cd(G, c, lam / 2.0, b, q, tol, max_iters)
    if delta > tol:
        raise NoConvergence(sweeps, delta)
    return Coefficients(b=b, solver_iters=sweeps, converged=True)


def kkt_violation(b: np.ndarray, train: Dataset, lam: float) -> float:
    """Largest violation of the lasso subgradient conditions at ``b``.

    With g = (2/n) X'(y - Xb): requires |g_j| <= lam where b_j = 0 and
    g_j = lam * sign(b_j) elsewhere.  Returns the max excess over all j
    (0 means the conditions hold exactly).
    """
    b = np.asarray(b, dtype=float)
    g = 2.0 * train.x.T @ (train.y - train.x @ b) / train.n
    active = b != 0.0
    viol = np.abs(g) - lam
    viol[~active] = np.maximum(viol[~active], 0.0)
    viol[active] = np.abs(g[active] - lam * np.sign(b[active]))
    return float(np.max(viol)) if viol.size else 0.0


def _bridge_objective(G, c, yty_n, lam, gamma, b):
    return float(yty_n - 2.0 * b @ c + b @ (G @ b) + lam * np.sum(np.abs(b) ** gamma))


def _bridge_scalar_min(a: float, rho: float, lam: float, gamma: float) -> float:
    """argmin over b of a b^2 - 2 rho b + lam |b|^gamma, for gamma in (1, 2).

    The minimizer shares rho's sign; on that side the derivative
    2 a b - 2 |rho| + lam gamma b^(gamma-1) is continuous and strictly
    increasing, so a bisection on (0, |rho|/a] is exact and safe.
    """
    if rho == 0.0 or a <= 0.0:
        return 0.0
    r = abs(rho)
    lo, hi = 0.0, r / a
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        d = 2.0 * a * mid - 2.0 * r + lam * gamma * mid ** (gamma - 1.0)
        if d < 0.0:
            lo = mid
        else:
            hi = mid
    return math.copysign(0.5 * (lo + hi), rho)


def fit_bridge(
    train: Dataset,
    lam: float,
    gamma: float,
    tol: float = 1e-8,
    max_iters: int = 20_000,
    b0=None,
) -> Coefficients:
    """Bridge regression for gamma > 1 (smooth, strictly convex for lam > 0).

    gamma >= 2: damped Newton with Armijo backtracking.
    1 < gamma < 2: cyclic coordinate descent with exact scalar minimization
    by safeguarded bisection (the Hessian of |b|^gamma is unbounded at 0, so
    Newton steps are unreliable there, and plain gradient descent stalls on
    the exploding local curvature).
    Convergence: sup-norm of the objective gradient <= tol.
    """
    if gamma <= 1:
        raise ValueError("bridge requires gamma > 1; use fit_lasso for gamma = 1")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if lam == 0.0 and train.n > train.p:
        return fit_ols(train)
    G, c = gram(train)
    yty_n = float(train.y @ train.y) / train.n
    if b0 is not None:
        b = np.array(b0, dtype=float)
    elif lam > 0 and gamma >= 2:
        b = fit_ridge(train, lam).b.copy()
    else:
        b = np.zeros(train.p)

    def grad(v):
        return 2.0 * (G @ v - c) + lam * gamma * np.sign(v) * np.abs(v) ** (gamma - 1.0)

    if gamma < 2.0:
        q = G @ b
        for it in range(1, max_iters + 1):
            for j in range(train.p):
                rho = c[j] - q[j] + G[j, j] * b[j]
                new = _bridge_scalar_min(G[j, j], rho, lam, gamma)
                d = new - b[j]
                if d != 0.0:
                    b[j] = new
                    q += G[:, j] * d
            gnorm = float(np.max(np.abs(grad(b))))
            if gnorm <= tol:
                return Coefficients(b=b, solver_iters=it, converged=True)
        raise NoConvergence(max_iters, gnorm)

    f = _bridge_objective(G, c, yty_n, lam, gamma, b)
    for it in range(1, max_iters + 1):
        g = grad(b)
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        if gnorm <= tol:
            return Coefficients(b=b, solver_iters=it, converged=True)
        H = 2.0 * G + lam * gamma * (gamma - 1.0) * np.diag(
            np.abs(b) ** (gamma - 2.0) if gamma != 2.0 else np.ones(train.p)
        )
        try:
            d = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            d = -g
        if not np.all(np.isfinite(d)) or float(d @ g) >= 0:
            d = -g
        t = 1.0
        slope = float(g @ d)
        for _ in range(60):
            cand = b + t * d
            f_cand = _bridge_objective(G, c, yty_n, lam, gamma, cand)
            if f_cand <= f + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            cand = b  # no certifiable descent step
            f_cand = f
        if np.array_equal(cand, b):
            # objective improvements are below float resolution; polish with
            # the raw Newton step as long as it shrinks the gradient
            cand = b + d
            if float(np.max(np.abs(grad(cand)))) < gnorm:
                b = cand
                f = _bridge_objective(G, c, yty_n, lam, gamma, b)
                continue
            raise NoConvergence(it, gnorm)
        b = cand
        f = f_cand
    raise NoConvergence(max_iters, gnorm)


def default_fsr_config(train: Dataset) -> FsrConfig:
    """Defaults: step = 0.001 * max_j |(1/n) x_j' y|, corr_tol = 10 * step.

    These are configuration, not contract; they are sized so the p > n
    simulation regimes terminate in seconds.
    """
    cmax = float(np.max(np.abs(train.x.T @ train.y)) / train.n)
    step = 1e-3 * cmax if cmax > 0 else 1e-3
    return FsrConfig(step=step, max_iters=1_000_000, corr_tol=10.0 * step)


def fit_fsr(train: Dataset, cfg: FsrConfig | None = None) -> Coefficients:
    """Forward stagewise regression; works for p > n.

    Never raises: if max_iters is exhausted the result carries
    converged=False.
    """
    if cfg is None:
        cfg = default_fsr_config(train)
    G, c = gram(train)
    b, iters, converged = _kernels.fsr_steps(
        G, c, cfg.step, cfg.corr_tol, cfg.max_iters
    )
    return Coefficients(b=b, solver_iters=iters, converged=bool(converged))


def penalized_objective(b: Coefficients, data: Dataset, spec: PenaltySpec) -> float:
    """(1/n) ||y - (Xb + intercept)||^2 + lam * sum |b_j|^gamma."""
    bv = np.asarray(b.b, dtype=float)
    if bv.shape[0] != data.p:
        raise DimensionMismatch(f"coefficients have {bv.shape[0]} entries, data has p = {data.p}")
    r = data.y - (data.x @ bv + b.intercept)
    return float(r @ r / data.n + spec.lam * np.sum(np.abs(bv) ** spec.gamma))
