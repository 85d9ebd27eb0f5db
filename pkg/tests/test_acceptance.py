"""Acceptance suite: every criterion prints one PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they
complete.  The replication studies (criterion 4 in particular) take a few
minutes; everything is seeded and deterministic.
"""

import math
import time
import warnings

import numpy as np
import pytest
from scipy.stats import spearmanr

from gemsel import (
    Dataset,
    SimConfig,
    bound_coverage_study,
    consistency_study,
    fit_bridge,
    fit_lasso,
    fit_ols,
    fit_ridge,
    gr2,
    k_tradeoff_study,
    kkt_violation,
    lambda_grid,
    lambda_max_lasso,
    min_eigenvalue,
    optimal_k,
    penalized_objective,
    prop31_check,
    restricted_eigenvalue,
    run_study,
    standardize,
    table2_config,
)
from gemsel.estimators import Coefficients, PenaltySpec
from gemsel.simulate import population_error_std
from oracles import oracle_objective_min, oracle_ridge_closed_form

warnings.filterwarnings("ignore", category=UserWarning)


def criterion(num, description, checks):
    """checks: list of (label, bool).  Prints the one-line verdict."""
    failed = [label for label, ok in checks if not ok]
    status = "PASS" if not failed else "FAIL"
    print(f"\nACCEPTANCE {num}: {status} - {description}"
          + (f" [failed: {', '.join(failed)}]" if failed else ""))
    assert not failed, f"criterion {num}: {failed}"


def standardized_instance(rng, n, p, noise=0.5):
    x = rng.standard_normal((n, p))
    beta = rng.standard_normal(p)
    y = x @ beta + noise * rng.standard_normal(n)
    return standardize(Dataset.from_arrays(y, x))


def test_criterion_1_solver_oracle_equivalence():
    rng = np.random.default_rng(101)
    t0 = time.time()
    checks = []
    for i in range(50):
        n = int(rng.integers(10, 21))
        p = int(rng.integers(1, 4))
        ds = standardized_instance(rng, n, p)
        lam = float(rng.uniform(0.05, 0.5))
        kind = ("lasso", "ridge", "bridge")[i % 3]
        if kind == "lasso":
            coef = fit_lasso(ds, lam, tol=1e-10)
            got = penalized_objective(coef, ds, PenaltySpec.lasso(lam))
            want, _ = oracle_objective_min(ds, lam, 1.0, coarse=41 if p == 3 else 121)
        elif kind == "ridge":
            coef = fit_ridge(ds, lam)
            got = penalized_objective(coef, ds, PenaltySpec.ridge(lam))
            b = oracle_ridge_closed_form(ds, lam)
            want = penalized_objective(Coefficients(b=b), ds, PenaltySpec.ridge(lam))
        else:
            gamma = float(rng.choice([1.5, 2.5, 3.0, 4.0]))
            # gradient tol 1e-6 suffices: the objective gap is bounded by
            # ||g||^2 / (2 lambda_min(2G)) ~ 1e-12 on these instances, far
            # inside the 1e-6 objective tolerance being asserted
            coef = fit_bridge(ds, lam, gamma, tol=1e-6 if gamma < 2 else 1e-9,
                              max_iters=100_000)
            got = penalized_objective(coef, ds, PenaltySpec.bridge(gamma, lam))
            want, _ = oracle_objective_min(ds, lam, gamma, coarse=41 if p == 3 else 121)
        checks.append((f"objective[{i}:{kind}]", got <= want + 1e-6))
        if n > p:
            b_ols = fit_ols(ds).b
            for name, b in (("ridge0", fit_ridge(ds, 0.0).b),
                            ("lasso0", fit_lasso(ds, 0.0, tol=1e-12).b),
                            ("bridge0", fit_bridge(ds, 0.0, 2.5).b)):
                checks.append((f"{name}[{i}]", np.abs(b - b_ols).max() < 1e-6))
    elapsed = time.time() - t0
    checks.append(("runtime<10s", elapsed < 10.0))
    criterion(1, f"solver objectives within 1e-6 of grid/closed-form oracles "
                 f"on 50 instances, lambda=0 reductions match OLS ({elapsed:.1f}s)",
              checks)


def test_criterion_2_kkt_and_shrinkage():
    rng = np.random.default_rng(202)
    t0 = time.time()
    checks = []
    for i in range(4):
        ds = standardized_instance(rng, 40, 8, noise=1.0)
        grid = lambda_grid(ds, 25, 1e-3)
        norms = []
        for lam in grid.values:
            if lam == 0.0:
                continue
            coef = fit_lasso(ds, float(lam), tol=1e-10)
            checks.append((f"kkt[{i},{lam:.3g}]",
                           kkt_violation(coef.b, ds, float(lam)) < 1e-6))
            norms.append(coef.l1)
        increasing_lam = norms[::-1]  # grid is decreasing
        checks.append((f"l1-monotone[{i}]",
                       all(b <= a + 1e-7 for a, b in zip(increasing_lam, increasing_lam[1:]))))
        lmax = lambda_max_lasso(ds)
        checks.append((f"full-shrinkage[{i}]",
                       np.all(fit_lasso(ds, lmax).b == 0.0)
                       and np.all(fit_lasso(ds, 1.7 * lmax).b == 0.0)))
    elapsed = time.time() - t0
    checks.append(("runtime<5s", elapsed < 5.0))
    criterion(2, f"lasso KKT holds on every path point, ||b||_1 monotone, "
                 f"exact full shrinkage at lambda_max ({elapsed:.1f}s)", checks)


def test_criterion_3_gr2_identity_and_standardization():
    rng = np.random.default_rng(303)
    checks = []
    for i in range(5):
        train = standardized_instance(rng, 30, 4)
        test = standardized_instance(rng, 20, 4)
        b = Coefficients(b=rng.standard_normal(4))
        m = gr2(b, train, test)
        checks.append((f"gr2-product[{i}]", m.gr2 == m.r2_s * m.r2_t))
        raw = Dataset.from_arrays(rng.normal(5, 9, 35), rng.normal(-3, 4, (35, 6)))
        ds = standardize(raw)
        cols = np.column_stack([ds.y, ds.x])
        checks.append((f"means[{i}]", np.abs(cols.mean(axis=0)).max() < 1e-10))
        checks.append((f"sds[{i}]", np.abs(cols.std(axis=0) - 1.0).max() < 1e-10))
    criterion(3, "GR^2 = R2_s * R2_t exactly; standardized columns have "
                 "mean 0 and sd 1 within 1e-10", checks)


# Reference values from the reproduced study (n = 250, 50 replications).
TABLE2 = {
    (200, 1): {"lasso_gr2": 0.9988, "ols_gr2": 0.9965, "lasso_ege": 1.1132},
    (500, 1): {"lasso_gr2": 0.9987, "lasso_ege": 1.1478},
    (200, 5): {"lasso_gr2": 0.9698, "ols_gr2": 0.9151, "lasso_ege": 27.8672},
    (500, 5): {"lasso_gr2": 0.9695, "lasso_ege": 28.5125},
}


def test_criterion_4_table2_reproduction():
    t0 = time.time()
    checks = []
    for (p, lab), want in TABLE2.items():
        rep = run_study(table2_config(p, lab, replications=50))
        lasso = rep.aggregates["lasso"]
        gr2_tol = 0.01 if p == 200 else 0.02
        checks.append((f"lasso_gr2[p{p},s{lab}]",
                       abs(lasso["gr2"] - want["lasso_gr2"]) <= gr2_tol))
        checks.append((f"lasso_ege[p{p},s{lab}]",
                       abs(lasso["ege"] - want["lasso_ege"]) <= 0.25 * want["lasso_ege"]))
        if p == 200:
            ols = rep.aggregates["ols"]
            checks.append((f"ols_gr2[p{p},s{lab}]",
                           abs(ols["gr2"] - want["ols_gr2"]) <= 0.01))
            if lab == 1:
                # reference values for this regime: OLS eGE 5.2109 (+-30%),
                # lasso training-side R^2 0.9994 (+-0.01)
                checks.append(("ols_ege[p200,s1]",
                               abs(ols["ege"] - 5.2109) <= 0.30 * 5.2109))
                checks.append(("lasso_r2t[p200,s1]",
                               abs(lasso["r2_t"] - 0.9994) <= 0.01))
            # null-coefficient shrinkage: lasso nulls stay closer to zero
            null_mean = {
                name: np.mean([np.mean(np.abs(r[name].coefficients_original[6:]))
                               for r in rep.per_replication])
                for name in ("lasso", "ols")
            }
            checks.append((f"null_shrinkage[p{p},s{lab}]",
                           null_mean["lasso"] < null_mean["ols"]))
        else:
            fsr = rep.aggregates["fsr"]
            checks.append((f"fsr_gr2[p{p},s{lab}]", fsr["gr2"] < 0.6))
            # the reference eGE ratios are ~743 (label 1) and ~37.6 (label 5);
            # thresholds sit the same relative margin (~7x) below each
            ratio_floor = 100.0 if lab == 1 else 5.0
            checks.append((f"ege_ratio[p{p},s{lab}]",
                           fsr["ege"] / lasso["ege"] > ratio_floor))
            dominance = sum(r["lasso"].metrics.ege < r["fsr"].metrics.ege
                            for r in rep.per_replication)
            checks.append((f"lasso_dominates[p{p},s{lab}]({dominance}/50)",
                           dominance >= 45))
    elapsed = time.time() - t0
    criterion(4, f"four-regime replication study matches the reference table "
                 f"({elapsed:.0f}s)", checks)


def test_criterion_5_bound_coverage():
    t0 = time.time()
    cfg = SimConfig(n=250, p=6, sigma2=1.0, root_seed=31415)
    reps = 500
    se3 = 3.0 * math.sqrt(0.25 / reps)
    checks = []
    for varpi in (0.5, 0.9):
        floor = varpi * (1.0 - 1.0 / 200)
        for bound in ("thm21", "lemma31"):
            cov = bound_coverage_study(cfg, bound, varpi, reps=reps)
            checks.append((f"{bound}@varpi={varpi}(cov={cov:.3f})",
                           cov >= floor - se3))
    elapsed = time.time() - t0
    checks.append(("runtime<120s", elapsed < 120.0))
    criterion(5, f"validation eGE bounds hold at their probability floors "
                 f"over {reps} replications ({elapsed:.0f}s)", checks)


def test_criterion_6_k_tradeoff_trends():
    t0 = time.time()
    cfg = SimConfig(n=250, p=20, sigma2=1.0, root_seed=11)
    K_list = [2, 5, 10, 25]
    out = k_tradeoff_study(cfg, K_list, outer_reps=100)
    proxy = population_error_std(cfg)
    variances = [out[K]["var_cv_ege"] for K in K_list]
    gaps = [abs(out[K]["mean_cv_ete"] - proxy) for K in K_list]
    rho_var = spearmanr(K_list, variances).statistic
    rho_gap = spearmanr(K_list, gaps).statistic
    elapsed = time.time() - t0
    criterion(6, f"CV eGE variance rises with K (rho={rho_var:+.2f}) while "
                 f"eTE bias falls (rho={rho_gap:+.2f}) ({elapsed:.0f}s)",
              [("var-increasing", rho_var > 0), ("bias-decreasing", rho_gap < 0)])


def test_criterion_7_consistency_trends():
    t0 = time.time()
    cfg6 = SimConfig(n=250, p=6, sigma2=1.0, root_seed=21)
    out6 = consistency_study(cfg6, [100, 250, 1000], reps=30)
    cfg500 = SimConfig(n=250, p=500, sigma2=1.0, root_seed=21,
                       estimator_set=("lasso",))
    out500 = consistency_study(cfg500, [250, 1000], reps=30)
    elapsed = time.time() - t0
    checks = [
        ("p6-decreasing", out6[100] > out6[250] > out6[1000]),
        ("p500-decreasing", out500[250] > out500[1000]),
    ]
    criterion(7, f"mean coefficient error strictly falls with n "
                 f"(p=6: {out6[100]:.3f}>{out6[250]:.3f}>{out6[1000]:.3f}; "
                 f"p=500: {out500[250]:.3f}>{out500[1000]:.3f}) ({elapsed:.0f}s)",
              checks)


def test_criterion_8_true_model_minimal_ege():
    t0 = time.time()
    base = SimConfig(n=250, p=6, sigma2=1.0)
    beta = base.beta()
    perturbations = [
        beta + np.r_[0.5, np.zeros(5)],
        beta + np.r_[np.zeros(5), 0.12],
        beta - np.r_[0.12, np.zeros(5)],
    ]
    assert all(np.linalg.norm(c - beta) >= 0.1 for c in perturbations)
    wins = 0
    for s in range(100):
        cfg = SimConfig(n=250, p=6, sigma2=1.0, root_seed=s)
        wins += prop31_check(cfg, [beta] + perturbations, n_large=10_000, seed=s) == 0
    elapsed = time.time() - t0
    criterion(8, f"true coefficients win the fresh-sample eGE contest in "
                 f"{wins}/100 seeds ({elapsed:.0f}s)", [("wins>=99", wins >= 99)])


def test_criterion_9_optimal_k_brute_force():
    n, h, sigma2, varpi = 250, 6, 1.0, 0.5
    k_star, curve = optimal_k(n, h, sigma2, varpi, (2, 25))
    # independent re-evaluation of the two-term objective
    best_k, best_val = None, float("inf")
    for K in range(2, 26):
        n_t = n * (K - 1) / K
        eps = (h * math.log(n_t / h) + h + math.log(n_t)) / n_t
        if eps >= 1.0:
            continue
        val = sigma2 / (1 - math.sqrt(eps)) + 2 * sigma2**2 / ((n / K) * math.sqrt(1 - varpi))
        if val < best_val:
            best_val, best_k = val, K
    bias = [c[1] for c in curve]
    var = [c[2] for c in curve]
    checks = [
        ("argmin-agrees", k_star == best_k),
        ("value-agrees", abs(dict((c[0], c[3]) for c in curve)[best_k] - best_val) < 1e-12),
        ("bias-nonincreasing", all(b <= a + 1e-15 for a, b in zip(bias, bias[1:]))),
        ("variance-increasing", all(b > a for a, b in zip(var, var[1:]))),
    ]
    criterion(9, f"optimal K = {k_star} agrees exactly with brute force; "
                 "terms monotone", checks)


def test_criterion_10_eigenvalue_checks():
    x22 = np.linalg.cholesky(np.array([[2.0, 1.0], [1.0, 2.0]])).T
    n = 30
    q, _ = np.linalg.qr(np.random.default_rng(7).standard_normal((n, 6)))
    ortho = q * math.sqrt(n)
    rng = np.random.default_rng(8)
    base = rng.standard_normal((25, 1))
    dup = np.column_stack([base, base, rng.standard_normal((25, 2))])
    re_ortho = restricted_eigenvalue(ortho, 2, 1.0, n_samples=5000, seed=0)
    re_dup = restricted_eigenvalue(dup, 1, 1.0, n_samples=5000, seed=0)
    checks = [
        ("hand-2x2", abs(min_eigenvalue(x22) - 1.0) < 1e-8),
        ("ortho-restricted", abs(re_ortho - 1.0) <= 5e-2),
        ("duplicate-collapses", re_dup < 5e-2),
    ]
    criterion(10, f"minimum eigenvalue matches the hand case; restricted "
                  f"eigenvalue {re_ortho:.3f} on an isometry and {re_dup:.3f} "
                  "on a duplicated column", checks)
