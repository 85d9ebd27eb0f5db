"""Penalized regression tuned by generalization-error minimization.

The package fits unpenalized (OLS, forward stagewise) and penalized (ridge,
lasso, bridge) regressions, tunes the penalty by held-out error over a
lambda path (validation split or K-fold CV), computes the full family of
finite-sample generalization-error bounds, and ships a seeded simulation
harness for replication studies.
"""

from .data import (
    Dataset,
    FoldSet,
    SplitPair,
    cv_round,
    load_csv,
    make_folds,
    save_csv,
    split_validation,
    standardize,
    to_original_coefficients,
)
from .estimators import (
    Coefficients,
    FsrConfig,
    PenaltySpec,
    fit_bridge,
    fit_fsr,
    fit_lasso,
    fit_ols,
    fit_ridge,
    kkt_violation,
    lambda_max_lasso,
    penalized_objective,
)
from .metrics import FitMetrics, ege, ete, gr2, l1_bias, l2_bias, r2, tss
from .selector import (
    FitResult,
    LambdaGrid,
    SelectionReport,
    lambda_grid,
    select_cv,
    select_validation,
)
from .bounds import (
    BoundInputs,
    BoundReport,
    TailSpec,
    ege_bound_cv,
    ege_bound_validation,
    epsilon,
    estimate_tail,
    l2_diff_bound,
    min_eigenvalue,
    ols_ege_bound,
    optimal_k,
    restricted_eigenvalue,
    varsigma_validation,
    vc_population_bound,
)
from .simulate import (
    SimConfig,
    SimulationReport,
    bound_coverage_study,
    consistency_study,
    generate_dgp,
    k_tradeoff_study,
    prop31_check,
    run_study,
    table2_config,
)

__version__ = "0.1.0"
