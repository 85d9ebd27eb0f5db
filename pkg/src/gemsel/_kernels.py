"""Numba inner loops for the iterative solvers.

Both kernels work on the (1/n)-normalized Gram system

    G = X.T @ X / n,   c = X.T @ y / n

so a full sweep costs O(p^2) regardless of n, which keeps dense penalty
paths cheap for the p=500 simulation regimes.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _cd_full_sweep(G, c, lam_half, b, q):
    """One pass over all coordinates; q = G @ b is maintained everywhere."""
    p = b.shape[0]
    delta = 0.0
    for j in range(p):
        gjj = G[j, j]
        if gjj <= 0.0:
            continue  # all-zero column (lenient standardization)
        rho = c[j] - q[j] + gjj * b[j]
        z = abs(rho) - lam_half
        if z > 0.0:
            new = z / gjj if rho > 0.0 else -z / gjj
        else:
            new = 0.0
        d = new - b[j]
        if d != 0.0:
            b[j] = new
            for k in range(p):
                q[k] += G[k, j] * d
            ad = abs(d)
            if ad > delta:
                delta = ad
    return delta


@njit(cache=True)
def lasso_cd(G, c, lam_half, b, q, tol, max_sweeps):
    """Cyclic coordinate descent for (1/n)||y - Xb||^2 + lam*||b||_1.

    ``lam_half`` is lam/2 (the soft threshold for this objective).  ``q``
    must equal G @ b on entry; ``b`` and ``q`` are updated in place.

    Between full passes the solver iterates on the active set only,
    maintaining q just for those coordinates (the standard subproblem
    strategy; identical fixed point).  Convergence is declared only by a
    full pass moving no coefficient more than ``tol``.  Returns
    (sweeps_used, last_full_pass_change).
    """
    p = b.shape[0]
    act = np.empty(p, dtype=np.int64)
    sweeps = 0
    delta = np.inf
    while sweeps < max_sweeps:
        sweeps += 1
        delta = _cd_full_sweep(G, c, lam_half, b, q)
        if delta <= tol:
            break
        na = 0
        for j in range(p):
            if b[j] != 0.0:
                act[na] = j
                na += 1
        dirty = False
        while sweeps < max_sweeps:
            sweeps += 1
            inner = 0.0
            for m in range(na):
                j = act[m]
                gjj = G[j, j]
                if gjj <= 0.0:
                    continue
                rho = c[j] - q[j] + gjj * b[j]
                z = abs(rho) - lam_half
                if z > 0.0:
                    new = z / gjj if rho > 0.0 else -z / gjj
                else:
                    new = 0.0
                d = new - b[j]
                if d != 0.0:
                    b[j] = new
                    dirty = True
                    for mm in range(na):  # gradient kept current on the active set only
                        k = act[mm]
                        q[k] += G[k, j] * d
                    ad = abs(d)
                    if ad > inner:
                        inner = ad
            if inner <= tol:
                break
        if dirty:  # refresh q on the inactive coordinates before the next full pass
            for k in range(p):
                s = 0.0
                for m in range(na):
                    j = act[m]
                    if b[j] != 0.0:
                        s += G[k, j] * b[j]
                q[k] = s
    return sweeps, delta


@njit(cache=True)
def fsr_steps(G, c, step, corr_tol, max_iters):
    """Forward stagewise regression on the Gram system.

    At each step, bumps the coefficient with the largest absolute residual
    correlation (1/n) x_j' r by +/- step.  Stops when that correlation drops
    below corr_tol.  Returns (b, iters, converged).
    """
    p = c.shape[0]
    b = np.zeros(p)
    corr = c.copy()
    it = 0
    converged = False
    while it < max_iters:
        best = -1.0
        jbest = 0
        for j in range(p):
            a = abs(corr[j])
            if a > best:
                best = a
                jbest = j
        if best < corr_tol:
            converged = True
            break
        s = step if corr[jbest] > 0.0 else -step
        b[jbest] += s
        for k in range(p):
            corr[k] -= s * G[k, jbest]
        it += 1
    return b, it, converged
