"""Independent reference computations used by the tests.

These deliberately avoid the package's solvers: objectives are evaluated
directly on dense meshes and polished with derivative-free line searches, so
they stay valid oracles for the solver outputs they check.
"""

import numpy as np


def golden_section(f, lo, hi, tol=1e-10):
    """Derivative-free 1-D minimizer over [lo, hi]."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def oracle_objective_min(data, lam, gamma, box=3.0, coarse=31):
    """Grid search over [-box, box]^p refined by cyclic golden-section.

    Returns (objective_value, argmin).  Independent of the package solvers:
    the penalized objective is evaluated directly on the mesh, then the best
    point is polished one coordinate at a time.
    """
    y, x = data.y, data.x
    n, p = x.shape

    def obj(b):
        r = y - x @ b
        return float(r @ r) / n + lam * float(np.sum(np.abs(b) ** gamma))

    axes = [np.linspace(-box, box, coarse)] * p
    mesh = np.meshgrid(*axes, indexing="ij")
    B = np.column_stack([m.ravel() for m in mesh])
    resid = y[None, :] - B @ x.T
    vals = (resid**2).sum(axis=1) / n + lam * (np.abs(B) ** gamma).sum(axis=1)
    b = B[int(np.argmin(vals))].astype(float)

    for _ in range(60):
        moved = 0.0
        for j in range(p):
            def f1(t, j=j):
                bb = b.copy()
                bb[j] = t
                return obj(bb)

            t = golden_section(f1, b[j] - 0.5, b[j] + 0.5)
            moved = max(moved, abs(t - b[j]))
            b[j] = t
        if moved < 1e-11:
            break
    return obj(b), b


def oracle_ridge_closed_form(data, lam):
    """Normal-equation ridge solve, written out directly."""
    n = data.n
    G = data.x.T @ data.x / n
    c = data.x.T @ data.y / n
    return np.linalg.solve(G + lam * np.eye(data.p), c)
