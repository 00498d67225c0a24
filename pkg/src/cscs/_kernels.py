"""Compiled coordinate-descent kernels.

The sweep functions perform one full Gauss-Seidel pass in place and return
the max-norm of the coordinate changes, which equals the iterate change
between consecutive sweeps (every coordinate is updated exactly once per
sweep).  The solve functions run the whole sweep loop inside compiled code,
recording the objective after every sweep, so ill-conditioned instances can
afford millions of sweeps.  fastmath stays off so results are bit-identical
across serial and threaded execution.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def soft_threshold_kernel(x, lam):
    if x > lam:
        return x - lam
    if x < -lam:
        return x + lam
    return 0.0


@njit(cache=True, nogil=True)
def dense_objective(a, x, lam):
    """x^t a x - 2 log x_k + lam * sum_{j<k} |x_j|."""
    k = x.shape[0]
    quad = 0.0
    for i in range(k):
        row = 0.0
        for j in range(k):
            row += a[i, j] * x[j]
        quad += x[i] * row
    pen = 0.0
    for j in range(k - 1):
        pen += abs(x[j])
    return quad - 2.0 * np.log(x[k - 1]) + lam * pen


@njit(cache=True, nogil=True)
def lowrank_objective(r, x, lam):
    """Same value with the quadratic term read off the residual r = b^T x."""
    quad = 0.0
    for t in range(r.shape[0]):
        quad += r[t] * r[t]
    pen = 0.0
    for j in range(x.shape[0] - 1):
        pen += abs(x[j])
    return quad - 2.0 * np.log(x[x.shape[0] - 1]) + lam * pen


@njit(cache=True, nogil=True)
def dense_sweep(a, x, lam):
    """One sweep for h(x) = x^t a x - 2 log x_k + lam * sum_{j<k} |x_j|."""
    k = x.shape[0]
    max_delta = 0.0
    for j in range(k - 1):
        cross = -a[j, j] * x[j]
        for l in range(k):
            cross += a[l, j] * x[l]
        new = soft_threshold_kernel(-2.0 * cross, lam) / (2.0 * a[j, j])
        delta = abs(new - x[j])
        if delta > max_delta:
            max_delta = delta
        x[j] = new
    kk = k - 1
    c = -a[kk, kk] * x[kk]
    for l in range(k):
        c += a[l, kk] * x[l]
    new = (-c + np.sqrt(c * c + 4.0 * a[kk, kk])) / (2.0 * a[kk, kk])
    delta = abs(new - x[kk])
    if delta > max_delta:
        max_delta = delta
    x[kk] = new
    return max_delta


@njit(cache=True, nogil=True)
def lowrank_sweep(b, r, x, a_diag, lam):
    """Same sweep with a = b @ b.T, maintaining the residual r = b.T @ x.

    Each coordinate update costs O(n) where n = r.shape[0]: the cross term
    is b[j] . r - a_jj x_j, and r is patched incrementally after the update.
    """
    k = x.shape[0]
    n = r.shape[0]
    max_delta = 0.0
    for j in range(k - 1):
        cross = -a_diag[j] * x[j]
        for t in range(n):
            cross += b[j, t] * r[t]
        new = soft_threshold_kernel(-2.0 * cross, lam) / (2.0 * a_diag[j])
        diff = new - x[j]
        if diff != 0.0:
            for t in range(n):
                r[t] += b[j, t] * diff
            x[j] = new
        delta = abs(diff)
        if delta > max_delta:
            max_delta = delta
    kk = k - 1
    c = -a_diag[kk] * x[kk]
    for t in range(n):
        c += b[kk, t] * r[t]
    new = (-c + np.sqrt(c * c + 4.0 * a_diag[kk])) / (2.0 * a_diag[kk])
    diff = new - x[kk]
    if diff != 0.0:
        for t in range(n):
            r[t] += b[kk, t] * diff
        x[kk] = new
    if abs(diff) > max_delta:
        max_delta = abs(diff)
    return max_delta


@njit(cache=True, nogil=True)
def dense_solve(a, x, lam, eps, r_max, trace):
    """Sweep until the iterate change drops below eps or r_max is exhausted.

    trace must have length r_max + 1; trace[0..sweeps] receives the
    objective before and after each sweep.  Returns (sweeps, converged).
    """
    trace[0] = dense_objective(a, x, lam)
    sweeps = 0
    converged = False
    for _ in range(r_max):
        delta = dense_sweep(a, x, lam)
        sweeps += 1
        trace[sweeps] = dense_objective(a, x, lam)
        if delta < eps:
            converged = True
            break
    return sweeps, converged


@njit(cache=True, nogil=True)
def lowrank_solve(b, r, x, a_diag, lam, eps, r_max, trace):
    """Residual-caching variant of dense_solve."""
    trace[0] = lowrank_objective(r, x, lam)
    sweeps = 0
    converged = False
    for _ in range(r_max):
        delta = lowrank_sweep(b, r, x, a_diag, lam)
        sweeps += 1
        trace[sweeps] = lowrank_objective(r, x, lam)
        if delta < eps:
            converged = True
            break
    return sweeps, converged


@njit(cache=True, nogil=True)
def lasso_solve(sub, cross_vec, phi, lam, eps, r_max):
    """Cyclic coordinate descent for f(phi) = phi^t sub phi + 2 phi^t
    cross_vec + lam ||phi||_1; returns (sweeps, converged)."""
    m = phi.shape[0]
    sweeps = 0
    converged = False
    for _ in range(r_max):
        max_delta = 0.0
        for j in range(m):
            c = cross_vec[j] - sub[j, j] * phi[j]
            for l in range(m):
                c += sub[l, j] * phi[l]
            new = soft_threshold_kernel(-2.0 * c, lam) / (2.0 * sub[j, j])
            delta = abs(new - phi[j])
            if delta > max_delta:
                max_delta = delta
            phi[j] = new
        sweeps += 1
        if max_delta < eps:
            converged = True
            break
    return sweeps, converged
