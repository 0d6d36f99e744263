"""Batched BFGS for many small independent smooth problems.

scipy's minimisers handle one problem per call; witness bounds need hundreds
of thousands of 8-parameter local searches, so here every row of ``x`` is an
independent problem advanced in lock-step with numpy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

FunGrad = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass
class BatchResult:
    x: np.ndarray
    fun: np.ndarray
    grad_norm: np.ndarray
    converged: np.ndarray
    iterations: int


def bfgs_minimize(
    fg: FunGrad,
    x0: np.ndarray,
    gtol: float = 1e-9,
    maxiter: int = 300,
    c1: float = 1e-4,
    max_backtracks: int = 40,
) -> BatchResult:
    """Minimise independent problems ``f_r`` from starting rows ``x0[r]``.

    ``fg(x, rows)`` returns values and gradients for the problems ``rows``
    at points ``x`` (one row each).  Uses an inverse-Hessian BFGS update with
    Armijo backtracking; the update is skipped when the curvature condition
    fails and the approximation resets to identity on a non-descent step.
    A problem whose line search fails twice in a row is considered stalled at
    working precision and left where it is.
    """
    x = np.array(x0, dtype=float)
    n, p = x.shape
    all_rows = np.arange(n)
    f, g = fg(x, all_rows)
    H = np.broadcast_to(np.eye(p), (n, p, p)).copy()
    eye = np.eye(p)
    failures = np.zeros(n, dtype=int)
    it = 0
    for it in range(1, maxiter + 1):
        gnorm = np.abs(g).max(axis=1)
        active = np.flatnonzero(np.isfinite(f) & (gnorm > gtol) & (failures < 2))
        if active.size == 0:
            break
        xa, fa, ga, Ha = x[active], f[active], g[active], H[active]
        step = -np.einsum("nij,nj->ni", Ha, ga)
        slope = np.einsum("ni,ni->n", ga, step)
        bad = ~(slope < 0)
        if bad.any():
            Ha[bad] = eye
            step[bad] = -ga[bad]
            slope[bad] = -np.einsum("ni,ni->n", ga[bad], ga[bad])

        t = np.ones(active.size)
        x_new = xa + step
        f_new, g_new = fg(x_new, active)
        todo = np.flatnonzero(~(f_new <= fa + c1 * t * slope))
        for _ in range(max_backtracks):
            if todo.size == 0:
                break
            t[todo] *= 0.5
            x_new[todo] = xa[todo] + t[todo, None] * step[todo]
            f_new[todo], g_new[todo] = fg(x_new[todo], active[todo])
            still = ~(f_new[todo] <= fa[todo] + c1 * t[todo] * slope[todo])
            todo = todo[still]
        # keep the old point where the line search failed outright
        if todo.size:
            x_new[todo] = xa[todo]
            f_new[todo] = fa[todo]
            g_new[todo] = ga[todo]

        s = x_new - xa
        y = g_new - ga
        sy = np.einsum("ni,ni->n", s, y)
        ok = sy > 1e-14 * np.maximum(1.0, np.einsum("ni,ni->n", s, s))
        if ok.any():
            rho = 1.0 / sy[ok]
            V = eye - rho[:, None, None] * np.einsum("ni,nj->nij", s[ok], y[ok])
            Ha[ok] = V @ Ha[ok] @ np.swapaxes(V, 1, 2) + rho[:, None, None] * np.einsum(
                "ni,nj->nij", s[ok], s[ok]
            )
        if todo.size:
            Ha[todo] = eye
        fails = np.zeros(active.size, dtype=int)
        fails[todo] = failures[active[todo]] + 1
        failures[active] = fails
        x[active], f[active], g[active], H[active] = x_new, f_new, g_new, Ha

    gnorm = np.abs(g).max(axis=1)
    return BatchResult(x, f, gnorm, np.isfinite(f) & (gnorm <= gtol), it)
