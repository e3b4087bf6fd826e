"""Limited-memory quasi-Newton minimizer with backtracking line search.

Used by the phase solver, which supplies analytic gradients and needs
termination driven directly by the functional value (down to ~1e-24) rather
than by relative decrease.
"""
from __future__ import annotations

import numpy as np


class OptimizerError(RuntimeError):
    pass


def minimize_lbfgs(fun_grad, x0, ftarget=0.0, gtol=1e-14, max_iter=1000, memory=10):
    """Minimize ``f`` given ``fun_grad(x) -> (f, grad)``.

    Rank-two (L-BFGS) updates with an Armijo backtracking search.  Stops when
    ``f < ftarget`` or ``||grad|| < gtol``.  Returns ``(x, f, n_iter, n_eval)``.
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g = fun_grad(x)
    n_eval = 1
    s_list, y_list, rho_list = [], [], []

    for it in range(max_iter):
        if f < ftarget or np.linalg.norm(g) < gtol:
            return x, f, it, n_eval

        # Two-loop recursion.
        q = -g.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rho_list)):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        if y_list:
            y = y_list[-1]
            q *= (s_list[-1] @ y) / (y @ y)
        for (s, y, rho), a in zip(zip(s_list, y_list, rho_list), reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        p = q
        gp = g @ p
        if gp >= 0.0:  # not a descent direction: restart from steepest descent
            p = -g
            gp = g @ p
            s_list, y_list, rho_list = [], [], []

        alpha = 1.0
        f_new, g_new = None, None
        for _ in range(50):
            f_try, g_try = fun_grad(x + alpha * p)
            n_eval += 1
            if f_try <= f + 1e-4 * alpha * gp:
                f_new, g_new = f_try, g_try
                break
            alpha *= 0.5
        if f_new is None:
            # Line search failed along p; one last steepest-descent attempt.
            p = -g
            gp = g @ p
            alpha = 1.0
            for _ in range(60):
                f_try, g_try = fun_grad(x + alpha * p)
                n_eval += 1
                if f_try <= f + 1e-4 * alpha * gp:
                    f_new, g_new = f_try, g_try
                    break
                alpha *= 0.5
            if f_new is None:
                return x, f, it, n_eval
            s_list, y_list, rho_list = [], [], []

        s = alpha * p
        y = g_new - g
        sy = s @ y
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            s_list.append(s)
            y_list.append(y)
            rho_list.append(1.0 / sy)
            if len(s_list) > memory:
                s_list.pop(0)
                y_list.pop(0)
                rho_list.pop(0)
        x = x + s
        f, g = f_new, g_new

    return x, f, max_iter, n_eval
