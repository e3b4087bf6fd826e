"""Dense primal-dual interior-point solver for small inequality-form LPs.

The minimax fitting problems in this package reduce to

    min  c @ x   subject to   A @ x <= b

with a handful of variables (polynomial coefficients plus one epigraph
variable) and up to a few tens of thousands of rows.  A Mehrotra
predictor-corrector iteration with dense normal equations is more than
enough at this scale and keeps the solve deterministic.
"""
from __future__ import annotations

import numpy as np


class LpError(RuntimeError):
    """Interior-point iteration failed to reach the requested tolerance."""


def solve_inequality_lp(A, b, c, x0, z0=None, tol=1e-11, max_iter=200):
    """Minimize ``c @ x`` subject to ``A @ x <= b``.

    ``x0`` must be strictly feasible (all slacks positive); the callers in
    this package can always construct one analytically.  ``z0`` optionally
    supplies a positive dual start (ideally near dual feasibility); without
    it a shifted least-squares point is used.  Returns
    ``(x, objective, n_iter)``.
    """
    A = np.ascontiguousarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape

    x = np.asarray(x0, dtype=float).copy()
    s = b - A @ x
    if np.min(s) <= 0.0:
        raise LpError("interior-point start is not strictly feasible")
    if z0 is not None:
        z = np.asarray(z0, dtype=float).copy()
        if np.min(z) <= 0.0:
            raise LpError("dual start must be positive")
    else:
        # Minimal-norm solution of A^T z = -c, shifted into the interior.
        G = A @ A.T if m <= n else A.T @ A
        try:
            if m <= n:
                z_ls = np.linalg.solve(G + 1e-12 * np.eye(m), A @ (-c))
            else:
                z_ls = A @ np.linalg.solve(G + 1e-12 * np.eye(n), -c)
        except np.linalg.LinAlgError:
            z_ls = np.zeros(m)
        shift = max(0.1 * (1.0 + float(np.mean(np.abs(z_ls)))), -1.5 * float(np.min(z_ls, initial=0.0)))
        z = z_ls + shift

    bnorm = 1.0 + np.max(np.abs(b))
    cnorm = 1.0 + np.max(np.abs(c))
    stall = 0

    for it in range(max_iter):
        rp = A @ x + s - b
        rd = c + A.T @ z
        comp = s @ z
        obj = c @ x
        rp_ok = np.max(np.abs(rp)) <= tol * bnorm
        gap = comp / m / (1.0 + abs(obj))
        if rp_ok and gap <= tol and np.max(np.abs(rd)) <= tol * cnorm:
            return x, obj, it
        # Near-degenerate active sets make the recovered duals noisy at the
        # 1e-6 level even though the primal iterate is converged; accept once
        # complementarity is far below target with exact primal feasibility.
        if rp_ok and gap <= 1e-2 * tol and np.max(np.abs(rd)) <= 1e-5 * cnorm:
            return x, obj, it
        if rp_ok and gap <= 1e-4 * tol:
            stall += 1
            if stall >= 10:
                return x, obj, it
        else:
            stall = 0

        mu = comp / m
        w = z / s                      # positive weights
        # Normal-equation matrix A^T diag(w) A, n x n.
        Aw = A * w[:, None]
        M = A.T @ Aw
        # Tiny ridge keeps the Cholesky factorization alive when the active
        # rows are degenerate (duplicate samples are common in our grids).
        M[np.diag_indices_from(M)] += 1e-13 * (1.0 + np.trace(M) / n)

        def newton_step(rc):
            # Eliminate ds = -rp - A dx and dz = (rc - z ds)/s from the KKT
            # system; the normal equations for dx read
            #   M dx = -rd - A^T ((rc + z * rp) / s)
            rhs = -rd - A.T @ ((rc + z * rp) / s)
            try:
                L = np.linalg.cholesky(M)
                dx = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
            except np.linalg.LinAlgError:
                dx = np.linalg.lstsq(M, rhs, rcond=None)[0]
            ds = -rp - A @ dx
            dz = (rc - z * ds) / s
            return dx, ds, dz

        # Affine (predictor) direction.
        rc_aff = -z * s
        dx_a, ds_a, dz_a = newton_step(rc_aff)
        alpha_p = _max_step(s, ds_a)
        alpha_d = _max_step(z, dz_a)
        mu_aff = ((s + alpha_p * ds_a) @ (z + alpha_d * dz_a)) / m
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.1

        # Corrector.
        rc = sigma * mu - z * s - ds_a * dz_a
        dx, ds, dz = newton_step(rc)
        alpha_p = min(1.0, 0.99995 * _max_step(s, ds))
        alpha_d = min(1.0, 0.99995 * _max_step(z, dz))

        x += alpha_p * dx
        s += alpha_p * ds
        z += alpha_d * dz
        s = np.maximum(s, 1e-300)
        z = np.maximum(z, 1e-300)

    raise LpError(f"no convergence after {max_iter} interior-point iterations")


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))
