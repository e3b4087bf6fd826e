"""Definite-parity minimax Chebyshev fits for spectral filters and Gaussian targets.

Two families of targets are handled:

* a shifted step function whose cosine-transformed keep/reject regions are
  described by a :class:`SigmaWindow`, and
* the cosine-transformed Gaussian used for wavepacket preparation, fit either
  over a whole interval of the argument (``all_x``) or only at the images of
  the known operator eigenvalues (``eigenvalues_only``).

Both are solved as linear programs with an epigraph variable (see ``_lp``).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._lp import LpError, solve_inequality_lp

__all__ = [
    "SigmaWindow",
    "ChebyshevPoly",
    "ApproxReport",
    "WindowError",
    "SamplingError",
    "BoundViolationError",
    "ParityMismatchError",
    "sigma_window",
    "tau_max",
    "solve_step_poly",
    "solve_gaussian_poly",
    "optimize_eta_tau",
    "eval_cheb",
    "cheb_basis",
]


class WindowError(ValueError):
    """Invalid or empty filter window."""


class SamplingError(ValueError):
    """Too few samples land in a constraint region."""


class BoundViolationError(RuntimeError):
    """No admissible coefficients keep |F| within the unitarity bound."""


class ParityMismatchError(ValueError):
    """Requested parity is inconsistent with the target's symmetry."""


# ----------------------------------------------------------------------
# window geometry


@dataclass(frozen=True)
class SigmaWindow:
    """Keep/reject geometry of the cosine-transformed step function."""

    eta: float
    eta_proj: float
    mu: float
    delta: float
    tau: float
    c: float
    sigma_plus: float
    sigma_minus: float
    sigma_min: float
    sigma_max: float


def sigma_window(eta, eta_proj, mu, delta, tau, c=0.999):
    """Map the energy window onto the argument of the even polynomial.

    sigma_{+-} = cos(tau (mu -+ delta/2) / 2), sigma_min/max use eta_proj.
    """
    if delta <= 0.0:
        raise WindowError(f"delta must be positive, got {delta}")
    if tau <= 0.0:
        raise WindowError(f"tau must be positive, got {tau}")
    return SigmaWindow(
        eta=float(eta),
        eta_proj=float(eta_proj),
        mu=float(mu),
        delta=float(delta),
        tau=float(tau),
        c=float(c),
        sigma_plus=float(np.cos(tau * (mu - delta / 2.0) / 2.0)),
        sigma_minus=float(np.cos(tau * (mu + delta / 2.0) / 2.0)),
        sigma_min=float(np.cos(tau * (np.pi - eta_proj) / 2.0)),
        sigma_max=float(np.cos(tau * eta_proj / 2.0)),
    )


def tau_max(eta, mu, delta):
    """Largest evolution parameter that still isolates the ground state."""
    denom = np.pi - eta + (mu + delta / 2.0)
    if denom <= 0.0:
        raise WindowError("pi - eta + mu + delta/2 must be positive")
    return 2.0 * np.pi / denom


# ----------------------------------------------------------------------
# polynomials


@dataclass(frozen=True)
class ChebyshevPoly:
    """Chebyshev expansion restricted to indices of one parity.

    ``coeffs[k]`` multiplies T_{indices[k]}; for parity ``even`` the indices
    are 0, 2, ..., degree, for ``odd`` 1, 3, ..., degree, and for ``none``
    0, 1, ..., degree.
    """

    parity: str
    coeffs: np.ndarray
    degree: int

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))
        if self.parity not in ("even", "odd", "none"):
            raise ValueError(f"unknown parity {self.parity!r}")
        if len(self.indices) != len(self.coeffs):
            raise ValueError("coefficient count does not match parity/degree")

    @property
    def indices(self):
        if self.parity == "even":
            return np.arange(0, self.degree + 1, 2)
        if self.parity == "odd":
            return np.arange(1, self.degree + 1, 2)
        return np.arange(0, self.degree + 1)

    @property
    def n_ch(self):
        return len(self.coeffs)

    def full_coeffs(self):
        full = np.zeros(self.degree + 1)
        full[self.indices] = self.coeffs
        return full

    def to_json_dict(self, report=None, window=None):
        doc = {
            "parity": self.parity,
            "degree": int(self.degree),
            "coeffs": [float(v) for v in self.coeffs],
        }
        if report is not None:
            doc["epsilon"] = float(report.epsilon)
        if window is not None:
            doc["window"] = {
                k: float(getattr(window, k))
                for k in (
                    "eta",
                    "eta_proj",
                    "mu",
                    "delta",
                    "tau",
                    "c",
                    "sigma_plus",
                    "sigma_minus",
                    "sigma_min",
                    "sigma_max",
                )
            }
        return doc

    @staticmethod
    def from_json_dict(doc):
        return ChebyshevPoly(doc["parity"], np.asarray(doc["coeffs"]), int(doc["degree"]))


@dataclass(frozen=True)
class ApproxReport:
    epsilon: float
    samples_used: int
    region_residuals: dict = field(default_factory=dict)


def cheb_basis(x, indices):
    """Matrix T_{indices[k]}(x_j) via the trigonometric definition."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    theta = np.arccos(np.clip(x, -1.0, 1.0))
    return np.cos(np.outer(theta, np.asarray(indices, dtype=float)))


def eval_cheb(poly, x):
    """Clenshaw evaluation of a parity-restricted Chebyshev expansion."""
    scalar = np.isscalar(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) > 1.0 + 1e-12):
        raise ValueError("eval_cheb argument outside [-1, 1]")
    x = np.clip(x, -1.0, 1.0)
    coef = poly.full_coeffs()
    if len(coef) == 1:
        out = np.full_like(x, coef[0])
        return float(out[0]) if scalar else out
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for k in range(len(coef) - 1, 0, -1):
        b1, b2 = coef[k] + 2.0 * x * b1 - b2, b1
    out = coef[0] + x * b1 - b2
    return float(out[0]) if scalar else out


# ----------------------------------------------------------------------
# step-function fit


def _chebyshev_grid(m):
    j = np.arange(m)
    return -np.cos(j * np.pi / (m - 1))


def default_step_samples(d):
    return max(2001, 40 * d)


def solve_step_poly(window, d, M=None):
    """Even minimax approximation of the shifted step on a sigma window.

    Minimizes the larger of the keep-region deviation from ``c`` and the
    reject-region magnitude, subject to |F| <= c on the whole sampled grid.
    """
    if d % 2 != 0 or d < 0:
        raise ValueError("step filter degree must be even and >= 0")
    auto_m = M is None
    if auto_m:
        M = default_step_samples(max(d, 2))
    c = window.c
    if window.sigma_max <= window.sigma_plus:
        raise WindowError("keep region [sigma_plus, sigma_max] is empty")

    while True:
        x = _chebyshev_grid(M)
        keep = (x >= window.sigma_plus - 1e-15) & (x <= window.sigma_max + 1e-15)
        reject = (x >= window.sigma_min - 1e-15) & (x <= window.sigma_minus + 1e-15)
        if keep.sum() >= 5 and reject.sum() >= 5:
            break
        if not auto_m or M >= 2**18:
            raise SamplingError(
                f"M={M} leaves {keep.sum()} keep / {reject.sum()} reject samples; increase M"
            )
        M *= 2

    indices = np.arange(0, d + 1, 2)
    T_all = cheb_basis(x, indices)
    n = len(indices)

    rows = []
    rhs = []
    # keep: |F - c| <= t
    Tk = T_all[keep]
    rows.append(np.hstack([Tk, -np.ones((Tk.shape[0], 1))]))
    rhs.append(np.full(Tk.shape[0], c))
    rows.append(np.hstack([-Tk, -np.ones((Tk.shape[0], 1))]))
    rhs.append(np.full(Tk.shape[0], -c))
    # reject: |F| <= t
    Tr = T_all[reject]
    rows.append(np.hstack([Tr, -np.ones((Tr.shape[0], 1))]))
    rhs.append(np.zeros(Tr.shape[0]))
    rows.append(np.hstack([-Tr, -np.ones((Tr.shape[0], 1))]))
    rhs.append(np.zeros(Tr.shape[0]))
    # global |F| <= c
    rows.append(np.hstack([T_all, np.zeros((M, 1))]))
    rhs.append(np.full(M, c))
    rows.append(np.hstack([-T_all, np.zeros((M, 1))]))
    rhs.append(np.full(M, c))

    A = np.vstack(rows)
    b = np.concatenate(rhs)
    cvec = np.zeros(n + 1)
    cvec[-1] = 1.0
    x0 = np.zeros(n + 1)
    x0[-1] = c + 1.0
    # Paired +-rows admit an exactly dual-feasible interior start: equal
    # duals cancel in the coefficient columns, the epigraph column sums to 1.
    m_fit = 2 * (int(keep.sum()) + int(reject.sum()))
    z0 = np.concatenate(
        [np.full(m_fit, 1.0 / m_fit), np.full(2 * M, 1e-3 / m_fit)]
    )

    sol, _, _ = solve_inequality_lp(A, b, cvec, x0, z0=z0)
    poly = ChebyshevPoly("even", sol[:n], d)

    F = eval_cheb(poly, x)
    eps_keep = float(np.max(np.abs(F[keep] - c)))
    eps_rej = float(np.max(np.abs(F[reject]))) if reject.any() else 0.0
    report = ApproxReport(
        epsilon=max(eps_keep, eps_rej),
        samples_used=M,
        region_residuals={"keep": eps_keep, "reject": eps_rej},
    )
    return poly, report


# ----------------------------------------------------------------------
# Gaussian targets


def _cos_image(u_lo, u_hi):
    """Exact image of cos over the closed interval [u_lo, u_hi]."""
    if u_hi < u_lo:
        u_lo, u_hi = u_hi, u_lo
    vals = [np.cos(u_lo), np.cos(u_hi)]
    k_lo = int(np.ceil(u_lo / np.pi))
    k_hi = int(np.floor(u_hi / np.pi))
    for k in range(k_lo, k_hi + 1):
        vals.append(1.0 if k % 2 == 0 else -1.0)
    return min(vals), max(vals)


def qetu_scaling(spec, eta):
    """(c1, c2) for the symmetric position digitization of ``spec``."""
    c1 = (np.pi - 2.0 * eta) / (2.0 * spec.x_max)
    c2 = eta + c1 * spec.x_max
    return c1, c2


def shifted_positions(spec, eta):
    """Eigenvalues of the shifted position operator, in [eta, pi - eta]."""
    n = 2 ** spec.n_q
    dx = 2.0 * spec.x_max / (n - 1)
    xs = -spec.x_max + dx * np.arange(n)
    c1, c2 = qetu_scaling(spec, eta)
    return c1 * xs + c2, xs


def gaussian_formula(x, tau, x0_qetu, sigma_qetu, c):
    """Cosine-transformed Gaussian target on the principal arccos branch."""
    u = np.arccos(np.clip(x, -1.0, 1.0))
    arg = (2.0 / tau) * u - x0_qetu
    return c * np.exp(-(arg**2) / (2.0 * sigma_qetu**2))


def _point_targets(spec, eta, tau, c):
    """Exact filter values at the operator eigenvalues and their cos images."""
    x_sh, xs = shifted_positions(spec, eta)
    c1, _ = qetu_scaling(spec, eta)
    sigma_q = c1 * spec.sigma_x
    x0_q = c1 * getattr(spec, "x0", 0.0) + (eta + c1 * spec.x_max)
    xt = np.cos(tau * x_sh / 2.0)
    targets = c * np.exp(-((x_sh - x0_q) ** 2) / (2.0 * sigma_q**2))
    return xt, targets, sigma_q, x0_q


def _parity_target(x, sign, tau, x0_q, sigma_q, c, override_x=None, override_t=None):
    """Parity component of the target, honoring exact values at known points."""

    def point(v):
        out = gaussian_formula(v, tau, x0_q, sigma_q, c)
        if override_x is not None and len(override_x):
            d = np.abs(v[:, None] - override_x[None, :])
            j = np.argmin(d, axis=1)
            hit = d[np.arange(len(v)), j] < 1e-12
            out = np.where(hit, override_t[j], out)
        return out

    x = np.atleast_1d(x)
    return 0.5 * (point(x) + sign * point(-x))


_BOUND_MARGIN = 1e-12
_AUX_GRID = 4097


def _fit_lp(T_fit, targets, T_bound, bound, n):
    rows = [
        np.hstack([T_fit, -np.ones((T_fit.shape[0], 1))]),
        np.hstack([-T_fit, -np.ones((T_fit.shape[0], 1))]),
        np.hstack([T_bound, np.zeros((T_bound.shape[0], 1))]),
        np.hstack([-T_bound, np.zeros((T_bound.shape[0], 1))]),
    ]
    rhs = [
        targets,
        -targets,
        np.full(T_bound.shape[0], bound),
        np.full(T_bound.shape[0], bound),
    ]
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    cvec = np.zeros(n + 1)
    cvec[-1] = 1.0
    x0 = np.zeros(n + 1)
    x0[-1] = float(np.max(np.abs(targets))) + 1.0
    m_fit = 2 * T_fit.shape[0]
    z0 = np.concatenate(
        [np.full(m_fit, 1.0 / m_fit), np.full(2 * T_bound.shape[0], 1e-3 / m_fit)]
    )
    try:
        sol, _, _ = solve_inequality_lp(A, b, cvec, x0, z0=z0)
    except LpError as exc:  # the zero polynomial is always feasible
        raise BoundViolationError(str(exc)) from exc
    return sol


def _solve_single_parity(spec, parity, d, eta, tau, sample_mode, c, M, aux_grid=_AUX_GRID):
    sign = 1.0 if parity == "even" else -1.0
    indices = np.arange(0 if parity == "even" else 1, d + 1, 2)
    if len(indices) == 0:
        raise ValueError(f"degree {d} admits no {parity} coefficients")
    n = len(indices)

    xt, point_t, sigma_q, x0_q = _point_targets(spec, eta, tau, c)
    aux = _chebyshev_grid(aux_grid)
    T_bound = cheb_basis(aux, indices)
    bound = 1.0 - _BOUND_MARGIN

    if sample_mode == "eigenvalues_only":
        # Constrain the raw filter value at every sampled eigenvalue; the
        # parity restriction of the basis does the symmetrization.
        samples = xt
        targets = point_t
    elif sample_mode == "all_x":
        u_lo = tau * eta / 2.0
        u_hi = tau * (np.pi - eta) / 2.0
        lo, hi = _cos_image(u_lo, u_hi)
        grid = _chebyshev_grid(M)
        samples = grid[(grid >= lo - 1e-15) & (grid <= hi + 1e-15)]
        if len(samples) < max(4 * n, 33):
            # Narrow image: resample it directly with Chebyshev spacing.
            t = _chebyshev_grid(max(4 * n + 1, 129))
            samples = lo + (hi - lo) * (t + 1.0) / 2.0
        samples = np.concatenate([samples, xt])
        targets = _parity_target(
            samples, sign, tau, x0_q, sigma_q, c, override_x=xt, override_t=point_t
        )
    else:
        raise ValueError(f"unknown sample_mode {sample_mode!r}")

    # Solve, then guard against inter-sample bound violations by appending
    # any offending points of a denser grid and re-solving.
    T_fit = cheb_basis(samples, indices)
    dense = _chebyshev_grid(20_001)
    T_dense = cheb_basis(dense, indices)
    for _ in range(4):
        sol = _fit_lp(T_fit, targets, T_bound, bound, n)
        poly = ChebyshevPoly(parity, sol[:n], d)
        dense_vals = T_dense @ poly.coeffs
        violations = np.abs(dense_vals) > 1.0
        if not violations.any():
            break
        T_bound = np.vstack([T_bound, T_dense[violations]])
    else:
        raise BoundViolationError("fitted polynomial exceeds the unitarity bound")

    # Near-interpolation fits sit below the interior-point gap tolerance; a
    # least-squares candidate recovers them exactly when it also respects
    # the bound.
    coef_ls, *_ = np.linalg.lstsq(T_fit, targets, rcond=None)
    ls_resid = float(np.max(np.abs(T_fit @ coef_ls - targets)))
    if ls_resid < float(np.max(np.abs(T_fit @ poly.coeffs - targets))) and (
        np.max(np.abs(T_dense @ coef_ls)) <= 1.0
    ):
        poly = ChebyshevPoly(parity, coef_ls, d)

    resid = np.abs(eval_cheb(poly, samples) - targets)
    report = ApproxReport(
        epsilon=float(np.max(resid)),
        samples_used=len(samples),
        region_residuals={parity: float(np.max(resid))},
    )
    return poly, report


def _is_even_tau(tau):
    return abs(tau - 2.0) < 1e-12


def solve_gaussian_poly(spec, parity, d, eta, tau, sample_mode, c=0.999, M=None, aux_grid=_AUX_GRID):
    """Fit the cosine-transformed Gaussian of ``spec`` with definite parity.

    ``spec`` must expose ``n_q``, ``x_max``, ``sigma_x`` and optionally ``x0``.
    In ``eigenvalues_only`` mode the constraint set is the image of the known
    operator eigenvalues plus a dense |F| <= 1 guard grid; in ``all_x`` mode
    the whole image interval of cos(tau x_sh / 2) is sampled (the sampled
    eigenvalue images are always included with their exact filter values).
    """
    if M is None:
        M = default_step_samples(max(d, 2))
    if _is_even_tau(tau) and parity == "none":
        raise ParityMismatchError("tau = 2 makes the target purely even")

    if parity in ("even", "odd"):
        return _solve_single_parity(spec, parity, d, eta, tau, sample_mode, c, M, aux_grid)
    if parity != "none":
        raise ValueError(f"unknown parity {parity!r}")

    d_even = d if d % 2 == 0 else d - 1
    d_odd = d if d % 2 == 1 else d - 1
    p_even, r_even = _solve_single_parity(spec, "even", d_even, eta, tau, sample_mode, c, M, aux_grid)
    p_odd, r_odd = _solve_single_parity(spec, "odd", max(d_odd, 1), eta, tau, sample_mode, c, M, aux_grid)
    coeffs = np.zeros(d + 1)
    coeffs[p_even.indices] = p_even.coeffs
    coeffs[p_odd.indices] = p_odd.coeffs
    poly = ChebyshevPoly("none", coeffs, d)
    report = ApproxReport(
        epsilon=max(r_even.epsilon, r_odd.epsilon),
        samples_used=r_even.samples_used + r_odd.samples_used,
        region_residuals={"even": r_even.epsilon, "odd": r_odd.epsilon},
    )
    return poly, report


# ----------------------------------------------------------------------
# outer (eta, tau) optimization


_ETA_GRID = np.round(np.arange(-1.0, 1.5 + 1e-9, 0.05), 10)
_TAU_GRID = np.round(np.arange(0.5, 6.0 + 1e-9, 0.1), 10)


def optimize_eta_tau(
    spec,
    parity,
    d,
    tau_fixed=None,
    sample_mode="all_x",
    c=0.999,
    eta_grid=None,
    tau_grid=None,
    refine_tol=1e-4,
    scan_M=257,
    final_M=None,
):
    """Brute-force (eta, tau) grid plus coordinate-descent refinement.

    Every inner evaluation is a full minimax solve; the scan phase uses a
    reduced sample count and the winning point is re-solved at full density.
    """
    etas = _ETA_GRID if eta_grid is None else np.asarray(eta_grid, dtype=float)
    taus = (
        np.array([tau_fixed], dtype=float)
        if tau_fixed is not None
        else (_TAU_GRID if tau_grid is None else np.asarray(tau_grid, dtype=float))
    )

    cache = {}

    def objective(eta, tau, M):
        key = (round(eta, 9), round(tau, 9), M)
        if key not in cache:
            try:
                _, rep = solve_gaussian_poly(
                    spec, parity, d, eta, tau, sample_mode, c, M, aux_grid=513
                )
                cache[key] = rep.epsilon
            except (BoundViolationError, LpError, ValueError):
                cache[key] = np.inf
        return cache[key]

    best = None
    for eta in etas:
        for tau in taus:
            val = objective(eta, tau, scan_M)
            if best is None or val < best[0]:
                best = (val, eta, tau)
    _, eta_b, tau_b = best
    if eta_b in (etas[0], etas[-1]) or (tau_fixed is None and tau_b in (taus[0], taus[-1])):
        warnings.warn("optimize_eta_tau: best grid point sits on the grid boundary")

    # Coordinate descent with shrinking steps.
    step_eta = float(etas[1] - etas[0]) if len(etas) > 1 else 0.05
    step_tau = float(taus[1] - taus[0]) if len(taus) > 1 else 0.0
    f_b = objective(eta_b, tau_b, scan_M)
    while max(step_eta, step_tau) > refine_tol:
        improved = False
        moves = [(step_eta, 0.0), (-step_eta, 0.0)]
        if tau_fixed is None:
            moves += [(0.0, step_tau), (0.0, -step_tau)]
        for de, dt in moves:
            val = objective(eta_b + de, tau_b + dt, scan_M)
            if val < f_b:
                eta_b, tau_b, f_b = eta_b + de, tau_b + dt, val
                improved = True
                break
        if not improved:
            step_eta /= 2.0
            step_tau /= 2.0

    poly, report = solve_gaussian_poly(
        spec, parity, d, eta_b, tau_b, sample_mode, c, final_M or default_step_samples(max(d, 2))
    )
    return eta_b, tau_b, poly, report
