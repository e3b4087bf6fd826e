"""Ground-state preparation workflows.

Chains the window fit, the phase solve and the ladder executor; provides the
adiabatic initial-state builder, overlap measurement, the optimal-step
analysis for the combined filter/product-formula error budget, and the
least-squares fit of that budget to scan data.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import cheb, models, qsp, sim

__all__ = [
    "AdiabaticSchedule",
    "ErrorModel",
    "GsPrepReport",
    "OptimalDtau",
    "adiabatic_schedule",
    "adiabatic_init",
    "gamma",
    "prepare_ground_state",
    "rescaled_model",
    "optimal_dtau",
    "choose_tau_steps",
    "fit_error_model",
]


# ----------------------------------------------------------------------
# filtering pipeline


@dataclass
class GsPrepReport:
    error: float
    success_prob: float
    fit_epsilon: float
    tau: float
    d: int
    n_steps: int
    mode: str
    gates: dict = field(default_factory=dict)


def rescaled_model(model, params):
    """Split model for c1 H + c2 (the constant split evenly over the parts)."""
    return models.SplitModel(
        label=model.label + "|rescaled",
        n_sites=model.n_sites,
        n_q=model.n_q,
        h_pos=params.c1 * model.h_pos + params.c2 / 2.0,
        h_mom=params.c1 * model.h_mom + params.c2 / 2.0,
        meta=dict(model.meta, rescale=params),
    )


def prepare_ground_state(
    model,
    psi_init,
    eta,
    eta_proj,
    mu,
    delta,
    tau,
    d,
    evolver="exact",
    mode="controlled",
    n_steps=1,
    c=0.999,
    rescale_params=None,
    _cache=None,
):
    """Full filtering run; returns error, success probability and tallies.

    ``mu``/``delta`` describe the rescaled spectrum window; the model is
    rescaled internally with ``eta``.  ``evolver`` is "exact" or "trotter".
    In control-free mode the filter argument doubles, so the evolution
    parameter per call is tau/2 for the same window.
    """
    if rescale_params is None:
        rescale_params = models.rescale(model, eta)
    tmax = cheb.tau_max(eta, mu, delta)
    if tau > tmax + 1e-12:
        warnings.warn(f"tau={tau:.4f} exceeds tau_max={tmax:.4f}; isolation not guaranteed")

    key = (round(mu, 12), round(delta, 12), round(tau, 12), d, eta, eta_proj, c)
    if _cache is not None and key in _cache:
        poly, rep, phases = _cache[key]
    else:
        window = cheb.sigma_window(eta, eta_proj, mu, delta, tau, c)
        poly, rep = cheb.solve_step_poly(window, d)
        phases = qsp.solve_phases(poly)
        if _cache is not None:
            _cache[key] = (poly, rep, phases)

    ms = rescaled_model(model, rescale_params)
    if evolver == "exact":
        ev = sim.ExactEvolver(ms)
    elif evolver == "trotter":
        ev = sim.TrotterEvolver(ms)
    else:
        raise ValueError(f"unknown evolver {evolver!r}")

    if psi_init is None:
        psi_init = sim.StateVector.uniform(model.total_qubits)
    tau_call = tau / 2.0 if mode == "control_free" else tau
    run = sim.run_qetu(psi_init, phases, ev, tau=tau_call, n_steps=n_steps, mode=mode)
    psi0 = models.ground_state(model)
    err = 1.0 - abs(np.vdot(run.output.amplitudes, psi0))
    return GsPrepReport(
        error=float(err),
        success_prob=run.success_prob,
        fit_epsilon=rep.epsilon,
        tau=tau,
        d=d,
        n_steps=n_steps,
        mode=mode,
        gates=run.gates,
    )


def gamma(psi, psi0):
    """Absolute overlap |<psi0|psi>|."""
    a = psi.amplitudes if isinstance(psi, sim.StateVector) else np.asarray(psi)
    b = psi0.amplitudes if isinstance(psi0, sim.StateVector) else np.asarray(psi0)
    return float(abs(np.vdot(b, a)))


# ----------------------------------------------------------------------
# adiabatic initial guess


@dataclass(frozen=True)
class AdiabaticSchedule:
    g1: float
    g2: float
    T: float
    M: int
    ramp: str
    steps: tuple  # ((dt1, dt2), ...) per step


def adiabatic_schedule(g1, g2, T=1.0, M=2, ramp="linear"):
    """Per-step (dt1, dt2) pairs with dt1 = int(1-u), dt2 = int(u).

    ``ramp`` is "linear" (u = t/T, closed-form integrals) or a table of M+1
    values of u at the step edges (trapezoid rule).
    """
    dt = T / M
    steps = []
    if isinstance(ramp, str):
        if ramp != "linear":
            raise ValueError(f"unknown ramp {ramp!r}")
        for k in range(M):
            dt2 = (2 * k + 1) * dt**2 / (2.0 * T)
            steps.append((dt - dt2, dt2))
        label = "linear"
    else:
        table = np.asarray(ramp, dtype=float)
        if len(table) != M + 1:
            raise ValueError("ramp table needs M + 1 edge values")
        for k in range(M):
            dt2 = 0.5 * (table[k] + table[k + 1]) * dt
            steps.append((dt - dt2, dt2))
        label = "table"
    return AdiabaticSchedule(g1=g1, g2=g2, T=T, M=M, ramp=label, steps=tuple(steps))


def _split_step_pos_first(amps, model, dt):
    """exp(-i dt H_mom-part) exp(-i dt H_pos-part): position phase first."""
    amps = amps * np.exp(-1j * dt * model.h_pos)
    amps = sim.site_ft(amps, model.n_sites, model.n_q)
    amps = amps * np.exp(-1j * dt * model.h_mom)
    return sim.site_ft(amps, model.n_sites, model.n_q, inverse=True)


def adiabatic_init(model1, model2, schedule):
    """Ramp from the strong-coupling ground state (uniform register).

    Each step applies one first-order split step of H_1 for dt1 and one of
    H_2 for dt2.
    """
    n = model1.total_qubits
    amps = np.full(2**n, 1.0 / np.sqrt(2**n), dtype=complex)
    for dt1, dt2 in schedule.steps:
        if dt1 != 0.0:
            amps = _split_step_pos_first(amps, model1, dt1)
        if dt2 != 0.0:
            amps = _split_step_pos_first(amps, model2, dt2)
    return sim.StateVector(amps, n)


# ----------------------------------------------------------------------
# error budget: epsilon = a e^{-b Delta Ntot dtau} + c dtau^p


@dataclass(frozen=True)
class ErrorModel:
    a: float
    b: float
    c: float
    p: float

    def __post_init__(self):
        if min(self.a, self.b, self.c) < 0 or self.p < 1.0:
            raise ValueError("need a, b, c >= 0 and p >= 1")

    def total(self, delta, n_tot, dtau):
        return self.a * np.exp(-self.b * delta * n_tot * dtau) + self.c * dtau**self.p


@dataclass(frozen=True)
class OptimalDtau:
    dtau_numeric: float
    dtau_approx: float
    n_tot: int
    gap_percent: float
    regime: str
    residual: float
    second_derivative: float


def optimal_dtau(error_model, epsilon, delta):
    """Step size minimizing the total number of elementary-step calls.

    Bisection on x = (c/epsilon) dtau^p in (0, 1) for the stationarity
    condition 0 = p x/(1-x) + log(eps/a) + log(1-x); the closed-form
    expansion is returned alongside for comparison.
    """
    a, b, c, p = error_model.a, error_model.b, error_model.c, error_model.p
    if epsilon >= a:
        return OptimalDtau(
            dtau_numeric=np.nan,
            dtau_approx=np.nan,
            n_tot=1,
            gap_percent=np.nan,
            regime="boundary: N_tot = 1 and shrink dtau",
            residual=np.nan,
            second_derivative=np.nan,
        )
    if c <= 0.0:
        # No product-formula error: any dtau below tau_max works; the budget
        # has no interior optimum.
        return OptimalDtau(
            dtau_numeric=np.nan,
            dtau_approx=np.nan,
            n_tot=int(np.ceil(np.log(a / epsilon))),
            gap_percent=np.nan,
            regime="boundary: no trotter term",
            residual=np.nan,
            second_derivative=np.nan,
        )

    log_ea = np.log(epsilon / a)

    def f(x):
        return p * x / (1.0 - x) + log_ea + np.log1p(-x)

    lo, hi = 1e-16, 1.0 - 1e-16
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-16:
            break
    x_star = 0.5 * (lo + hi)
    dtau_num = (epsilon * x_star / c) ** (1.0 / p)
    dtau_approx = (epsilon / c * (1.0 - p / (p + np.log(a / epsilon)))) ** (1.0 / p)

    # Second derivative of N_tot at the stationary point (closed form),
    # positive for p >= 1.
    second = (
        c
        * p
        * dtau_num**p
        / (b * delta * dtau_num**3)
        * (epsilon * (p - 1.0) + c * dtau_num**p)
        / (epsilon - c * dtau_num**p) ** 2
    )
    if not second > 0.0:
        raise RuntimeError("optimal step is not a minimum; check parameters")

    n_tot_val = np.log(a / (epsilon - c * dtau_num**p)) / (b * delta * dtau_num)
    regime = "interior"
    if n_tot_val <= 1.0:
        regime = "boundary: N_tot = 1 and shrink dtau"
    gap = abs(dtau_num - dtau_approx) / dtau_num * 100.0
    return OptimalDtau(
        dtau_numeric=float(dtau_num),
        dtau_approx=float(dtau_approx),
        n_tot=int(np.ceil(n_tot_val)) if regime == "interior" else 1,
        gap_percent=float(gap),
        regime=regime,
        residual=float(abs(f(x_star))),
        second_derivative=float(second),
    )


def choose_tau_steps(dtau_star, tau_max):
    """Largest integer multiple of the step below tau_max."""
    if dtau_star > tau_max:
        raise ValueError("dtau exceeds tau_max; shrink the step")
    n_steps = int(np.floor(tau_max / dtau_star + 1e-12))
    return n_steps * dtau_star, n_steps


def fit_error_model(scan, delta, p_bounds=(1.0, 6.0)):
    """Least-squares fit of the two-term budget to scan rows.

    ``scan`` rows are (d, n_steps, dtau, error).  Requires at least three
    distinct values of d and of dtau.  Saturation errors seed (c, p); the
    small-step rows seed (a, b); a joint log-space refinement follows.
    """
    from scipy.optimize import least_squares

    rows = np.asarray(scan, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != 4:
        raise ValueError("scan rows must be (d, n_steps, dtau, error)")
    d_vals, n_vals, dt_vals, errs = rows.T
    if len(set(d_vals)) < 3 or len(set(np.round(dt_vals, 12))) < 3:
        raise ValueError("scan must span at least 3 values each of d and dtau")
    n_tot = d_vals * n_vals

    # Saturation level per dtau ~ c dtau^p.
    sat_dt, sat_err = [], []
    for dt in sorted(set(np.round(dt_vals, 12))):
        sel = np.round(dt_vals, 12) == dt
        dmax = np.max(d_vals[sel])
        sat_dt.append(dt)
        sat_err.append(float(np.mean(errs[sel & (d_vals >= dmax)])))
    sat_dt, sat_err = np.array(sat_dt), np.array(sat_err)
    if np.all(sat_err > 0) and len(sat_dt) >= 2:
        p0, logc0 = np.polyfit(np.log(sat_dt), np.log(sat_err), 1)
        p0 = float(np.clip(p0, *p_bounds))
        c0 = float(np.exp(logc0))
    else:
        p0, c0 = 2.0, 1.0

    resid0 = np.maximum(errs - c0 * dt_vals**p0, 1e-300)
    mask = resid0 > 0.3 * errs  # rows not saturated
    if mask.sum() >= 2:
        bfit, loga0 = np.polyfit(-delta * (n_tot * dt_vals)[mask], np.log(resid0[mask]), 1)
        a0, b0 = float(np.exp(loga0)), float(max(bfit, 1e-3))
    else:
        a0, b0 = 1.0, 1.0

    def unpack(q):
        return np.exp(q[0]), np.exp(q[1]), np.exp(q[2]), 1.0 + np.exp(q[3])

    def resid(q):
        a, b, c, p = unpack(q)
        pred = a * np.exp(-b * delta * n_tot * dt_vals) + c * dt_vals**p
        return np.log(pred) - np.log(errs)

    q0 = np.array([np.log(a0), np.log(b0), np.log(max(c0, 1e-12)), np.log(max(p0 - 1.0, 1e-3))])
    sol = least_squares(resid, q0, max_nfev=2000)
    a, b, c, p = unpack(sol.x)
    model = ErrorModel(a=float(a), b=float(b), c=float(c), p=float(p))
    return model, float(np.sqrt(np.mean(sol.fun**2)))
