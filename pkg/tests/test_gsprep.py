import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qetukit import gsprep, models, sim


# ----------------------------------------------------------------------
# adiabatic schedule


def test_linear_schedule_closed_form():
    s = gsprep.adiabatic_schedule(10.0, 1.0, T=1.0, M=2)
    assert s.steps[0] == pytest.approx((0.375, 0.125), abs=1e-15)
    assert s.steps[1] == pytest.approx((0.125, 0.375), abs=1e-15)


def test_schedule_integrals_sum_to_T():
    for M in (1, 2, 3, 7):
        s = gsprep.adiabatic_schedule(10.0, 0.5, T=1.7, M=M)
        assert sum(a + b for a, b in s.steps) == pytest.approx(1.7, abs=1e-12)


def test_schedule_zero_ramp_is_pure_h1():
    s = gsprep.adiabatic_schedule(10.0, 1.0, T=1.0, M=2, ramp=[0.0, 0.0, 0.0])
    assert all(b == 0.0 for _, b in s.steps)
    # uniform register is an eigenstate of a purely momentum-diagonal model
    h_mom = np.array([0.0, 1.0, 2.0, 3.0])
    toy = models.SplitModel("toy", 1, 2, np.zeros(4), h_mom)
    psi = gsprep.adiabatic_init(toy, toy, s)
    uniform = np.full(4, 0.5)
    assert abs(abs(np.vdot(psi.amplitudes, uniform)) - 1.0) < 1e-12


def test_adiabatic_gamma_near_one_strong_coupling():
    tgt = models.u1_model(3, 2, 2.5)
    strong = models.u1_model(3, 2, 10.0, grid_g=2.5)
    psi = gsprep.adiabatic_init(strong, tgt, gsprep.adiabatic_schedule(10.0, 2.5))
    assert gsprep.gamma(psi, models.ground_state(tgt)) > 0.9


# ----------------------------------------------------------------------
# gamma


def test_gamma_identical_and_orthogonal():
    a = sim.StateVector.basis(2, 0)
    b = sim.StateVector.basis(2, 3)
    assert gsprep.gamma(a, a) == pytest.approx(1.0, abs=1e-15)
    assert gsprep.gamma(a, b) == 0.0


# ----------------------------------------------------------------------
# optimal step


def test_optimal_dtau_paper_gap():
    em = gsprep.ErrorModel(a=1.0, b=1.0, c=0.1, p=1.0)
    res = gsprep.optimal_dtau(em, 1e-3, 0.1)
    assert res.gap_percent == pytest.approx(3.2, abs=0.5)
    assert res.residual < 1e-12
    assert res.second_derivative > 0


def test_optimal_dtau_boundary_regime():
    em = gsprep.ErrorModel(a=1e-3, b=1.0, c=0.1, p=1.0)
    res = gsprep.optimal_dtau(em, 1e-3, 0.1)
    assert "N_tot = 1" in res.regime


@settings(max_examples=25, deadline=None)
@given(
    st.floats(0.5, 2.0),
    st.floats(1.0, 3.0),
    st.floats(0.01, 1.0),
    st.floats(1.0, 4.0),
)
def test_optimal_dtau_random_parameters(a, b, c, p):
    em = gsprep.ErrorModel(a=a, b=b, c=c, p=p)
    eps = a * 1e-4
    res = gsprep.optimal_dtau(em, eps, 0.2)
    assert res.residual < 1e-12
    assert res.second_derivative > 0
    x = c * res.dtau_numeric**p / eps
    lhs = p * x / (1 - x) + np.log(eps / a) + np.log1p(-x)
    assert abs(lhs) < 1e-10


def test_choose_tau_steps_examples():
    assert gsprep.choose_tau_steps(0.5, 1.9) == (1.5, 3)
    assert gsprep.choose_tau_steps(1.9, 1.9) == (1.9, 1)
    tau, n = gsprep.choose_tau_steps(0.3, 1.823)
    assert n == 6 and tau == pytest.approx(1.8, abs=1e-12)
    with pytest.raises(ValueError):
        gsprep.choose_tau_steps(2.0, 1.9)


# ----------------------------------------------------------------------
# error-model fitting


def test_fit_error_model_synthetic_recovery():
    true = gsprep.ErrorModel(a=0.8, b=1.3, c=0.05, p=2.0)
    delta = 0.2
    rows = [
        (d, 1, dt, true.total(delta, d, dt))
        for d in (8, 16, 24, 32, 40)
        for dt in (0.2, 0.4, 0.8)
    ]
    fit, resid = gsprep.fit_error_model(rows, delta)
    for name in "abcp":
        got, want = getattr(fit, name), getattr(true, name)
        assert abs(got - want) / want < 0.05


def test_fit_error_model_pure_trotter():
    rows = [(d, 1, dt, 0.07 * dt**1.8) for d in (8, 16, 24) for dt in (0.2, 0.4, 0.8)]
    fit, _ = gsprep.fit_error_model(rows, 0.2)
    assert fit.c == pytest.approx(0.07, rel=0.05)
    assert fit.p == pytest.approx(1.8, abs=0.1)


def test_fit_error_model_degenerate_scan():
    with pytest.raises(ValueError):
        gsprep.fit_error_model([(8, 1, 0.2, 1e-3), (16, 1, 0.2, 1e-4)], 0.2)


def test_fit_error_model_u1_trotter_exponent(u1_weaved_nq2):
    pytest.importorskip("scipy")
    model = models.u1_model(3, 2, 0.6, basis="weaved")
    rp = models.rescale(model, 0.05, delta_preset="two_thirds")
    cache = {}
    rows = []
    for dt in (0.25, 0.5, 1.0):
        for d in (8, 16, 24, 32, 44):
            rep = gsprep.prepare_ground_state(
                model, None, 0.05, 0.0, rp.mu, rp.delta, dt, d,
                evolver="trotter", mode="control_free", n_steps=1,
                rescale_params=rp, _cache=cache,
            )
            rows.append((d, 1, dt, max(rep.error, 1e-15)))
    fit, _ = gsprep.fit_error_model(rows, rp.delta)
    assert 1.7 <= fit.p <= 2.3


# ----------------------------------------------------------------------
# full pipeline


def test_prepare_ground_state_eigenstate_passthrough(sho_fig4):
    model, params = sho_fig4
    psi0 = models.ground_state(gsprep.rescaled_model(model, params))
    rep = gsprep.prepare_ground_state(
        model, psi0.astype(complex), 0.05, 0.0, params.mu, params.delta, 1.0, 14,
        rescale_params=params,
    )
    assert rep.error < 1e-12


def test_prepare_ground_state_warns_beyond_tau_max(sho_fig4):
    model, params = sho_fig4
    with pytest.warns(UserWarning):
        gsprep.prepare_ground_state(
            model, None, 0.05, 0.0, params.mu, params.delta, params.tau_max + 0.3, 10,
            rescale_params=params,
        )


def test_tau_n_steps_split_independence(sho_fig4):
    # fixed N_tot and dtau: the (tau, N_steps) split does not matter
    model, params = sho_fig4
    cache = {}
    errs = []
    for d, ns in ((32, 1), (16, 2), (8, 4)):
        rep = gsprep.prepare_ground_state(
            model, None, 0.05, 0.0, params.mu, params.delta, 0.25 * ns, d,
            evolver="trotter", mode="controlled", n_steps=ns,
            rescale_params=params, _cache=cache,
        )
        errs.append(rep.error)
    spread = (max(errs) - min(errs)) / np.mean(errs)
    assert spread < 0.2


def test_error_at_tau_max_beats_tau_one(sho_fig4):
    model, params = sho_fig4
    cache = {}
    for d in (10, 14, 18, 22, 26, 30):
        errs = {}
        for tau in (1.0, params.tau_max):
            rep = gsprep.prepare_ground_state(
                model, None, 0.05, 0.0, params.mu, params.delta, tau, d,
                rescale_params=params, _cache=cache,
            )
            errs[tau] = rep.error
        assert errs[params.tau_max] < errs[1.0]
