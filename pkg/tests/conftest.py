import warnings

import numpy as np
import pytest

from qetukit import cheb, models

warnings.filterwarnings("ignore", message="tau=.*exceeds tau_max")


@pytest.fixture(scope="session")
def paper_step_window():
    """Reference filter window: eta = eta_proj = 0.3, mu = 1.3, delta = 0.6."""
    return cheb.sigma_window(0.3, 0.3, 1.3, 0.6, 1.0, 0.999)


@pytest.fixture(scope="session")
def step_poly_d22(paper_step_window):
    return cheb.solve_step_poly(paper_step_window, 22)


@pytest.fixture(scope="session")
def sho_fig4():
    """Balanced 3-qubit oscillator grid plus its rescaling."""
    x_max = models.find_sho_xmax(3, 1.0)
    model = models.sho_model(3, 1.0, x_max)
    params = models.rescale(model, 0.05)
    return model, params


@pytest.fixture(scope="session")
def u1_weaved_nq2():
    model = models.u1_model(3, 2, 1.0, basis="weaved")
    params = models.rescale(model, 0.05, delta_preset="two_thirds")
    return model, params


@pytest.fixture(scope="session")
def wp_spec44():
    from qetukit.wavepacket import WavepacketSpec

    return WavepacketSpec(n_q=4, sigma_x=1.6, x_max=4.0)
