import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavchem import analytics, lindblad, single_pair, validation
from cavchem.analytics import mhz
from cavchem.errors import InvalidParameterError, TransferTimeoutError
from cavchem.single_pair import E0, G0, G1, H0, I0


def test_hamiltonian_structure():
    p = analytics.SystemParams(g=2.0, kappa=1.0, gamma_g=0.5, gamma_h=0.5, omega=0.6, delta1=0.1, delta2=-0.2)
    H = single_pair.hamiltonian_matrix(p, p.omega)
    np.testing.assert_allclose(H, H.conj().T)
    assert H[E0, I0] == pytest.approx(0.3)
    assert H[G1, E0] == pytest.approx(2.0)
    assert H[E0, E0] == pytest.approx(0.1)
    assert H[G1, G1] == pytest.approx(-0.2)
    # g,0 and h,0 are dark end states
    assert not H[G0].any() and not H[H0].any()


def test_collapse_rates():
    p = analytics.SystemParams(g=2.0, kappa=1.5, gamma_g=0.25, gamma_h=0.75)
    ops = {c.label: c.op for c in single_pair.collapse_ops(p)}
    rates = {k: float(np.sum(np.abs(v) ** 2)) for k, v in ops.items()}
    assert sorted(rates.values()) == pytest.approx(sorted([3.0, 0.25, 0.75]))


@settings(max_examples=15, deadline=None)
@given(g=st.floats(0.05, 20.0), kappa=st.floats(0.05, 20.0), gamma=st.floats(0.05, 20.0),
       f=st.floats(0.0, 1.0))
def test_delta_pulse_matches_closed_form(g, kappa, gamma, f):
    p = analytics.SystemParams(g=g, kappa=kappa, gamma_g=f * gamma, gamma_h=(1 - f) * gamma)
    _, res = single_pair.run_delta_pulse(p)
    assert res.eta_cavity == pytest.approx(validation.delta_pulse_exact(g, kappa, gamma), rel=1e-6, abs=1e-12)
    assert res.eta_direct == pytest.approx(f * (1 - res.eta_cavity), rel=1e-6, abs=1e-10)
    assert res.closure < 1e-8


def test_fig3_like_run(kappa_eq_gamma):
    p = kappa_eq_gamma(10)
    traj, res = single_pair.run_square_pulse(p)
    assert res.eta_cavity == pytest.approx(20 / 21, rel=0.02)
    assert res.p_i0_final < single_pair.TRANSFER_THRESHOLD
    assert res.residual < single_pair.RESIDUAL_THRESHOLD
    assert res.closure < 1e-6
    eta = traj.observables["eta_cum"]
    assert np.all(np.diff(eta) >= -1e-12)
    for name in single_pair.COLUMNS:
        assert name in traj.observables


def test_rk_and_exact_routes_agree(kappa_eq_gamma):
    p = kappa_eq_gamma(1)
    t_rk = single_pair.transfer_time_99_9(p, p.omega)
    t_ex = single_pair.transfer_time_99_9(p, p.omega, method="exact")
    assert t_rk == pytest.approx(t_ex, rel=2e-3)
    _, res = single_pair.run_square_pulse(p, p.omega, t_ex)
    exact = single_pair.square_pulse_efficiency_exact(p, p.omega, t_ex)
    assert res.eta_cavity == pytest.approx(exact.eta_cavity, abs=1e-7)
    assert res.p_i0_final == pytest.approx(exact.p_i0_final, abs=1e-9)


def test_transfer_time_meets_the_rule(kappa_eq_gamma):
    p = kappa_eq_gamma(10, omega_over_kappa=1.0)
    t = single_pair.transfer_time_99_9(p, p.omega, method="exact")
    model = single_pair.build_five_level(p)
    P = lindblad.propagator(model, 0.0, t)
    rho = (P @ lindblad.pure_state(5, I0).reshape(-1)).reshape(5, 5)
    assert rho[I0, I0].real < single_pair.TRANSFER_THRESHOLD
    P = lindblad.propagator(model, 0.0, t * (1 - 3e-3))
    rho = (P @ lindblad.pure_state(5, I0).reshape(-1)).reshape(5, 5)
    assert rho[I0, I0].real >= single_pair.TRANSFER_THRESHOLD


def test_zero_drive_never_transfers(kappa_eq_gamma):
    p = kappa_eq_gamma(1)
    with pytest.raises(TransferTimeoutError):
        single_pair.transfer_time_99_9(p, 0.0)


def test_square_pulse_rejects_bad_pulse():
    with pytest.raises(InvalidParameterError):
        single_pair.SquarePulse(1.0, -1.0)


def test_no_cavity_means_no_cavity_yield():
    p = analytics.SystemParams(g=0.0, kappa=mhz(3), gamma_g=mhz(1), gamma_h=mhz(11))
    _, res = single_pair.run_delta_pulse(p)
    assert res.eta_cavity == pytest.approx(0.0, abs=1e-14)
    assert res.eta_direct == pytest.approx(1 / 12, rel=1e-8)


def test_strong_drive_is_worse(kappa_eq_gamma):
    _, mid = single_pair.run_square_pulse(kappa_eq_gamma(1))
    _, fast = single_pair.run_square_pulse(kappa_eq_gamma(1, omega_over_kappa=3))
    assert fast.eta_cavity < mid.eta_cavity - 0.05
