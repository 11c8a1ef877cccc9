import math

import pytest

from cavchem import analytics, optimizer, single_pair
from cavchem.analytics import mhz
from cavchem.errors import ConstraintInfeasibleError, InvalidParameterError

GAMMA = mhz(12)
G_MAX = mhz(80)


def params(f_fc, kappa_mhz):
    g, _ = analytics.scale_by_fc(G_MAX, 0.0, f_fc)
    return analytics.SystemParams(g=g, kappa=mhz(kappa_mhz), gamma_g=f_fc * GAMMA, gamma_h=(1 - f_fc) * GAMMA)


@pytest.fixture(scope="module")
def operating_point():
    return optimizer.optimize_pulse(params(0.1, 3.0), 0.1)


def test_optimum_satisfies_constraint(operating_point):
    opt = operating_point
    assert not opt.unbounded
    assert opt.inefficiency <= opt.limit * (1 + 1e-12)
    # the next trial above Omega* violates the budget
    above = [t for t in opt.trials if t.omega > opt.omega_star]
    assert above and not above[0].feasible
    assert above[0].omega / opt.omega_star <= 1 + optimizer.REL_PRECISION + 1e-12


def test_optimum_replays(operating_point):
    opt = operating_point
    p = params(0.1, 3.0)
    t_p, res = optimizer.evaluate(p, opt.omega_star)
    assert t_p == opt.t_p_star
    assert res.eta_transferred == pytest.approx(opt.eta, abs=1e-4)
    # adaptive integrator replay of the same pulse
    _, rk = single_pair.run_square_pulse(p, opt.omega_star, opt.t_p_star)
    assert rk.eta_transferred == pytest.approx(opt.eta, abs=1e-4)


def test_trials_are_monotone(operating_point):
    assert optimizer._monotone(operating_point.trials)
    assert not operating_point.fallback


def test_large_kappa_is_unbounded():
    p = params(0.1, 3.0)
    k_th = analytics.pi_pulse_kappa_threshold(p.g, p.gamma, 0.1)
    high = optimizer.optimize_pulse(p.replace(kappa=1.2 * k_th), 0.1)
    assert high.unbounded
    low = optimizer.optimize_pulse(p.replace(kappa=0.8 * k_th), 0.1)
    assert not low.unbounded


def test_vanishing_budget_is_infeasible():
    # a vanishing epsilon cannot be met even by the slowest trial
    p = params(0.1, 3.0)
    with pytest.raises((ConstraintInfeasibleError, InvalidParameterError)):
        optimizer.optimize_pulse(p, 1e-9)


def test_input_validation():
    p = params(0.1, 3.0)
    with pytest.raises(InvalidParameterError):
        optimizer.optimize_pulse(p, 0.0)
    with pytest.raises(InvalidParameterError):
        optimizer.optimize_pulse(p.replace(delta2=1.0), 0.1)
    with pytest.raises(InvalidParameterError):
        optimizer.scan_kappa([], [mhz(1)], 0.1, G_MAX, GAMMA)


def test_scan_is_deterministic_and_ordered():
    kw = dict(f_fc_list=[0.1, 0.05], kappa_grid=[mhz(2), mhz(3)], epsilon=0.1, g_max=G_MAX, gamma=GAMMA)
    a = optimizer.scan_kappa(**kw)
    b = optimizer.scan_kappa(**kw)
    assert a == b
    assert [(r.f_fc, r.kappa) for r in a] == [(0.1, mhz(2)), (0.1, mhz(3)), (0.05, mhz(2)), (0.05, mhz(3))]
    assert all(r.status == "ok" for r in a)
    assert all(0.5 <= r.omega_star / r.kappa <= 2 for r in a)
    # t_p grows with f_fc at fixed kappa
    assert a[0].t_p_star > a[2].t_p_star
    assert all(math.isfinite(r.inefficiency) for r in a)
