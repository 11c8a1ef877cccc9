import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavchem import analytics, collective, lindblad, single_pair
from cavchem.analytics import mhz
from cavchem.collective import LE, LG, LH, LI, CollectiveBasis
from cavchem.errors import StructuralError, UnsupportedSizeError
from cavchem.lindblad import IntegratorConfig

GAMMA = mhz(12)


@pytest.fixture
def fig5_params():
    return analytics.SystemParams.from_cooperativity(1.0, 10 * GAMMA, GAMMA, f_fc=0.37)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_basis_dimension(n):
    b = CollectiveBasis(n)
    assert b.dim == 4**n * (n + 1)
    assert len(set(b.labels)) == b.dim


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 3), data=st.data())
def test_index_decode_inverse(n, data):
    b = CollectiveBasis(n)
    k = data.draw(st.integers(0, b.dim - 1))
    levels, photons = b.decode(k)
    assert b.index(levels, photons) == k


def test_ordering_molecule_one_slowest():
    b = CollectiveBasis(2)
    assert b.labels[0] == "ii,0"
    assert b.labels[1] == "ii,1"
    assert b.labels[3] == "ie,0"
    assert b.labels[b.index((LE, LI), 0)] == "ei,0"


def test_size_cap():
    with pytest.raises(UnsupportedSizeError):
        CollectiveBasis(4)


def test_single_molecule_reduces_to_five_level(fig5_params):
    p = fig5_params.replace(omega=mhz(20), delta1=mhz(3), delta2=mhz(-2))
    coll = collective.build_collective(1, p, p.omega)
    five = single_pair.build_five_level(p)
    b = CollectiveBasis(1)
    # map the five-level basis into the collective one
    idx = [b.index((LI,), 0), b.index((LE,), 0), b.index((LG,), 1), b.index((LG,), 0), b.index((LH,), 0)]
    Hc = coll.hamiltonian(0.0)[np.ix_(idx, idx)]
    np.testing.assert_allclose(Hc, five.hamiltonian(0.0), atol=1e-6)
    rho0 = lindblad.pure_state(5, single_pair.I0)
    rho0c = np.zeros((b.dim, b.dim), dtype=complex)
    rho0c[np.ix_(idx, idx)] = rho0
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-13, sample_interval=2e-8)
    a = lindblad.evolve(five, rho0, (0.0, 4e-7), cfg, diagnostics=False)
    c = lindblad.evolve(coll, rho0c, (0.0, 4e-7), cfg, diagnostics=False)
    np.testing.assert_allclose(c.final_state[np.ix_(idx, idx)], a.final_state, atol=1e-9)


def test_single_molecule_yield_matches_delta_pulse(fig5_params):
    p = fig5_params
    _, obs = collective.run_collective_decay(1, p, diagnostics=False)
    eta = analytics.eta_pi(p.g, p.kappa, p.gamma)
    assert obs.cavity_yield_per_molecule == pytest.approx(eta, rel=1e-6)
    _, res = single_pair.run_delta_pulse(p)
    assert obs.cavity_yield_per_molecule == pytest.approx(res.eta_cavity, abs=1e-6)


def test_uncoupled_molecules_decay_independently():
    p = analytics.SystemParams(g=0.0, kappa=GAMMA, gamma_g=GAMMA / 2, gamma_h=GAMMA / 2)
    traj, obs = collective.run_collective_decay(2, p, diagnostics=False)
    np.testing.assert_allclose(traj.observables["mean_excited"], np.exp(-GAMMA * traj.times), atol=1e-9)
    assert obs.cavity_yield_per_molecule == pytest.approx(0.0, abs=1e-14)


def test_symmetric_state_couples_with_sqrt2_g():
    g = 1.0
    p = analytics.SystemParams(g=g, kappa=0.0, gamma_g=1e-300, gamma_h=0.0)
    model = collective.build_collective(2, p)
    b = CollectiveBasis(2)
    H = model.hamiltonian(0.0)
    # one-excitation block spanned by |eg,0>, |ge,0>, |gg,1>
    idx = [b.index((LE, LG), 0), b.index((LG, LE), 0), b.index((LG, LG), 1)]
    ev = np.linalg.eigvalsh(H[np.ix_(idx, idx)])
    assert ev.max() - ev.min() == pytest.approx(2 * math.sqrt(2) * g, rel=1e-12)


def test_excitation_number_conserved_without_loss():
    p = analytics.SystemParams(g=2.0, kappa=0.0, gamma_g=1e-300, gamma_h=0.0)
    model = collective.build_collective(2, p)
    b = CollectiveBasis(2)
    obs, _ = collective.observable_ops(b, p)
    total = 2 * obs["mean_excited"] + obs["mean_photon"]
    traj = lindblad.evolve(model, collective.initial_excited(b), (0.0, 5.0),
                           IntegratorConfig(sample_interval=0.1), observables={"n": total}, diagnostics=False)
    np.testing.assert_allclose(traj.observables["n"], 2.0, atol=1e-9)


def test_permutation_symmetry(fig5_params):
    p = fig5_params
    b = CollectiveBasis(3)
    model = collective.build_collective(3, p)
    obs, _ = collective.observable_ops(b, p)
    cfg = IntegratorConfig(sample_interval=2e-9)
    levels = [LE, LG, LI]
    finals = []
    for perm in ([0, 1, 2], [2, 0, 1], [1, 2, 0]):
        rho0 = lindblad.pure_state(b.dim, b.index([levels[k] for k in perm], 0))
        tr = lindblad.evolve(model, rho0, (0.0, 2e-8), cfg, observables=obs, diagnostics=False)
        finals.append([tr.final(k) for k in obs])
    np.testing.assert_allclose(finals[0], finals[1], atol=1e-10)
    np.testing.assert_allclose(finals[0], finals[2], atol=1e-10)


def test_photon_cutoff_is_exact_under_drive(fig5_params):
    k, _ = collective.converged_cutoff(2, fig5_params, GAMMA, 2e-7)
    assert k == 2


def test_yield_requires_accumulator():
    traj = lindblad.Trajectory(np.zeros(1), {}, {}, np.eye(2))
    with pytest.raises(StructuralError):
        collective.collective_yield(traj, 1)


def test_collective_enhancement(fig5_params):
    yields, rates = [], []
    for n in (1, 2, 3):
        traj, obs = collective.run_collective_decay(n, fig5_params, diagnostics=(n == 2))
        yields.append(obs.cavity_yield_per_molecule)
        rates.append(collective.decay_rate(traj))
        if n == 2:
            assert traj.diagnostics["min_eigenvalue"].min() > -1e-8
            assert np.all(np.diff(traj.observables["cavity_yield_cumulative"]) >= -1e-12)
    assert yields[0] < yields[1] < yields[2]
    assert rates[0] < rates[1] < rates[2]
