import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavchem import lindblad
from cavchem.errors import InvalidParameterError, StructuralError
from cavchem.lindblad import CollapseOp, IntegratorConfig, LindbladModel

TIGHT = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-13)


def two_level(gamma=1.0, omega=0.0, detuning=0.0, breakpoints=()):
    H = np.array([[0, omega / 2], [omega / 2, detuning]], dtype=complex)
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    return LindbladModel(lambda t: H, [CollapseOp(math.sqrt(gamma) * lower, "decay")], ("g", "e"), breakpoints)


def random_model(rng, d, n_jumps):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = A + A.conj().T
    jumps = [CollapseOp(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) for _ in range(n_jumps)]
    return LindbladModel(lambda t: H, jumps, tuple(str(i) for i in range(d)))


def random_state(rng, d):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


def test_spontaneous_decay_matches_exponential():
    gamma = 2.5
    model = two_level(gamma)
    traj = lindblad.evolve(model, lindblad.pure_state(2, 1), (0.0, 3.0), TIGHT,
                           observables={"pe": lindblad.projector(2, 1)},
                           accumulators={"emitted": gamma * lindblad.projector(2, 1)})
    np.testing.assert_allclose(traj.observables["pe"], np.exp(-gamma * traj.times), atol=1e-10)
    np.testing.assert_allclose(traj.accumulators["emitted"], 1 - np.exp(-gamma * traj.times), atol=1e-10)


def test_rabi_oscillation_without_decay():
    omega = 3.0
    model = two_level(0.0, omega)
    traj = lindblad.evolve(model, lindblad.pure_state(2, 0), (0.0, 4.0), TIGHT,
                           observables={"pe": lindblad.projector(2, 1)})
    np.testing.assert_allclose(traj.observables["pe"], np.sin(omega * traj.times / 2) ** 2, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 5), n=st.integers(0, 3))
def test_superoperator_matches_matrix_form(seed, d, n):
    rng = np.random.default_rng(seed)
    model = random_model(rng, d, n)
    rho = random_state(rng, d)
    vec = lindblad.superoperator(model, 0.0) @ rho.reshape(-1)
    np.testing.assert_allclose(vec.reshape(d, d), lindblad.liouvillian_apply(model, rho), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 4))
def test_generator_is_trace_free_and_hermiticity_preserving(seed, d):
    rng = np.random.default_rng(seed)
    model = random_model(rng, d, 2)
    rho = random_state(rng, d)
    drho = lindblad.liouvillian_apply(model, rho)
    assert abs(np.trace(drho)) < 1e-10
    np.testing.assert_allclose(drho, drho.conj().T, atol=1e-10)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_evolution_keeps_a_physical_state(seed):
    rng = np.random.default_rng(seed)
    model = random_model(rng, 3, 2)
    traj = lindblad.evolve(model, random_state(rng, 3), (0.0, 1.0), IntegratorConfig(sample_interval=0.05))
    assert traj.diagnostics["trace_dev"].max() < 1e-9
    assert traj.diagnostics["hermiticity_dev"].max() < 1e-10
    assert traj.diagnostics["min_eigenvalue"].min() > -1e-8


def test_accumulator_equals_propagator_result():
    model = two_level(1.3, 2.0, 0.4)
    acc = {"pe": lindblad.projector(2, 1)}
    traj = lindblad.evolve(model, lindblad.pure_state(2, 0), (0.0, 2.0), TIGHT, accumulators=acc)
    P = lindblad.propagator(model, 0.0, 2.0, list(acc.values()))
    y0 = np.zeros(5, dtype=complex)
    y0[0] = 1.0
    y = P @ y0
    assert traj.final("pe") == pytest.approx(y[4].real, abs=1e-10)
    np.testing.assert_allclose(traj.final_state.reshape(-1), y[:4], atol=1e-10)


def test_breakpoint_switches_hamiltonian():
    t_off = 0.7
    omega = 4.0
    Hon = np.array([[0, omega / 2], [omega / 2, 0]], dtype=complex)
    Hoff = np.zeros((2, 2), dtype=complex)
    model = LindbladModel(lambda t: Hon if t < t_off else Hoff, [], ("g", "e"), (t_off,))
    traj = lindblad.evolve(model, lindblad.pure_state(2, 0), (0.0, 2.0), TIGHT,
                           observables={"pe": lindblad.projector(2, 1)})
    after = traj.times > t_off
    np.testing.assert_allclose(traj.observables["pe"][after], math.sin(omega * t_off / 2) ** 2, atol=1e-9)


def test_sample_grid_is_deterministic():
    model = two_level(1.0)
    cfg = IntegratorConfig(sample_interval=0.1)
    a = lindblad.evolve(model, lindblad.pure_state(2, 1), (0.0, 1.05), cfg)
    b = lindblad.evolve(model, lindblad.pure_state(2, 1), (0.0, 1.05), cfg)
    assert a.times[-1] == 1.05
    np.testing.assert_allclose(np.diff(a.times[:-1]), 0.1)
    assert np.array_equal(a.final_state, b.final_state)


def test_stop_condition_ends_early():
    model = two_level(1.0)
    traj = lindblad.evolve(model, lindblad.pure_state(2, 1), (0.0, 50.0), IntegratorConfig(sample_interval=0.5),
                           stop=lambda t, rho, acc: rho[1, 1].real < 1e-3)
    assert traj.stopped_early
    assert traj.final_state[1, 1].real < 1e-3
    assert traj.times[-1] < 50.0


def test_structural_errors():
    with pytest.raises(StructuralError):
        LindbladModel(lambda t: np.array([[0, 1], [0, 0]], dtype=complex), [], ("a", "b"))
    with pytest.raises(StructuralError):
        LindbladModel(lambda t: np.zeros((2, 2)), [CollapseOp(np.zeros((3, 3)))], ("a", "b"))
    model = two_level()
    with pytest.raises(StructuralError):
        lindblad.evolve(model, np.eye(3), (0.0, 1.0))
    with pytest.raises(InvalidParameterError):
        lindblad.evolve(model, np.eye(2) / 2, (1.0, 0.0))
    with pytest.raises(InvalidParameterError):
        IntegratorConfig(rel_tol=0.0)


def test_check_state_reports_defects():
    bad = np.array([[1.1, 0.2], [0.0, -0.1]], dtype=complex)
    d = lindblad.check_state(bad)
    assert d["trace_dev"] == pytest.approx(0.0, abs=1e-15)
    assert d["hermiticity_dev"] == pytest.approx(0.2)
    assert d["min_eigenvalue"] < 0


def test_quasi_steady_state_two_level():
    # drive g <-> e, decay e -> g: the textbook steady state
    gamma, omega = 1.0, 0.3
    model = two_level(gamma, omega)
    H = model.hamiltonian(0.0)
    closed = LindbladModel(lambda t: H, model.collapses, ("g", "e"))
    rho = lindblad.quasi_steady_state(closed, 1e-12, (), "g")
    pe = (omega**2 / 4) / (gamma**2 / 4 + omega**2 / 2)
    assert rho[1, 1].real == pytest.approx(pe, rel=1e-9)
