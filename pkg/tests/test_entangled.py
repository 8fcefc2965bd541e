import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlmeas.dynamics import IntegrationControls, integrate_propagator
from qlmeas.entangled import (local_evolve, local_von_neumann, reduced_A,
                              reduced_B, run_entangled_measurement)
from qlmeas.linalg import (TwoQubitState, partial_trace,
                           two_qubit_assemble)
from qlmeas.measurement import (Scenario, kraus_state, projector_for_branch,
                                run_measurement)

from conftest import make_scenario, random_bloch

seeds = st.integers(0, 2**32 - 1)

S6 = 1.0 / np.sqrt(6.0)
S3 = 1.0 / np.sqrt(3.0)
CORRELATED = TwoQubitState(
    nA=np.array([0.0, 0.0, S6]),
    nB=np.array([0.0, 0.0, S6]),
    T=np.diag([S6, -S6, S3]),
)


def _random_state(rng):
    # mixing product states keeps the operator inside the positivity
    # cone while making the correlation tensor non-trivial; the
    # parametrization is linear, so mix the components directly
    na1, nb1 = random_bloch(rng), random_bloch(rng)
    na2, nb2 = random_bloch(rng), random_bloch(rng)
    w = rng.uniform(0.2, 0.8)
    return TwoQubitState(
        nA=w * na1 + (1 - w) * na2,
        nB=w * nb1 + (1 - w) * nb2,
        T=w * np.outer(na1, nb1) + (1 - w) * np.outer(na2, nb2),
    )


def _random_kraus(rng):
    return rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_marginal_closed_forms_match_partial_traces(seed):
    rng = np.random.default_rng(seed)
    state = _random_state(rng)
    k = _random_kraus(rng)
    joint = local_evolve(state, k)
    np.testing.assert_allclose(reduced_A(state, k),
                               partial_trace(joint, "A"), atol=1e-10)
    np.testing.assert_allclose(reduced_B(state, k),
                               partial_trace(joint, "B"), atol=1e-10)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_reduced_A_is_the_single_qubit_map(seed):
    rng = np.random.default_rng(seed)
    state = _random_state(rng)
    k = _random_kraus(rng)
    rho_a0 = 0.5 * (np.eye(2) + state.nA[0] * np.array([[0, 1], [1, 0]])
                    + state.nA[1] * np.array([[0, -1j], [1j, 0]])
                    + state.nA[2] * np.diag([1, -1]))
    np.testing.assert_allclose(reduced_A(state, k),
                               kraus_state(k, rho_a0), atol=1e-12)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_product_state_B_marginal_never_moves(seed):
    rng = np.random.default_rng(seed)
    na, nb = random_bloch(rng), random_bloch(rng)
    state = TwoQubitState(na, nb, np.outer(na, nb))
    k = _random_kraus(rng)
    rb = reduced_B(state, k)
    rb0 = 0.5 * (np.eye(2) + nb[0] * np.array([[0, 1], [1, 0]])
                 + nb[1] * np.array([[0, -1j], [1j, 0]])
                 + nb[2] * np.diag([1, -1]))
    np.testing.assert_allclose(rb, rb0, atol=1e-12)


def test_local_von_neumann_matches_projector_as_kraus(observable):
    p = projector_for_branch(observable, +1)
    joint, ra, rb = local_von_neumann(CORRELATED, p)
    want = local_evolve(CORRELATED, p)
    np.testing.assert_allclose(joint, want, atol=1e-14)
    np.testing.assert_allclose(ra, partial_trace(want, "A"), atol=1e-14)
    np.testing.assert_allclose(rb, partial_trace(want, "B"), atol=1e-14)


def test_branch_probability_comes_from_A_marginal(observable, driving):
    ctl = IntegrationControls(t_end=2e-5, output_points=30)
    sc = Scenario(observable, driving, CORRELATED.nA, ctl)
    rec = run_entangled_measurement(CORRELATED, sc, mode="plus")
    want = 0.5 * (1 + float(observable.omega_hat @ CORRELATED.nA))
    assert rec.probability == pytest.approx(want, abs=1e-15)


def test_no_signaling_for_product_states(observable, driving):
    rng = np.random.default_rng(7)
    na, nb = random_bloch(rng), random_bloch(rng)
    state = TwoQubitState(na, nb, np.outer(na, nb))
    sc = make_scenario(t_end=6e-5, n0=na, output_points=80)
    rec = run_entangled_measurement(state, sc, mode="plus")
    # B never learns about the measurement on A
    drift = np.linalg.norm(rec.bloch_B - nb[None, :], axis=1).max()
    assert drift < 1e-9
    # and A behaves exactly as the lone qubit would
    single = run_measurement(sc, mode="plus", cross_check=False)
    # the propagator route walks its own grid values, so compare the
    # common physical content, not bitwise arrays
    dev = np.linalg.norm(rec.trajectory.bloch - single.trajectory.bloch,
                         axis=1).max()
    assert dev < 1e-7


def test_entangled_grid_matches_controls(observable, driving):
    ctl = IntegrationControls(t_end=3e-5, output_points=40)
    sc = Scenario(observable, driving, CORRELATED.nA, ctl)
    rec = run_entangled_measurement(CORRELATED, sc, mode="minus")
    np.testing.assert_array_equal(rec.trajectory.times, ctl.grid())
    assert rec.bloch_B.shape == (40, 3)
    assert rec.corr.shape == (40, 3, 3)


def test_entangled_record_self_consistency(observable, driving):
    sc = make_scenario(t_end=None, n0=CORRELATED.nA, output_points=120)
    rec = run_entangled_measurement(CORRELATED, sc, mode="plus")
    assert rec.converged
    np.testing.assert_allclose(rec.final_bloch,
                               observable.omega_hat, atol=1e-5)
    assert rec.min_eigenvalue > -1e-9
    dev_a, dev_b = rec.meta["marginal_closed_form_deviation"]
    assert dev_a < 1e-10 and dev_b < 1e-10
    # projective reference for B reproduced by the evolved endpoint in
    # direction, far better than chance, but not to measurement accuracy
    assert np.linalg.norm(rec.final_bloch_B - rec.vn_reference_B) < 1e-3


def test_entangled_sampled_mode_uses_A_marginal(observable, driving):
    ctl = IntegrationControls(t_end=1e-5, output_points=10)
    # nA = +omega_hat makes the minus branch impossible
    sc = Scenario(observable, driving, observable.omega_hat, ctl, seed=3)
    state = TwoQubitState(observable.omega_hat, np.zeros(3),
                          np.zeros((3, 3)))
    rec = run_entangled_measurement(state, sc, mode="sampled")
    assert rec.branch == 1
    assert rec.probability == pytest.approx(1.0, abs=1e-12)
