import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.optimize import brentq

from qlmeas.dynamics import (IntegrationControls, Propagator, Trajectory,
                             crossing_times, evolution_generator,
                             evolve_density, integrate_bloch,
                             integrate_propagator, rhs_bloch, rhs_density,
                             rhs_propagator)
from qlmeas.errors import DomainError, InvalidStateError
from qlmeas.generators import (DrivingGenerator, InvertedMorse, Observable,
                               Tabulated, Window, dot_sigma)
from qlmeas.linalg import bloch_to_density, density_to_bloch

from conftest import make_scenario, random_bloch

seeds = st.integers(0, 2**32 - 1)


# ---------------------------------------------------------------- controls

def test_controls_validation():
    with pytest.raises(DomainError):
        IntegrationControls(t_end=-1.0)
    with pytest.raises(DomainError):
        IntegrationControls(t_end=1.0, rtol=0.0)
    with pytest.raises(DomainError):
        IntegrationControls(t_end=1.0, output_points=1)
    with pytest.raises(DomainError):
        IntegrationControls(t_end=1.0, output_spacing="cubic")
    with pytest.raises(DomainError):
        IntegrationControls(t_end=1.0, t_first_output=2.0)


def test_geometric_grid_endpoints():
    c = IntegrationControls(t_end=1e-4, output_points=77)
    g = c.grid()
    assert len(g) == 77
    assert g[0] == pytest.approx(1e-10, rel=1e-12)
    assert g[-1] == 1e-4          # exact, not approximately
    assert np.all(np.diff(g) > 0)


def test_linear_grid_includes_zero():
    c = IntegrationControls(t_end=2e-5, output_points=11,
                            output_spacing="linear")
    g = c.grid()
    assert g[0] == 0.0
    assert g[-1] == 2e-5
    np.testing.assert_allclose(np.diff(g), 2e-6, rtol=1e-12)


# ------------------------------------------------------------ right sides

@given(seeds)
@settings(max_examples=60, deadline=None)
def test_rhs_bloch_oracle(seed):
    rng = np.random.default_rng(seed)
    sc = make_scenario()
    n = random_bloch(rng)
    t = float(rng.uniform(0.0, 1e-4))
    got = rhs_bloch(n, t, sc.observable, sc.driving)
    g = sc.driving.profile.value(t)
    lam, ghat = sc.driving.lam, sc.driving.ghat
    want = (np.cross(sc.observable.omega_vec, n)
            + lam * g * (ghat - np.dot(ghat, n) * n))
    np.testing.assert_allclose(got, want, rtol=1e-13, atol=1e-4)


@given(seeds)
@settings(max_examples=60, deadline=None)
def test_norm_growth_identity(seed):
    # n . dn/dt = lam g (ghat . n) (1 - |n|^2): radial growth is
    # controlled entirely by the drive alignment and the purity deficit
    rng = np.random.default_rng(seed)
    sc = make_scenario()
    n = random_bloch(rng)
    t = float(rng.uniform(0.0, 1e-4))
    dn = rhs_bloch(n, t, sc.observable, sc.driving)
    g = sc.driving.profile.value(t)
    lam, ghat = sc.driving.lam, sc.driving.ghat
    want = lam * g * np.dot(ghat, n) * (1.0 - np.dot(n, n))
    assert np.dot(n, dn) == pytest.approx(want, rel=1e-10, abs=1e-3)


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_rhs_density_traceless_and_matches_bloch(seed):
    rng = np.random.default_rng(seed)
    sc = make_scenario()
    n = random_bloch(rng)
    rho = bloch_to_density(n)
    t = float(rng.uniform(0.0, 1e-4))
    drho = rhs_density(rho, t, sc.observable, sc.driving)
    assert abs(np.trace(drho)) < 1e-12 * sc.observable.omega
    # the Bloch image of the density flow is the Bloch flow
    dn_from_rho = np.array([np.trace(drho @ p).real
                            for p in __import__("qlmeas.linalg",
                                                fromlist=["PAULI"]).PAULI])
    dn = rhs_bloch(n, t, sc.observable, sc.driving)
    np.testing.assert_allclose(dn_from_rho, dn, rtol=1e-12, atol=1e-3)


def test_rhs_propagator_is_linear(scenario):
    rng = np.random.default_rng(7)
    k1 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    k2 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    t = 3e-6
    a, b = 0.7, -1.3 + 0.4j
    lhs = rhs_propagator(a * k1 + b * k2, t, scenario.observable,
                         scenario.driving)
    rhs = (a * rhs_propagator(k1, t, scenario.observable, scenario.driving)
           + b * rhs_propagator(k2, t, scenario.observable,
                                scenario.driving))
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


def test_evolution_generator_oracle(scenario):
    t = 5e-6
    obs, gen = scenario.observable, scenario.driving
    g = gen.profile.value(t)
    want = (0.5 * gen.lam * g * dot_sigma(gen.ghat)
            - 0.5j * dot_sigma(obs.omega_vec))
    np.testing.assert_allclose(evolution_generator(obs, gen, t), want,
                               rtol=1e-14)


# ------------------------------------------------------------- propagators

def test_propagator_free_precession_matches_expm(observable):
    ctl = IntegrationControls(t_end=3e-8, output_points=24)
    props = integrate_propagator(observable, None, ctl)
    h = 0.5 * dot_sigma(observable.omega_vec)
    for p in props:
        want = expm(-1j * p.t * h)
        got = p.matrix * np.exp(p.log_scale)
        np.testing.assert_allclose(got, want, atol=1e-10)


def test_propagator_constant_drive_matches_expm(observable):
    # PCHIP through constant samples is exactly constant, so the
    # analytic time-ordered product collapses to a single exponential;
    # the horizon is kept short enough that exp(log_scale) stays
    # representable and the comparison can be done in linear scale
    g = 6e8
    prof = Tabulated(((0.0, g), (5e-5, g), (1e-4, g)))
    gen = DrivingGenerator.from_polar(+1, np.pi / 6, -np.pi / 3, prof)
    ctl = IntegrationControls(t_end=1.5e-6, output_points=30)
    props = integrate_propagator(observable, gen, ctl)
    a = (0.5 * g * dot_sigma(gen.ghat)
         - 0.5j * dot_sigma(observable.omega_vec))
    for p in props[::5]:
        want = expm(a * p.t)
        got = p.matrix * np.exp(p.log_scale)
        scale = np.linalg.norm(want)
        np.testing.assert_allclose(got, want, rtol=1e-7,
                                   atol=1e-8 * scale)


def test_propagator_identity_at_zero(observable, driving):
    ctl = IntegrationControls(t_end=1e-5, output_points=6,
                              output_spacing="linear")
    props = integrate_propagator(observable, driving, ctl)
    assert props[0].t == 0.0
    np.testing.assert_array_equal(props[0].matrix, np.eye(2))
    assert props[0].log_scale == 0.0


def test_propagator_norm_band(scenario):
    props = integrate_propagator(scenario.observable, scenario.driving,
                                 scenario.controls)
    for p in props:
        f = np.linalg.norm(p.matrix)
        assert 0.25 <= f <= 4.0


# ------------------------------------------------------------ route checks

def test_density_route_matches_bloch_route():
    sc = make_scenario(t_end=4e-5, output_points=100)
    traj = integrate_bloch(sc.initial_bloch, sc.observable, sc.driving,
                           sc.controls)
    dens = evolve_density(sc.initial_density, sc.observable, sc.driving,
                          sc.controls)
    np.testing.assert_allclose(dens.bloch, traj.bloch, atol=5e-12)
    assert dens.meta["trace_drift"] < 1e-12


def test_pure_state_stays_pure():
    sc = make_scenario(t_end=4e-5, n0=[0.6, 0.0, 0.8])
    traj = integrate_bloch(sc.initial_bloch, sc.observable, sc.driving,
                           sc.controls)
    assert np.max(np.abs(traj.norm - 1.0)) < 100 * sc.controls.rtol


def test_free_precession_conserves_axis_component(observable):
    ctl = IntegrationControls(t_end=6.3e-8, output_points=60)
    n0 = np.array([0.1, -0.7, 0.3])
    traj = integrate_bloch(n0, observable, None, ctl)
    w = observable.omega_hat
    np.testing.assert_allclose(traj.bloch @ w, np.dot(n0, w), atol=1e-10)
    np.testing.assert_allclose(traj.norm, np.linalg.norm(n0), atol=1e-10)


def test_evolve_density_rejects_negative_density(scenario):
    bad = np.array([[1.2, 0.0], [0.0, -0.2]], dtype=complex)
    with pytest.raises(InvalidStateError):
        evolve_density(bad, scenario.observable, scenario.driving,
                       scenario.controls)


# --------------------------------------------------------------- crossings

def test_crossings_against_root_finder(observable):
    prof = Window(2e9, 1e-6, 8e-5, 4e-6)
    gen = DrivingGenerator.from_polar(+1, np.pi / 6, -np.pi / 3, prof)
    got = crossing_times(observable, gen, 1.2e-4)
    assert len(got) == 2
    f = lambda t: prof.value(t) - observable.omega
    up = brentq(f, 1e-6, 1e-6 + 4e-6, xtol=1e-18)
    down = brentq(f, 8e-5 - 4e-6, 8e-5, xtol=1e-18)
    np.testing.assert_allclose(got, [up, down], rtol=1e-7)


def test_crossings_morse_against_root_finder(observable):
    prof = InvertedMorse(3e9, 1e5)
    gen = DrivingGenerator.from_polar(+1, np.pi / 6, -np.pi / 3, prof)
    got = crossing_times(observable, gen, prof.default_t_end())
    assert len(got) == 2
    f = lambda t: prof.value(t) - observable.omega
    tp = prof.peak_time()
    up = brentq(f, 1e-9, tp, xtol=1e-18)
    down = brentq(f, tp, 1e-3, xtol=1e-18)
    np.testing.assert_allclose(got, [up, down], rtol=1e-7)


def test_no_crossings_below_threshold(observable):
    prof = InvertedMorse(5e8, 1e5)   # peak below omega
    gen = DrivingGenerator.from_polar(+1, np.pi / 6, -np.pi / 3, prof)
    assert len(crossing_times(observable, gen, 1e-4)) == 0


def test_no_crossings_without_drive(observable):
    assert len(crossing_times(observable, None, 1e-4)) == 0


# ------------------------------------------------------------- containers

def test_trajectory_validates_monotone_times():
    t = np.array([0.0, 2.0, 1.0])
    b = np.zeros((3, 3))
    with pytest.raises(InvalidStateError):
        Trajectory(times=t, bloch=b, norm=np.zeros(3), rate=np.zeros(3),
                   crossings=np.empty(0), branch=1)


def test_trajectory_validates_norm_bound():
    t = np.array([0.0, 1.0])
    b = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    with pytest.raises(InvalidStateError):
        Trajectory(times=t, bloch=b, norm=np.linalg.norm(b, axis=1),
                   rate=np.zeros(2), crossings=np.empty(0), branch=1)


def test_propagator_validates_norm_band():
    with pytest.raises(InvalidStateError):
        Propagator(matrix=np.eye(2) * 100.0, log_scale=0.0, t=1.0)
