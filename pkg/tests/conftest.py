import numpy as np
import pytest

from qlmeas.dynamics import IntegrationControls
from qlmeas.generators import DrivingGenerator, InvertedMorse, Observable
from qlmeas.measurement import Scenario

# The pulsed scenario used throughout: a tilted observable measured
# through an inverted-Morse pulse, generic non-critical geometry.
OMEGA = 1e9
ALPHA = np.pi / 3
BETA = np.pi / 6
THETA = np.pi / 6
PHI = -np.pi / 3
G0 = 1e9
KAPPA = 1e5
N0 = np.array([-0.5, 0.0, -0.5])


@pytest.fixture(scope="session")
def observable():
    return Observable.from_polar(OMEGA, ALPHA, BETA)


@pytest.fixture(scope="session")
def driving():
    return DrivingGenerator.from_polar(+1, THETA, PHI,
                                       InvertedMorse(G0, KAPPA))


def make_scenario(t_end=None, rtol=1e-10, atol=1e-12, n0=None, seed=0,
                  output_points=400, lam=+1):
    obs = Observable.from_polar(OMEGA, ALPHA, BETA)
    gen = DrivingGenerator.from_polar(lam, THETA, PHI,
                                      InvertedMorse(G0, KAPPA))
    if t_end is None:
        t_end = gen.profile.default_t_end()
    ctl = IntegrationControls(t_end=t_end, rtol=rtol, atol=atol,
                              output_points=output_points)
    return Scenario(obs, gen, N0 if n0 is None else np.asarray(n0, float),
                    ctl, seed)


@pytest.fixture(scope="session")
def scenario():
    return make_scenario()


@pytest.fixture(scope="session")
def short_scenario():
    # drive region only; enough to exercise every code path quickly
    return make_scenario(t_end=4e-5, output_points=120)


def random_bloch(rng, pure=False):
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    if not pure:
        v *= rng.random() ** (1.0 / 3.0)
    return v
