"""Property-check engines for the conditional evolution.

Three families of checks, each returning a report with the full residual
curve (maxima alone hide where in time a regression lives):

  check_quasilinearity      a mixture evolves to the same mixture of the
                            evolved components, with the transported
                            coefficient taken from the propagator
  check_ensemble_equivalence  two decompositions of one state stay
                            decompositions of one state
  cross_validate            the three integration routes agree pointwise

All residuals are Frobenius norms on density matrices, the one distance
used throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (evolve_density, integrate_bloch, integrate_propagator)
from .errors import BranchExtinctionError, DomainError
from .generators import theta_angle
from .linalg import (bloch_to_density, density_to_bloch, frobenius,
                     require_density)
from .measurement import Scenario, epsilon_of_t, kraus_state


@dataclass
class QuasilinearityReport:
    """Residuals of the mixture identity along one scenario.

    epsilon_violation is the largest distance of the transported
    coefficient outside [0, 1] beyond the roundoff clamp (0.0 when the
    coefficient stayed in range).  extinct_time is set when the mixture
    weight collapsed mid-run; residuals then cover the surviving prefix.
    """

    times: np.ndarray
    residuals: np.ndarray
    epsilon: np.ndarray
    max_residual: float
    epsilon_violation: float
    extinct_time: float | None = None
    meta: dict = field(default_factory=dict)


@dataclass
class EnsembleReport:
    times: np.ndarray
    residuals: np.ndarray
    max_residual: float
    initial_mismatch: float
    meta: dict = field(default_factory=dict)


@dataclass
class CrossValidateReport:
    """Pairwise route disagreement curves (Frobenius, density picture)."""

    times: np.ndarray
    bloch_vs_density: np.ndarray
    bloch_vs_kraus: np.ndarray
    density_vs_kraus: np.ndarray
    max_pairwise: float
    near_critical: bool
    meta: dict = field(default_factory=dict)


def _branch_gen(scenario: Scenario):
    return scenario.driving  # checks run the drive exactly as configured


def _propagators(scenario: Scenario, props):
    if props is not None:
        return props
    return integrate_propagator(scenario.observable, _branch_gen(scenario),
                                scenario.controls)


def check_quasilinearity(rho_a0, rho_b0, eps0: float, scenario: Scenario,
                         props=None) -> QuasilinearityReport:
    """Evolve rho_a0, rho_b0 and their eps0-mixture independently and
    measure how far the evolved mixture drifts from the transported
    combination eps(t) a(t) + (1 - eps(t)) b(t).

    props may carry precomputed propagator samples for this scenario's
    grid (they are state independent, so one set serves any number of
    component pairs).  A mid-run branch extinction is reported in the
    result, not raised.
    """
    rho_a0 = require_density(np.asarray(rho_a0, dtype=complex))
    rho_b0 = require_density(np.asarray(rho_b0, dtype=complex))
    if not 0.0 <= eps0 <= 1.0:
        raise DomainError(f"eps0 must lie in [0, 1], got {eps0}")
    mix0 = eps0 * rho_a0 + (1.0 - eps0) * rho_b0
    obs, gen, ctl = scenario.observable, _branch_gen(scenario), \
        scenario.controls
    # components ride the ball-coordinate integrator: the matrix picture
    # drags the full-size commutator through every stage, and its roundoff
    # freezes into the tail once the drive dies instead of tracking rtol
    ta = integrate_bloch(density_to_bloch(rho_a0), obs, gen, ctl)
    tb = integrate_bloch(density_to_bloch(rho_b0), obs, gen, ctl)
    tm = integrate_bloch(density_to_bloch(mix0), obs, gen, ctl)
    props = _propagators(scenario, props)

    n = len(tm.times)
    residuals = np.empty(n)
    epsilon = np.empty(n)
    extinct_time = None
    rho_a = np.stack([bloch_to_density(v) for v in ta.bloch])
    rho_b = np.stack([bloch_to_density(v) for v in tb.bloch])
    rho_m = np.stack([bloch_to_density(v) for v in tm.bloch])
    for j in range(n):
        try:
            e = epsilon_of_t(props[j], rho_a0, mix0, eps0)
        except BranchExtinctionError:
            extinct_time = float(tm.times[j])
            residuals = residuals[:j]
            epsilon = epsilon[:j]
            break
        epsilon[j] = e
        residuals[j] = frobenius(
            rho_m[j] - e * rho_a[j] - (1.0 - e) * rho_b[j]
        )
    below = np.clip(-epsilon, 0.0, None)
    above = np.clip(epsilon - 1.0, 0.0, None)
    return QuasilinearityReport(
        times=tm.times[:len(residuals)],
        residuals=residuals,
        epsilon=epsilon,
        max_residual=float(residuals.max()) if len(residuals) else 0.0,
        epsilon_violation=float(max(below.max(), above.max()))
        if len(epsilon) else 0.0,
        extinct_time=extinct_time,
        meta={"eps0": eps0},
    )


def check_ensemble_equivalence(decomp_a, decomp_b,
                               scenario: Scenario,
                               props=None) -> EnsembleReport:
    """Two decompositions (rho_x, rho_y, eps) of the same initial state
    must evolve into decompositions of the same state at every time.

    The reconstructed states (with transported coefficients) are
    compared pairwise; the decompositions themselves must agree on the
    initial state within 1e-12 or the call is a usage error.
    """
    ra0, rb0, ea = decomp_a
    rc0, rd0, eb = decomp_b
    ra0 = require_density(np.asarray(ra0, dtype=complex))
    rb0 = require_density(np.asarray(rb0, dtype=complex))
    rc0 = require_density(np.asarray(rc0, dtype=complex))
    rd0 = require_density(np.asarray(rd0, dtype=complex))
    for e in (ea, eb):
        if not 0.0 <= e <= 1.0:
            raise DomainError(f"decomposition weight {e} outside [0, 1]")
    mix_a = ea * ra0 + (1.0 - ea) * rb0
    mix_b = eb * rc0 + (1.0 - eb) * rd0
    mismatch = frobenius(mix_a - mix_b)
    if mismatch > 1e-12:
        raise DomainError(
            f"decompositions reconstruct different states "
            f"(|difference| = {mismatch:.3e})"
        )
    obs, gen, ctl = scenario.observable, _branch_gen(scenario), \
        scenario.controls
    # same ball-coordinate route as check_quasilinearity, same reason
    parts = []
    for r in (ra0, rb0, rc0, rd0):
        tr = integrate_bloch(density_to_bloch(r), obs, gen, ctl)
        parts.append(np.stack([bloch_to_density(v) for v in tr.bloch]))
    props = _propagators(scenario, props)
    n = parts[0].shape[0]
    residuals = np.empty(n)
    for j in range(n):
        e_a = epsilon_of_t(props[j], ra0, mix_a, ea)
        e_b = epsilon_of_t(props[j], rc0, mix_b, eb)
        recon_a = e_a * parts[0][j] + (1.0 - e_a) * parts[1][j]
        recon_b = e_b * parts[2][j] + (1.0 - e_b) * parts[3][j]
        residuals[j] = frobenius(recon_a - recon_b)
    return EnsembleReport(
        times=scenario.controls.grid(),
        residuals=residuals,
        max_residual=float(residuals.max()),
        initial_mismatch=float(mismatch),
        meta={"eps_a": ea, "eps_b": eb},
    )


def cross_validate(scenario: Scenario, props=None) -> CrossValidateReport:
    """Integrate the scenario along all three routes and compare.

    Near-critical configurations are flagged; the caller decides whether
    disagreements there are acceptable (the dynamics is structurally
    unstable around the perpendicular drive, so no tolerance is
    enforced here).
    """
    obs, gen, ctl = scenario.observable, _branch_gen(scenario), \
        scenario.controls
    n0 = scenario.initial_bloch
    rho0 = scenario.initial_density
    tb = integrate_bloch(n0, obs, gen, ctl)
    td = evolve_density(rho0, obs, gen, ctl)
    props = _propagators(scenario, props)
    n = len(tb.times)
    d_bd = np.empty(n)
    d_bk = np.empty(n)
    d_dk = np.empty(n)
    rho_d = td.meta["rho"]
    for j in range(n):
        rb = bloch_to_density(tb.bloch[j])
        rk = kraus_state(props[j], rho0)
        d_bd[j] = frobenius(rb - rho_d[j])
        d_bk[j] = frobenius(rb - rk)
        d_dk[j] = frobenius(rho_d[j] - rk)
    if gen is None:
        near = False
    else:
        _, near = theta_angle(obs, gen)
    return CrossValidateReport(
        times=tb.times,
        bloch_vs_density=d_bd,
        bloch_vs_kraus=d_bk,
        density_vs_kraus=d_dk,
        max_pairwise=float(max(d_bd.max(), d_bk.max(), d_dk.max())),
        near_critical=near,
        meta={"branch": tb.branch},
    )
