"""Selective measurement as a stochastic branch choice plus deterministic
conditional evolution.

The outcome sign lam is drawn once from the Born probabilities of the
initial state (or forced, to study one branch); the state then evolves
continuously under the drive conditioned on that outcome and ends, for
any non-critical configuration, at the corresponding eigenstate of the
observable.  The projective update is computed alongside as the
reference the evolution must reproduce.

Branch sampling uses the counter-based Philox generator keyed by the
scenario seed, so records are reproducible bit for bit and independent
of any global random state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (IntegrationControls, Propagator, Trajectory,
                       integrate_bloch, integrate_propagator)
from .errors import (BranchExtinctionError, DomainError,
                     ZeroProbabilityBranchError)
from .generators import (DrivingGenerator, Observable, spectral_projectors,
                         theta_angle)
from .linalg import (HERM_TOL, PAULI, bloch_to_density, density_to_bloch,
                     frobenius, require_density)

CONVERGENCE_TOL = 1e-5  # default |final - lam omega_hat| for the flag
ZERO_PROB_TOL = 1e-14   # denominators below this count as a dead branch


@dataclass(frozen=True)
class Scenario:
    """One measurement setup: what is measured, how it is driven, the
    initial state, integrator controls, and the sampling seed.

    driving carries the drive direction and profile; its outcome sign is
    a placeholder that run_measurement overrides per branch.  driving
    None selects the undriven (precession-only) limit.  initial may be a
    Bloch 3-vector or a 2x2 density matrix.
    """

    observable: Observable
    driving: DrivingGenerator | None
    initial: np.ndarray
    controls: IntegrationControls
    seed: int = 0

    def __post_init__(self):
        a = np.asarray(self.initial)
        if a.shape == (3,):
            n = np.asarray(a, dtype=float)
            bloch_to_density(n)  # norm gate
        elif a.shape == (2, 2):
            rho = require_density(np.asarray(a, dtype=complex))
            n = density_to_bloch(rho)
        else:
            raise DomainError(
                "initial must be a Bloch 3-vector or a 2x2 density matrix"
            )
        object.__setattr__(self, "initial", a)
        object.__setattr__(self, "_n0", n)

    @property
    def initial_bloch(self) -> np.ndarray:
        return self._n0.copy()

    @property
    def initial_density(self) -> np.ndarray:
        return bloch_to_density(self._n0)

    def branch_driving(self, lam: int) -> DrivingGenerator | None:
        if self.driving is None:
            return None
        return DrivingGenerator(lam, self.driving.ghat, self.driving.profile)


@dataclass
class MeasurementRecord:
    """Outcome of one measurement run on one branch."""

    branch: int
    probability: float
    trajectory: Trajectory
    final_bloch: np.ndarray
    vn_reference: np.ndarray
    converged: bool
    near_critical: bool
    meta: dict = field(default_factory=dict)


def born_probabilities(state, obs: Observable):
    """(p_plus, p_minus) with p_lam = (1 + lam omega_hat.n0)/2."""
    a = np.asarray(state)
    n0 = density_to_bloch(a) if a.shape == (2, 2) else \
        np.asarray(a, dtype=float)
    if n0.shape != (3,):
        raise DomainError("state must be a Bloch 3-vector or 2x2 matrix")
    c = float(np.dot(obs.omega_hat, n0))
    p_plus = 0.5 * (1.0 + c)
    return p_plus, 1.0 - p_plus


def sample_branch(state, obs: Observable, seed: int) -> int:
    """Draw the outcome sign: +1 with the Born probability p_plus."""
    p_plus, _ = born_probabilities(state, obs)
    u = np.random.Generator(np.random.Philox(seed)).random()
    return +1 if u < p_plus else -1


def von_neumann_update(rho0, projector) -> np.ndarray:
    """Projective state update P rho P / tr(P rho P)."""
    rho0 = require_density(rho0)
    p = np.asarray(projector, dtype=complex)
    if frobenius(p @ p - p) > 1e-12 or frobenius(p - p.conj().T) > HERM_TOL:
        raise DomainError("projector must be Hermitian and idempotent")
    num = p @ rho0 @ p
    w = np.trace(num).real
    if w <= ZERO_PROB_TOL:
        raise ZeroProbabilityBranchError(
            f"branch weight {w:.3e} is numerically zero"
        )
    return num / w


def kraus_state(k, rho0) -> np.ndarray:
    """K rho0 K+ / tr(K rho0 K+); invariant under K -> cK, c > 0."""
    mat = k.matrix if isinstance(k, Propagator) else np.asarray(k, complex)
    rho0 = require_density(rho0)
    num = mat @ rho0 @ mat.conj().T
    w = np.trace(num).real
    scale = float(np.linalg.norm(mat)) ** 2
    if w <= ZERO_PROB_TOL * scale:
        raise BranchExtinctionError(
            f"branch weight collapsed: tr(K rho K+) = {w:.3e} "
            f"against |K|^2 = {scale:.3e}"
        )
    return num / w


def epsilon_of_t(k, rho_a0, rho0, eps0: float) -> float:
    """Mixture coefficient transported by K: eps0 tr(K ra K+)/tr(K r K+).

    Exact values sit in [0, 1]; numerical ones a hair outside (within
    1e-10) are clamped, anything further out is returned as-is so the
    caller can report the violation.
    """
    if not 0.0 <= eps0 <= 1.0:
        raise DomainError(f"eps0 must lie in [0, 1], got {eps0}")
    mat = k.matrix if isinstance(k, Propagator) else np.asarray(k, complex)
    wa = np.trace(mat @ np.asarray(rho_a0, complex) @ mat.conj().T).real
    w0 = np.trace(mat @ np.asarray(rho0, complex) @ mat.conj().T).real
    scale = float(np.linalg.norm(mat)) ** 2
    if w0 <= ZERO_PROB_TOL * scale:
        raise BranchExtinctionError(
            f"mixture weight collapsed: tr(K rho K+) = {w0:.3e}"
        )
    e = eps0 * wa / w0
    if -1e-10 <= e < 0.0:
        return 0.0
    if 1.0 < e <= 1.0 + 1e-10:
        return 1.0
    return e


def _resolve_branch(scenario: Scenario, mode) -> int:
    if mode in (+1, -1):
        return int(mode)
    if mode == "plus":
        return +1
    if mode == "minus":
        return -1
    if mode == "sampled":
        return sample_branch(scenario.initial_bloch, scenario.observable,
                             scenario.seed)
    raise DomainError(
        f"mode must be 'sampled', 'plus', 'minus', +1 or -1, got {mode!r}"
    )


def run_measurement(scenario: Scenario, mode="sampled",
                    conv_tol: float = CONVERGENCE_TOL,
                    cross_check: bool = True) -> MeasurementRecord:
    """Select a branch, evolve it, and compare against the projection.

    cross_check additionally integrates the propagator route on the same
    grid and records the worst pointwise Bloch deviation between the two
    routes in meta["route_deviation"]; it costs considerably more than
    the primary integration because the propagator never stops rotating.
    """
    obs = scenario.observable
    lam = _resolve_branch(scenario, mode)
    p_plus, p_minus = born_probabilities(scenario.initial_bloch, obs)
    gen = scenario.branch_driving(lam)
    traj = integrate_bloch(scenario.initial_bloch, obs, gen,
                           scenario.controls)
    vn_ref = float(lam) * obs.omega_hat
    if gen is None:
        theta, near_crit = None, False
    else:
        theta, near_crit = theta_angle(obs, gen)
    final_err = float(np.linalg.norm(traj.final_bloch - vn_ref))
    meta = {
        "theta": theta,
        "p_plus": p_plus,
        "p_minus": p_minus,
        "final_error": final_err,
        "mode": mode if isinstance(mode, str) else "conditioned",
    }
    if cross_check:
        props = integrate_propagator(obs, gen, scenario.controls)
        rho0 = scenario.initial_density
        dev = 0.0
        for k, n_ref in zip(props, traj.bloch):
            nk = density_to_bloch(kraus_state(k, rho0))
            dev = max(dev, float(np.linalg.norm(nk - n_ref)))
        meta["route_deviation"] = dev
    return MeasurementRecord(
        branch=lam,
        probability=p_plus if lam > 0 else p_minus,
        trajectory=traj,
        final_bloch=traj.final_bloch.copy(),
        vn_reference=vn_ref,
        converged=final_err < conv_tol,
        near_critical=near_crit,
        meta=meta,
    )


def projector_for_branch(obs: Observable, lam: int) -> np.ndarray:
    plus, minus = spectral_projectors(obs)
    return plus if lam > 0 else minus


def bloch_of(rho) -> np.ndarray:
    """Shorthand used by callers comparing matrix and vector pictures."""
    return np.array([np.trace(rho @ s).real for s in PAULI])
