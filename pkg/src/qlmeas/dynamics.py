"""Time integration of the conditional evolution along three routes.

The same dynamics can be integrated as a Bloch-vector ODE, as a density
matrix ODE, or indirectly through a linear non-unitary propagator K(t)
with the state recovered as K rho0 K+ / tr(K rho0 K+).  The three routes
share one adaptive RK5(4) driver (see kernels) and are cross-checked
against each other in verify.

All public entry points accept gen=None for the undriven (purely
precessing) limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError, IntegrationError, InvalidStateError
from .generators import (DrivingGenerator, Observable, dot_sigma,
                         profile_value)
from .linalg import (BLOCH_NORM_TOL, bloch_to_density, density_to_bloch,
                     require_density)

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


@dataclass
class IntegrationControls:
    """Integrator tolerances and output-grid layout.

    The geometric grid spans [t_first_output, t_end] and suits the
    log-time structure of the problem (precession at 1/omega, drive
    features at 1/kappa, convergence at t_end); the linear grid starts
    at 0.  t_first_output defaults to t_end * 1e-6.
    """

    t_end: float
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    output_points: int = 400
    output_spacing: str = "geometric"
    t_first_output: float | None = None
    max_steps: int = 500_000_000

    def __post_init__(self):
        if not (np.isfinite(self.t_end) and self.t_end > 0):
            raise DomainError("t_end must be positive")
        if self.rtol <= 0 or self.atol <= 0:
            raise DomainError("rtol and atol must be positive")
        if self.output_points < 2:
            raise DomainError("need at least two output points")
        if self.output_spacing not in ("geometric", "linear"):
            raise DomainError(
                f"unknown output spacing {self.output_spacing!r}"
            )
        if self.max_steps < 100:
            raise DomainError("max_steps too small to do anything useful")
        if self.t_first_output is None:
            self.t_first_output = self.t_end * 1e-6
        if self.output_spacing == "geometric":
            if not 0 < self.t_first_output < self.t_end:
                raise DomainError(
                    "geometric spacing needs 0 < t_first_output < t_end"
                )

    def grid(self) -> np.ndarray:
        if self.output_spacing == "geometric":
            g = np.geomspace(self.t_first_output, self.t_end,
                             self.output_points)
        else:
            g = np.linspace(0.0, self.t_end, self.output_points)
        g[-1] = self.t_end  # exact endpoint, no roundoff wobble
        return g


@dataclass
class Trajectory:
    """Sampled conditional evolution of a single qubit.

    branch is the outcome sign the drive was conditioned on (0 for the
    undriven limit).  epsilon is filled only when a mixture coefficient
    is being tracked alongside the run.  meta carries integrator
    diagnostics and, for the density route, the raw matrix samples.
    """

    times: np.ndarray
    bloch: np.ndarray
    norm: np.ndarray
    rate: np.ndarray
    crossings: np.ndarray
    branch: int
    epsilon: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.bloch) == len(self.norm) == len(self.rate) == n):
            raise InvalidStateError("trajectory arrays disagree in length")
        if n and np.any(np.diff(self.times) <= 0):
            raise InvalidStateError("trajectory times must increase")
        if n and np.max(self.norm) > 1.0 + BLOCH_NORM_TOL:
            raise InvalidStateError(
                f"trajectory leaves the Bloch ball: max |n| = "
                f"{np.max(self.norm):.12g}"
            )

    @property
    def final_bloch(self) -> np.ndarray:
        return self.bloch[-1]


@dataclass
class Propagator:
    """Non-unitary propagator sample K(t), stored up to positive scale.

    The physical operator is exp(log_scale) * matrix; every downstream
    use is a ratio in which the scale cancels, so it is kept in log form
    and never exponentiated.
    """

    matrix: np.ndarray
    log_scale: float
    t: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2) or not np.all(np.isfinite(m)):
            raise InvalidStateError("propagator matrix must be finite 2x2")
        fn = np.linalg.norm(m)
        if not 0.25 <= fn <= 4.0:
            raise InvalidStateError(
                f"propagator norm {fn:.3g} escaped the renormalization band"
            )
        self.matrix = m

    @classmethod
    def identity(cls) -> "Propagator":
        return cls(np.eye(2, dtype=complex), 0.0, 0.0)


def evolution_generator(obs: Observable, gen: DrivingGenerator | None,
                        t: float) -> np.ndarray:
    """A(t) = (lam g(t) ghat - i omega).sigma / 2, the non-Hermitian
    generator shared by the density and propagator routes."""
    m = -0.5j * obs.omega_vec.astype(complex)
    if gen is not None:
        m = m + (0.5 * gen.lam * profile_value(gen.profile, t)) * gen.ghat
    return dot_sigma(m.real) + 1j * dot_sigma(m.imag)


def rhs_bloch(n, t, obs, gen) -> np.ndarray:
    """dn/dt = omega x n + g(t)(lam ghat - lam(ghat.n) n)."""
    n = np.asarray(n, dtype=float)
    if np.linalg.norm(n) > 1.0 + BLOCH_NORM_TOL:
        raise InvalidStateError("Bloch vector outside the unit ball")
    out = np.cross(obs.omega_vec, n)
    if gen is not None:
        lg = gen.lam * profile_value(gen.profile, t) * gen.ghat
        out = out + lg - np.dot(lg, n) * n
    return out


def rhs_density(rho, t, obs, gen) -> np.ndarray:
    """drho/dt = -i[Omega, rho] + {G, rho} - 2 rho tr(G rho), arranged as
    B + B+ - 2 Re(tr B) rho with B = A rho; Hermitian and traceless."""
    rho = require_density(rho)
    b = evolution_generator(obs, gen, t) @ rho
    return b + b.conj().T - 2.0 * np.trace(b).real * rho


def rhs_propagator(k, t, obs, gen) -> np.ndarray:
    """dK/dt = A(t) K; linear and state independent."""
    mat = k.matrix if isinstance(k, Propagator) else np.asarray(k, complex)
    return evolution_generator(obs, gen, t) @ mat


def _pack(mat) -> np.ndarray:
    return np.ascontiguousarray(mat, dtype=complex).view(np.float64).ravel()


def _unpack(row) -> np.ndarray:
    return np.ascontiguousarray(row).view(np.complex128).reshape(2, 2)


_NO_PARS = np.zeros(0, dtype=float)
_NO_KNOTS = np.zeros(0, dtype=float)
_NO_COEFS = np.zeros((4, 0), dtype=float)


def _kernel_drive(obs, gen):
    """Packed (lam_ghat, omega, kind, pars, knots, coefs) kernel args."""
    omega = np.ascontiguousarray(obs.omega_vec, dtype=float)
    if gen is None:
        return (np.zeros(3), omega, kernels.PROF_NONE, _NO_PARS,
                _NO_KNOTS, _NO_COEFS)
    kind, pars, knots, coefs = gen.profile.kernel_args()
    return (np.ascontiguousarray(gen.lam * gen.ghat), omega, kind,
            np.ascontiguousarray(pars), knots, coefs)


def _h_max(gen, t_end: float) -> float:
    # never step across a profile feature, whatever the error estimate says
    cap = t_end / 8.0
    if gen is not None:
        cap = min(cap, gen.profile.feature_dt())
    return cap


def _drive(route, y0, grid, obs, gen, controls, renorm):
    """Run the kernel over the output grid; returns (t_out, y_out,
    log_out, emit0, meta).  emit0 is True when grid[0] == 0 and the
    initial state is to be prepended by the caller."""
    lam_ghat, omega, kind, pars, knots, coefs = _kernel_drive(obs, gen)
    emit0 = grid[0] == 0.0
    t_out = np.ascontiguousarray(grid[1:] if emit0 else grid)
    m = y0.shape[0]
    y_out = np.zeros((t_out.size, m))
    log_out = np.zeros(t_out.size)
    y_last = np.zeros(m)
    status, t_last, log_scale, n_acc, n_rej, n_fev, n_emit = \
        kernels.integrate_adaptive(
            route, y0, 0.0, controls.t_end, t_out, controls.rtol,
            controls.atol, _h_max(gen, controls.t_end), controls.max_steps,
            renorm, lam_ghat, omega, kind, pars, knots, coefs,
            y_out, log_out, y_last)
    if status == kernels.MAX_STEPS_EXCEEDED:
        raise IntegrationError(
            f"step budget {controls.max_steps} exhausted at t = {t_last:.6g}"
            f" of {controls.t_end:.6g}", t_last=t_last, y_last=y_last)
    if status == kernels.STEP_UNDERFLOW:
        raise IntegrationError(
            f"step size underflow at t = {t_last:.6g}",
            t_last=t_last, y_last=y_last)
    if n_emit != t_out.size:
        raise IntegrationError(
            f"only {n_emit} of {t_out.size} output times reached",
            t_last=t_last, y_last=y_last)
    meta = {
        "n_accepted": int(n_acc),
        "n_rejected": int(n_rej),
        "n_rhs": int(n_fev),
        "log_scale": float(log_scale),
    }
    return t_out, y_out, log_out, emit0, meta


def _rates(times, bloch, obs, gen) -> np.ndarray:
    return np.array([
        np.linalg.norm(rhs_bloch(n, t, obs, gen))
        for t, n in zip(times, bloch)
    ])


def integrate_bloch(n0, obs: Observable, gen: DrivingGenerator | None,
                    controls: IntegrationControls) -> Trajectory:
    """Integrate the Bloch equation on the requested output grid."""
    n0 = np.asarray(n0, dtype=float)
    bloch_to_density(n0)  # reuse its shape/norm gate
    grid = controls.grid()
    t_out, y_out, _, emit0, meta = _drive(0, n0.copy(), grid, obs, gen,
                                          controls, False)
    times = grid if emit0 else t_out
    bloch = np.vstack([n0[None, :], y_out]) if emit0 else y_out
    meta["route"] = "bloch"
    return Trajectory(
        times=times,
        bloch=bloch,
        norm=np.linalg.norm(bloch, axis=1),
        rate=_rates(times, bloch, obs, gen),
        crossings=crossing_times(obs, gen, controls.t_end),
        branch=gen.lam if gen is not None else 0,
        meta=meta,
    )


def evolve_density(rho0, obs: Observable, gen: DrivingGenerator | None,
                   controls: IntegrationControls) -> Trajectory:
    """Integrate the density-matrix equation; Bloch-converted samples.

    The matrix components ride on the step sequence of a Bloch shadow
    copy (see kernels), so the result tracks integrate_bloch to roundoff
    while still exercising the matrix-valued right-hand side.  The raw
    matrix samples are kept in meta["rho"].
    """
    rho0 = require_density(rho0)
    w = np.linalg.eigvalsh(rho0)
    if w[0] < -1e-10:
        raise InvalidStateError(
            f"initial density matrix has eigenvalue {w[0]:.3e} < 0"
        )
    n0 = density_to_bloch(rho0)
    y0 = np.concatenate([_pack(rho0), n0])
    grid = controls.grid()
    t_out, y_out, _, emit0, meta = _drive(1, y0, grid, obs, gen,
                                          controls, False)
    packed = np.vstack([_pack(rho0)[None, :], y_out[:, :8]]) if emit0 \
        else y_out[:, :8]
    times = grid if emit0 else t_out
    rho = packed.view(np.complex128).reshape(-1, 2, 2)
    # Pauli components straight from the packed layout
    bloch = np.stack([
        packed[:, 2] + packed[:, 4],
        packed[:, 5] - packed[:, 3],
        packed[:, 0] - packed[:, 6],
    ], axis=1)
    meta["route"] = "density"
    meta["rho"] = rho
    meta["trace_drift"] = float(
        np.max(np.abs(packed[:, 0] + packed[:, 6] - 1.0))
    )
    return Trajectory(
        times=times,
        bloch=bloch,
        norm=np.linalg.norm(bloch, axis=1),
        rate=_rates(times, bloch, obs, gen),
        crossings=crossing_times(obs, gen, controls.t_end),
        branch=gen.lam if gen is not None else 0,
        meta=meta,
    )


def integrate_propagator(obs: Observable, gen: DrivingGenerator | None,
                         controls: IntegrationControls) -> list[Propagator]:
    """Integrate dK/dt = A(t)K from K(0) = I on the output grid.

    The running Frobenius renormalization keeps the matrix O(1); each
    returned sample carries the accumulated log of divided-out factors.
    """
    y0 = _pack(np.eye(2, dtype=complex))
    grid = controls.grid()
    t_out, y_out, log_out, emit0, _ = _drive(2, y0, grid, obs, gen,
                                             controls, True)
    out = [Propagator.identity()] if emit0 else []
    for row, ls, t in zip(y_out, log_out, t_out):
        out.append(Propagator(_unpack(row).copy(), float(ls), float(t)))
    return out


def crossing_times(obs: Observable, gen: DrivingGenerator | None,
                   t_end: float) -> np.ndarray:
    """Times in (0, t_end) where g(t)^2 - omega^2 changes sign.

    Scans a dense grid and bisects each bracketed sign change.  A
    tangency (g touching omega without crossing, e.g. a pulse whose peak
    exactly reaches omega) produces no sign change and is not reported;
    a guard band of omega * 1e-12 suppresses roundoff flicker there.
    """
    if gen is None:
        return np.zeros(0)
    w = obs.omega
    prof = gen.profile
    n = int(min(200_000, max(4001, 8.0 * t_end / prof.feature_dt())))
    ts = np.linspace(0.0, t_end, n)
    f = profile_value(prof, ts) - w
    f[np.abs(f) <= w * 1e-12] = 0.0
    s = np.sign(f)
    out = []
    prev_i = 0
    prev_s = s[0]
    for i in range(1, n):
        if s[i] == 0.0:
            continue
        if prev_s != 0.0 and s[i] != prev_s:
            lo, hi = ts[prev_i], ts[i]
            flo = f[prev_i]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                fm = prof.value(mid) - w
                if fm == 0.0:
                    lo = hi = mid
                    break
                if (fm > 0) == (flo > 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            out.append(0.5 * (lo + hi))
        prev_i, prev_s = i, s[i]
    return np.array(out)
