"""Observable and time-dependent driving generator.

The observable is a spin direction with magnitude omega (rad/s, hbar = 1);
its matrix is (1/2) omega.sigma and its eigenprojectors are the von Neumann
reference states.  The driving generator carries the selected outcome sign
lam, a fixed unit direction ghat, and a scalar magnitude profile g(t) >= 0
that switches on and back off.  Only the magnitude depends on time.

Profile variants:
  InvertedMorse  g(t) = 4 g0 e^{-kt}(1 - e^{-kt}), single smooth pulse
  Window         g0 times a C1 smoothstep window on [t_on, t_off]
  Tabulated      monotone cubic through user samples, clamped >= 0

Each profile knows its characteristic timescale (used to cap integrator
steps) and a sensible default integration horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DegenerateObservableError, DomainError
from .linalg import I2, SIGMA_X, SIGMA_Y, SIGMA_Z

NEAR_CRITICAL_RAD = 0.05  # default |theta - pi/2| warning band

# Profile kind codes shared with the jit kernels.
PROFILE_NONE = -1
PROFILE_MORSE = 0
PROFILE_WINDOW = 1
PROFILE_TABLE = 2

_EMPTY = np.zeros(0, dtype=float)
_EMPTY_C = np.zeros((4, 0), dtype=float)


def polar_direction(polar: float, azimuth: float) -> np.ndarray:
    """Unit vector (sin a cos b, sin a sin b, cos a)."""
    sa = np.sin(polar)
    return np.array(
        [sa * np.cos(azimuth), sa * np.sin(azimuth), np.cos(polar)]
    )


def dot_sigma(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v[0] * SIGMA_X + v[1] * SIGMA_Y + v[2] * SIGMA_Z


@dataclass(frozen=True)
class Observable:
    """Measured spin component: direction omega_hat, magnitude omega."""

    omega_vec: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.omega_vec, dtype=float)
        if v.shape != (3,) or not np.all(np.isfinite(v)):
            raise DomainError("omega_vec must be a finite real 3-vector")
        if np.linalg.norm(v) == 0.0:
            raise DegenerateObservableError(
                "observable with |omega| = 0 has no spectral gap"
            )
        object.__setattr__(self, "omega_vec", v)

    @classmethod
    def from_polar(cls, omega: float, alpha: float, beta: float) -> "Observable":
        if omega <= 0:
            raise DegenerateObservableError("omega must be positive")
        return cls(omega * polar_direction(alpha, beta))

    @property
    def omega(self) -> float:
        return float(np.linalg.norm(self.omega_vec))

    @property
    def omega_hat(self) -> np.ndarray:
        return self.omega_vec / self.omega

    @property
    def alpha(self) -> float:
        return float(np.arccos(np.clip(self.omega_hat[2], -1.0, 1.0)))

    @property
    def beta(self) -> float:
        return float(np.arctan2(self.omega_hat[1], self.omega_hat[0]))


def _require_positive(x: float, name: str) -> float:
    x = float(x)
    if not np.isfinite(x) or x <= 0:
        raise DomainError(f"{name} must be positive, got {x!r}")
    return x


@dataclass(frozen=True)
class InvertedMorse:
    """Single pulse 4 g0 u(1-u), u = exp(-kappa t); zero at t = 0, peak g0
    at t = ln2/kappa, exponential tail."""

    g0: float
    kappa: float

    def __post_init__(self):
        _require_positive(self.g0, "g0")
        _require_positive(self.kappa, "kappa")

    def value(self, t):
        u = np.exp(-self.kappa * np.asarray(t, dtype=float))
        out = 4.0 * self.g0 * u * (1.0 - u)
        return float(out) if out.ndim == 0 else out

    @property
    def peak_rate(self) -> float:
        return self.g0

    def peak_time(self) -> float:
        return np.log(2.0) / self.kappa

    def feature_dt(self) -> float:
        return 0.25 / self.kappa

    def default_t_end(self) -> float:
        # falling-edge time where the pulse is down to 1e-9 of peak,
        # doubled so the free-precession tail is resolved in the output
        q = 1e-9
        u = q / (2.0 * (1.0 + np.sqrt(1.0 - q)))
        return -2.0 * np.log(u) / self.kappa

    def kernel_args(self):
        return PROFILE_MORSE, np.array([self.g0, self.kappa]), _EMPTY, _EMPTY_C


def _smoothstep(x):
    return x * x * (3.0 - 2.0 * x)


@dataclass(frozen=True)
class Window:
    """Plateau at g0 on [t_on + ramp, t_off - ramp], cubic smoothstep ramps,
    identically zero outside [t_on, t_off]."""

    g0: float
    t_on: float
    t_off: float
    ramp: float

    def __post_init__(self):
        _require_positive(self.g0, "g0")
        _require_positive(self.ramp, "ramp")
        if self.t_on < 0:
            raise DomainError("t_on must be >= 0")
        if self.t_off <= self.t_on:
            raise DomainError("t_off must exceed t_on")
        if 2.0 * self.ramp > self.t_off - self.t_on:
            raise DomainError("ramps overlap: need 2*ramp <= t_off - t_on")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        rise = np.clip((t - self.t_on) / self.ramp, 0.0, 1.0)
        fall = np.clip((self.t_off - t) / self.ramp, 0.0, 1.0)
        out = self.g0 * _smoothstep(rise) * _smoothstep(fall)
        return float(out) if out.ndim == 0 else out

    @property
    def peak_rate(self) -> float:
        return self.g0

    def peak_time(self) -> float:
        # plateau everywhere at g0; mark its midpoint
        return 0.5 * (self.t_on + self.t_off)

    def feature_dt(self) -> float:
        return 0.25 * self.ramp

    def default_t_end(self) -> float:
        return 2.0 * self.t_off

    def kernel_args(self):
        pars = np.array([self.g0, self.t_on, self.t_off, self.ramp])
        return PROFILE_WINDOW, pars, _EMPTY, _EMPTY_C


@dataclass(frozen=True)
class Tabulated:
    """Monotone cubic (PCHIP) through (t, g) samples, clamped to g >= 0,
    identically zero outside the sampled range."""

    samples: tuple

    def __post_init__(self):
        pts = np.asarray(self.samples, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise DomainError("need at least two (time, rate) samples")
        times, rates = pts[:, 0], pts[:, 1]
        if not np.all(np.isfinite(pts)):
            raise DomainError("samples must be finite")
        if np.any(np.diff(times) <= 0):
            raise DomainError("sample times must be strictly increasing")
        if times[0] < 0:
            raise DomainError("sample times must be >= 0")
        if np.any(rates < 0):
            raise DomainError("sampled rates must be >= 0")
        if np.max(rates) == 0:
            raise DomainError("sampled rates are all zero")
        object.__setattr__(self, "samples", tuple(map(tuple, pts)))
        object.__setattr__(
            self, "_interp", PchipInterpolator(times, rates, extrapolate=False)
        )

    def value(self, t):
        y = self._interp(np.asarray(t, dtype=float))
        out = np.clip(np.nan_to_num(y, nan=0.0), 0.0, None)
        return float(out) if out.ndim == 0 else out

    @property
    def knot_times(self) -> np.ndarray:
        return self._interp.x

    @property
    def peak_rate(self) -> float:
        return float(max(r for _, r in self.samples))

    def peak_time(self) -> float:
        ts = np.linspace(self._interp.x[0], self._interp.x[-1], 4001)
        return float(ts[np.argmax(self.value(ts))])

    def feature_dt(self) -> float:
        return 0.25 * float(np.min(np.diff(self._interp.x)))

    def default_t_end(self) -> float:
        return 2.0 * float(self._interp.x[-1])

    def kernel_args(self):
        # local power-basis pieces: sum_m c[m,i] (t - x[i])^(3-m)
        return (
            PROFILE_TABLE,
            _EMPTY,
            np.ascontiguousarray(self._interp.x, dtype=float),
            np.ascontiguousarray(self._interp.c, dtype=float),
        )


@dataclass(frozen=True)
class DrivingGenerator:
    """Outcome sign lam, fixed unit direction ghat, magnitude profile."""

    lam: int
    ghat: np.ndarray
    profile: object

    def __post_init__(self):
        if self.lam not in (+1, -1):
            raise DomainError(f"lam must be +1 or -1, got {self.lam!r}")
        v = np.asarray(self.ghat, dtype=float)
        if v.shape != (3,) or not np.all(np.isfinite(v)):
            raise DomainError("ghat must be a finite real 3-vector")
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            raise DomainError("ghat must be nonzero")
        object.__setattr__(self, "ghat", v / nrm)
        object.__setattr__(self, "lam", int(self.lam))

    @classmethod
    def from_polar(cls, lam, theta, phi, profile) -> "DrivingGenerator":
        return cls(lam, polar_direction(theta, phi), profile)

    @property
    def theta(self) -> float:
        return float(np.arccos(np.clip(self.ghat[2], -1.0, 1.0)))

    @property
    def phi(self) -> float:
        return float(np.arctan2(self.ghat[1], self.ghat[0]))

    def flipped(self) -> "DrivingGenerator":
        """Same drive, opposite outcome sign."""
        return DrivingGenerator(-self.lam, self.ghat, self.profile)


def observable_matrix(obs: Observable) -> np.ndarray:
    """(1/2) omega.sigma; eigenvalues +-omega/2."""
    return 0.5 * dot_sigma(obs.omega_vec)


def spectral_projectors(obs: Observable):
    """Eigenprojectors (P_plus, P_minus), P_lam = (I + lam omega_hat.sigma)/2."""
    if obs.omega == 0.0:
        raise DegenerateObservableError("degenerate observable")
    s = dot_sigma(obs.omega_hat)
    return 0.5 * (I2 + s), 0.5 * (I2 - s)


def profile_value(profile, t):
    """g(t) for scalar or array t; t must be >= 0."""
    if np.any(np.asarray(t) < 0):
        raise DomainError("profile is defined for t >= 0")
    return profile.value(t)


def generator_matrix(gen: DrivingGenerator, t: float) -> np.ndarray:
    """(lam/2) g(t) ghat.sigma; Hermitian, traceless."""
    return (0.5 * gen.lam * profile_value(gen.profile, t)) * dot_sigma(gen.ghat)


def theta_angle(obs: Observable, gen: DrivingGenerator,
                threshold: float = NEAR_CRITICAL_RAD):
    """Separation angle arccos(omega_hat . ghat) and a near-critical flag.

    The flag marks |theta - pi/2| < threshold, where the drive and the
    precession compete destructively and convergence degrades.  Diagnostic
    only; nothing downstream branches on it.
    """
    c = float(np.clip(np.dot(obs.omega_hat, gen.ghat), -1.0, 1.0))
    theta = float(np.arccos(c))
    return theta, bool(abs(theta - 0.5 * np.pi) < threshold)
