"""Low-level adaptive integration kernels.

Everything here works on flat float64 state vectors so that a single
embedded Runge-Kutta 5(4) driver (Dormand-Prince coefficients, FSAL,
PI step control, quartic dense output) serves three encodings of the
same dynamics, selected by a route code:

  route 0  Bloch vector n, length 3
  route 1  density matrix packed [re00, im00, re01, im01, re10, ...]
           followed by a 3-component Bloch shadow copy, length 11
  route 2  non-unitary propagator K, packed as in route 1, length 8

Route 1 rides the matrix components on the step sequence of its Bloch
shadow: the error norm and the startup heuristic read only components
8..10, through arithmetic kept expression-for-expression identical to a
standalone route-0 run, so the chosen steps match that run bit for bit.
A Runge-Kutta step commutes exactly with the affine map between the two
representations, which pins the matrix trajectory to the Bloch one up
to roundoff accumulation; had the matrix components been given their
own controller, the two step sequences would decorrelate at the first
accept/reject disagreement and the trajectories would drift apart by
each run's full global error.

Route 2 integrates a linear equation whose solution norm can swing over
many decades, so the driver optionally renormalizes the state back to
unit scale whenever its Frobenius norm leaves [0.5, 2], accumulating the
divided-out factors as a running log.  The physical map only ever uses
K through a ratio, so the rescaling is pure bookkeeping.

Kernels compile with numba (cache=True, nogil=True) when it is
importable and QLMEAS_DISABLE_NUMBA is unset; otherwise the identical
source runs as plain Python.  Keep this module free of package imports:
the callable surface is only reachable through dynamics.
"""

import os

import numpy as np


def _numba_disabled() -> bool:
    flag = os.environ.get("QLMEAS_DISABLE_NUMBA", "")
    return flag.strip().lower() in ("1", "true", "yes", "on")


HAS_NUMBA = False
if not _numba_disabled():
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:
        pass

if HAS_NUMBA:
    def jit(fn):
        return njit(cache=True, nogil=True)(fn)
else:
    def jit(fn):
        return fn

# Integration outcome codes.
OK = 0
MAX_STEPS_EXCEEDED = 1
STEP_UNDERFLOW = 2

# Profile kind codes (mirrored in generators).
PROF_NONE = -1
PROF_MORSE = 0
PROF_WINDOW = 1
PROF_TABLE = 2

# Dormand-Prince 5(4) tableau.  Row 6 of A holds the 5th-order solution
# weights, so the 7th stage is evaluated at the accepted point (FSAL).
RK_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
RK_A = np.zeros((7, 7))
RK_A[1, :1] = [1 / 5]
RK_A[2, :2] = [3 / 40, 9 / 40]
RK_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
RK_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
RK_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176,
               -5103 / 18656]
RK_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
RK_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                 -17253 / 339200, 22 / 525, -1 / 40])
# Quartic dense-output coefficients: y(t + s h) = y + h s * sum_q k_q P_q(s)
# with P_q(s) = P[q,0] + s P[q,1] + s^2 P[q,2] + s^3 P[q,3].
RK_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423,
     69997945 / 29380423],
])


@jit
def profile_eval(kind, pars, knots, coefs, t):
    """Drive magnitude g(t) >= 0 for the packed profile description."""
    if kind == 0:
        # single pulse 4 g0 u (1 - u), u = exp(-kappa t)
        u = np.exp(-pars[1] * t)
        return 4.0 * pars[0] * u * (1.0 - u)
    elif kind == 1:
        # smoothstep window: exact 0 outside, exact g0 on the plateau
        rise = (t - pars[1]) / pars[3]
        if rise < 0.0:
            rise = 0.0
        elif rise > 1.0:
            rise = 1.0
        fall = (pars[2] - t) / pars[3]
        if fall < 0.0:
            fall = 0.0
        elif fall > 1.0:
            fall = 1.0
        return pars[0] * (rise * rise * (3.0 - 2.0 * rise)) \
            * (fall * fall * (3.0 - 2.0 * fall))
    elif kind == 2:
        # cubic pieces in the local power basis, zero outside the knots
        n = knots.shape[0]
        if t < knots[0] or t > knots[n - 1]:
            return 0.0
        lo = 0
        hi = n - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if knots[mid] <= t:
                lo = mid
            else:
                hi = mid
        dt = t - knots[lo]
        v = ((coefs[0, lo] * dt + coefs[1, lo]) * dt + coefs[2, lo]) * dt \
            + coefs[3, lo]
        return v if v > 0.0 else 0.0
    return 0.0


@jit
def bloch_rhs_at(g, lam_ghat, omega, y, oy, out, oo):
    """dn/dt = omega x n + g lam_ghat - g (lam_ghat.n) n at offset oy of y,
    written to offset oo of out.  One shared body keeps route 0 and the
    route-1 shadow arithmetically identical."""
    gn = g * (lam_ghat[0] * y[oy] + lam_ghat[1] * y[oy + 1]
              + lam_ghat[2] * y[oy + 2])
    out[oo] = omega[1] * y[oy + 2] - omega[2] * y[oy + 1] \
        + g * lam_ghat[0] - gn * y[oy]
    out[oo + 1] = omega[2] * y[oy] - omega[0] * y[oy + 2] \
        + g * lam_ghat[1] - gn * y[oy + 1]
    out[oo + 2] = omega[0] * y[oy + 1] - omega[1] * y[oy] \
        + g * lam_ghat[2] - gn * y[oy + 2]


@jit
def evolution_rhs(route, t, y, out, lam_ghat, omega, kind, pars, knots, coefs):
    """Time derivative of the packed state.

    lam_ghat is the unit drive direction times the outcome sign; omega is
    the precession vector.  Routes 1 and 2 share the non-Hermitian
    generator A = (g(t) lam_ghat - i omega).sigma / 2: the propagator
    obeys dK/dt = A K and the density matrix obeys
    drho/dt = A rho + rho A+ - 2 Re tr(A rho) rho.
    """
    g = profile_eval(kind, pars, knots, coefs, t)
    if route == 0:
        bloch_rhs_at(g, lam_ghat, omega, y, 0, out, 0)
        return
    if route == 1:
        bloch_rhs_at(g, lam_ghat, omega, y, 8, out, 8)

    a00 = complex(0.5 * g * lam_ghat[2], -0.5 * omega[2])
    a01 = complex(0.5 * (g * lam_ghat[0] - omega[1]),
                  -0.5 * (g * lam_ghat[1] + omega[0]))
    a10 = complex(0.5 * (g * lam_ghat[0] + omega[1]),
                  0.5 * (g * lam_ghat[1] - omega[0]))
    y00 = complex(y[0], y[1])
    y01 = complex(y[2], y[3])
    y10 = complex(y[4], y[5])
    y11 = complex(y[6], y[7])

    if route == 2:
        d00 = a00 * y00 + a01 * y10
        d01 = a00 * y01 + a01 * y11
        d10 = a10 * y00 - a00 * y10
        d11 = a10 * y01 - a00 * y11
    else:
        # b = A rho; rhs = b + b+ - 2 Re(tr b) rho
        b00 = a00 * y00 + a01 * y10
        b01 = a00 * y01 + a01 * y11
        b10 = a10 * y00 - a00 * y10
        b11 = a10 * y01 - a00 * y11
        tr2 = 2.0 * (b00.real + b11.real)
        d00 = b00 + np.conj(b00) - tr2 * y00
        d01 = b01 + np.conj(b10) - tr2 * y01
        d10 = b10 + np.conj(b01) - tr2 * y10
        d11 = b11 + np.conj(b11) - tr2 * y11

    out[0] = d00.real
    out[1] = d00.imag
    out[2] = d01.real
    out[3] = d01.imag
    out[4] = d10.real
    out[5] = d10.imag
    out[6] = d11.real
    out[7] = d11.imag


@jit
def scaled_norm(route, v, y, y5, rtol, atol):
    """Weighted RMS of an increment v against the state pair (y, y5).

    Route 1 reads only its Bloch shadow (components 8..10), with the
    same loop body a 3-component route-0 call runs, so both produce bit
    for bit the same value at matching states.  The matrix components of
    route 1 are deliberately excluded: their trace and Hermiticity
    defects have neutral dynamics with no forcing, sit at roundoff, and
    are asserted downstream rather than step-controlled here.
    """
    lo = 0
    m = v.shape[0]
    if route == 1:
        lo = 8
    err = 0.0
    for i in range(lo, m):
        sc = atol + rtol * max(abs(y[i]), abs(y5[i]))
        err += (v[i] / sc) ** 2
    return np.sqrt(err / (m - lo))


@jit
def integrate_adaptive(route, y0, t0, t_end, t_out, rtol, atol, h_max,
                       max_steps, renorm, lam_ghat, omega, kind, pars,
                       knots, coefs, y_out, log_out, y_last):
    """Adaptive RK5(4) drive from t0 to t_end with dense output.

    Fills y_out[j] (and log_out[j] with the accumulated log scale) for
    each requested time in t_out, which must be strictly increasing and
    lie in (t0, t_end].  Returns
    (status, t_reached, log_scale, n_accepted, n_rejected, n_rhs, n_emitted);
    on a non-OK status y_last holds the last accepted state.
    """
    m = y0.shape[0]
    n_out = t_out.shape[0]
    k = np.zeros((7, m))
    ytmp = np.empty(m)
    y5 = np.empty(m)
    ever = np.empty(m)
    pw = np.empty(7)
    y = y0.copy()
    t = t0
    log_scale = 0.0
    n_acc = 0
    n_rej = 0
    j = 0
    status = OK

    evolution_rhs(route, t, y, k[0], lam_ghat, omega, kind, pars, knots,
                  coefs)
    n_fev = 1

    # initial step: probe the scaled derivative once, Euler-predict, probe
    # again, and size h against the larger of the two curvature estimates
    span = t_end - t0
    d0 = scaled_norm(route, y, y, y, rtol, atol)
    d1 = scaled_norm(route, k[0], y, y, rtol, atol)
    if d0 < 1e-10 or d1 < 1e-10:
        h0 = 1e-6 * span
    else:
        h0 = 0.01 * d0 / d1
    if h0 > span:
        h0 = span
    for i in range(m):
        ytmp[i] = y[i] + h0 * k[0, i]
    evolution_rhs(route, t + h0, ytmp, k[1], lam_ghat, omega, kind, pars,
                  knots, coefs)
    n_fev += 1
    for i in range(m):
        ever[i] = k[1, i] - k[0, i]
    d2 = scaled_norm(route, ever, y, y, rtol, atol) / h0
    der = max(d2, d1)
    if der <= 1e-15:
        h1 = max(1e-6 * span, h0 * 1e-3)
    else:
        h1 = (0.01 / der) ** 0.2
    h = min(100.0 * h0, h1)
    if h > h_max:
        h = h_max
    if h > span:
        h = span

    facold = 1e-4
    expo1 = 0.2 - 0.04 * 0.75
    reject = False

    while t < t_end:
        if n_acc + n_rej >= max_steps:
            status = MAX_STEPS_EXCEEDED
            break
        if t + h == t:
            status = STEP_UNDERFLOW
            break
        last = False
        h_use = h
        if t + h >= t_end:
            h_use = t_end - t
            last = True

        for s in range(1, 7):
            for i in range(m):
                acc = 0.0
                for q in range(s):
                    acc += RK_A[s, q] * k[q, i]
                ytmp[i] = y[i] + h_use * acc
            ts = t + RK_C[s] * h_use
            if s >= 5 and last:
                ts = t_end
            evolution_rhs(route, ts, ytmp, k[s], lam_ghat, omega, kind,
                          pars, knots, coefs)
        n_fev += 6
        for i in range(m):
            y5[i] = ytmp[i]  # stage-7 node is the 5th-order solution

        for i in range(m):
            e = 0.0
            for q in range(7):
                e += RK_E[q] * k[q, i]
            ever[i] = e * h_use
        err = scaled_norm(route, ever, y, y5, rtol, atol)

        if not np.isfinite(err):
            n_rej += 1
            reject = True
            h = 0.1 * h_use
            continue

        fac11 = err ** expo1
        if err <= 1.0:
            t_new = t_end if last else t + h_use
            while j < n_out and t_out[j] <= t_new:
                tt = t_out[j]
                if tt == t_new:
                    for i in range(m):
                        y_out[j, i] = y5[i]
                else:
                    sig = (tt - t) / h_use
                    for q in range(7):
                        pw[q] = RK_P[q, 0] + sig * (RK_P[q, 1] + sig
                                * (RK_P[q, 2] + sig * RK_P[q, 3]))
                    for i in range(m):
                        acc = 0.0
                        for q in range(7):
                            acc += k[q, i] * pw[q]
                        y_out[j, i] = y[i] + h_use * sig * acc
                log_out[j] = log_scale
                j += 1
            if renorm:
                fn = 0.0
                for i in range(m):
                    fn += y5[i] * y5[i]
                fn = np.sqrt(fn)
                if fn > 2.0 or fn < 0.5:
                    inv = 1.0 / fn
                    for i in range(m):
                        y5[i] *= inv
                        k[6, i] *= inv  # FSAL stays valid: rhs is linear
                    log_scale += np.log(fn)
            for i in range(m):
                y[i] = y5[i]
                k[0, i] = k[6, i]
            t = t_new
            n_acc += 1
            fac = fac11 / facold ** 0.04
            fac = max(0.1, min(5.0, fac / 0.9))
            h_new = h_use / fac
            if reject:
                h_new = min(h_new, h_use)
            reject = False
            facold = max(err, 1e-4)
            h = min(h_new, h_max)
        else:
            n_rej += 1
            reject = True
            h = h_use / min(5.0, fac11 / 0.9)

    for i in range(m):
        y_last[i] = y[i]
    return status, t, log_scale, n_acc, n_rej, n_fev, j
