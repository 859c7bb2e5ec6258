"""Adaptive Runge-Kutta driver for the counterterm flow equation.

Integrates df/dt = (f - a)^2 + b2 in t = ln(Lambda/Lambda0) with an embedded
Cash-Karp 4(5) pair.  Near a divergence the driver switches to the reciprocal
variable w = 1/(f - a), whose equation dw/dt = -(1 + b2 w^2) is smooth through
the pole; a zero crossing of w is the pole.  This lets the same loop either
report a certified pole bracket (default) or continue the flow through the
divergence (limit-cycle continuation).

The driver is one self-contained scalar function so that numba can compile it
and the uncompiled function object doubles as the pure-Python fallback.
"""

import math

from ._accel import NUMBA_ENABLED, njit

# Status codes returned by the driver.
OK = 0
POLE = 1
FAILED = 2

# Cash-Karp 4(5) tableau.
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0
_A51, _A52, _A53, _A54 = -11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0
_A61, _A62, _A63, _A64, _A65 = (
    1631.0 / 55296.0,
    175.0 / 512.0,
    575.0 / 13824.0,
    44275.0 / 110592.0,
    253.0 / 4096.0,
)
_C1, _C3, _C4, _C6 = 37.0 / 378.0, 250.0 / 621.0, 125.0 / 594.0, 512.0 / 1771.0
_D1, _D3, _D4, _D5, _D6 = (
    2825.0 / 27648.0,
    18575.0 / 48384.0,
    13525.0 / 55296.0,
    277.0 / 14336.0,
    1.0 / 4.0,
)

# Switch to the reciprocal variable once |f - a| >= 1e6 * max(1, |b2|^.5).
_SWITCH_FACTOR = 1.0e6
_MAX_STEPS = 5_000_000


def _riccati_drive_impl(a, b2, f0, t_end, rtol, atol, through_poles):
    """Integrate the flow from t=0 to t=t_end.

    Returns (status, value, pole_lo, pole_hi) with the pole bracket expressed
    in t = ln(Lambda/Lambda0).  ``through_poles`` continues the flow across
    divergences instead of reporting the first one.
    """
    if t_end == 0.0:
        return OK, f0, 0.0, 0.0
    sgn = 1.0 if t_end > 0.0 else -1.0
    total = abs(t_end)

    babs = math.sqrt(abs(b2))
    bscale = babs if babs > 1.0 else 1.0
    switch_u = _SWITCH_FACTOR * bscale
    switch_back_w = 2.0 / switch_u

    u0 = f0 - a
    if abs(u0) >= switch_u:
        rep = 1
        y = 1.0 / u0
    else:
        rep = 0
        y = f0

    tau = 0.0
    h = 1.0e-4 if total > 1.0e-4 else total
    steps = 0
    while tau < total:
        if h > total - tau:
            h = total - tau
        if rep == 0:
            u = y - a
            k1 = sgn * (u * u + b2)
            yt = y + h * _A21 * k1
            u = yt - a
            k2 = sgn * (u * u + b2)
            yt = y + h * (_A31 * k1 + _A32 * k2)
            u = yt - a
            k3 = sgn * (u * u + b2)
            yt = y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3)
            u = yt - a
            k4 = sgn * (u * u + b2)
            yt = y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4)
            u = yt - a
            k5 = sgn * (u * u + b2)
            yt = y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5)
            u = yt - a
            k6 = sgn * (u * u + b2)
        else:
            k1 = sgn * (-1.0 - b2 * y * y)
            yt = y + h * _A21 * k1
            k2 = sgn * (-1.0 - b2 * yt * yt)
            yt = y + h * (_A31 * k1 + _A32 * k2)
            k3 = sgn * (-1.0 - b2 * yt * yt)
            yt = y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3)
            k4 = sgn * (-1.0 - b2 * yt * yt)
            yt = y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4)
            k5 = sgn * (-1.0 - b2 * yt * yt)
            yt = y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5)
            k6 = sgn * (-1.0 - b2 * yt * yt)
        y5 = y + h * (_C1 * k1 + _C3 * k3 + _C4 * k4 + _C6 * k6)
        y4 = y + h * (_D1 * k1 + _D3 * k3 + _D4 * k4 + _D5 * k5 + _D6 * k6)
        err = abs(y5 - y4)
        ymag = abs(y)
        if abs(y5) > ymag:
            ymag = abs(y5)
        tol = atol + rtol * ymag

        accepted = err <= tol or h <= 1.0e-14 * (1.0 + tau)
        if accepted:
            y_prev = y
            tau_prev = tau
            y = y5
            tau = tau + h
            if rep == 1 and (y_prev > 0.0 > y or y_prev < 0.0 < y or y == 0.0):
                if not through_poles:
                    # Bisect the w = 0 crossing; every midpoint trial is
                    # re-integrated from the anchor so decisions are made on
                    # independent, tiny RK4 errors.
                    lo = tau_prev
                    hi = tau
                    s0pos = y_prev > 0.0
                    for _ in range(80):
                        if hi - lo <= 1.0e-8:
                            break
                        mid = 0.5 * (lo + hi)
                        span = mid - tau_prev
                        hh = span / 64.0
                        w = y_prev
                        for _ in range(64):
                            w1 = sgn * (-1.0 - b2 * w * w)
                            wt = w + 0.5 * hh * w1
                            w2 = sgn * (-1.0 - b2 * wt * wt)
                            wt = w + 0.5 * hh * w2
                            w3 = sgn * (-1.0 - b2 * wt * wt)
                            wt = w + hh * w3
                            w4 = sgn * (-1.0 - b2 * wt * wt)
                            w = w + hh * (w1 + 2.0 * w2 + 2.0 * w3 + w4) / 6.0
                        if w == 0.0:
                            lo = mid - 2.5e-9
                            hi = mid + 2.5e-9
                            break
                        if (w > 0.0) == s0pos:
                            lo = mid
                        else:
                            hi = mid
                    t_a = sgn * lo
                    t_b = sgn * hi
                    if t_a > t_b:
                        t_a, t_b = t_b, t_a
                    return POLE, 0.0, t_a - 5.0e-8, t_b + 5.0e-8
            if rep == 0:
                if abs(y - a) >= switch_u:
                    rep = 1
                    y = 1.0 / (y - a)
            else:
                if abs(y) >= switch_back_w:
                    rep = 0
                    y = a + 1.0 / y
            if tau >= total:
                break
        if err == 0.0:
            fac = 5.0
        else:
            fac = 0.9 * (tol / err) ** 0.2
            if fac > 5.0:
                fac = 5.0
            elif fac < 0.2:
                fac = 0.2
        h = h * fac
        if h < 1.0e-16:
            return FAILED, y, 0.0, 0.0
        steps += 1
        if steps > _MAX_STEPS:
            return FAILED, y, 0.0, 0.0

    if rep == 1:
        if y == 0.0:
            return POLE, 0.0, t_end - 1.0e-9, t_end + 1.0e-9
        value = a + 1.0 / y
    else:
        value = y
    if not math.isfinite(value):
        return FAILED, value, 0.0, 0.0
    return OK, value, 0.0, 0.0


riccati_drive_py = _riccati_drive_impl

if NUMBA_ENABLED:
    riccati_drive_jit = njit(cache=True)(_riccati_drive_impl)
    riccati_drive = riccati_drive_jit
else:
    riccati_drive_jit = None
    riccati_drive = riccati_drive_py
