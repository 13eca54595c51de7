"""Adaptive Dormand-Prince 5(4) stepping for the propagators.

One shared driver, compiled per right-hand side through thin cached numba
wrappers in the physics modules.  The driver works on flat contiguous state
vectors (complex or real), steps exactly onto requested sample times by
capping the step, and reports step statistics so callers can surface
diagnostics.

References
----------
Dormand & Prince, J. Comp. Appl. Math. 6, 19 (1980).
Hairer, Norsett & Wanner, "Solving Ordinary Differential Equations I",
2nd ed., Springer (1993): step-size controller and starting-step rule.
"""

import numpy as np
from numba.extending import register_jitable

# Butcher tableau, classic DOPRI5 coefficients.
_C2, _C3, _C4, _C5, _C6 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
# fifth-minus-fourth order error weights (stage 7 = FSAL stage)
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0,
                                71.0 / 1920.0, -17253.0 / 339200.0,
                                22.0 / 525.0, -1.0 / 40.0)

_EPS = 2.220446049250313e-16

# driver status codes
OK = 0
STEP_UNDERFLOW = 1
STEP_BUDGET = 2


class IntegrationError(RuntimeError):
    """Adaptive stepping failed; t_reached is the last good time."""

    def __init__(self, message, t_reached):
        super().__init__(message)
        self.t_reached = t_reached


class StepUnderflowError(IntegrationError):
    pass


class StepBudgetError(IntegrationError):
    pass


def raise_for_status(status, t_reached, context=""):
    where = f" in {context}" if context else ""
    if status == STEP_UNDERFLOW:
        raise StepUnderflowError(
            f"step size underflow at t = {t_reached}{where} (stiff failure)",
            t_reached)
    if status == STEP_BUDGET:
        raise StepBudgetError(
            f"step budget exhausted at t = {t_reached}{where}", t_reached)


@register_jitable
def _err_norm(e, y0, y1, rtol, atol):
    n = e.size
    s = 0.0
    for i in range(n):
        a0 = abs(y0[i])
        a1 = abs(y1[i])
        sc = atol + rtol * (a0 if a0 > a1 else a1)
        q = abs(e[i]) / sc
        s += q * q
    return np.sqrt(s / n)


@register_jitable
def _initial_step(rhs, t0, y0, f0, rtol, atol, hmax, rp, rv1, rv2, w1, w2):
    n = y0.size
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        q0 = abs(y0[i]) / sc
        q1 = abs(f0[i]) / sc
        d0 += q0 * q0
        d1 += q1 * q1
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    if h0 > hmax:
        h0 = hmax
    y1 = np.empty_like(y0)
    f1 = np.empty_like(y0)
    for i in range(n):
        y1[i] = y0[i] + h0 * f0[i]
    rhs(t0 + h0, y1, f1, rp, rv1, rv2, w1, w2)
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        q = abs(f1[i] - f0[i]) / sc
        d2 += q * q
    d2 = np.sqrt(d2 / n) / h0
    dm = d1 if d1 > d2 else d2
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    h = min(100.0 * h0, h1)
    return min(h, hmax)


@register_jitable
def _dopri5(rhs, t0, t1, y0, rtol, atol, ts, ysamp, rp, rv1, rv2, w1, w2,
            max_steps):
    """Integrate y' = rhs(t, y) from t0 to t1 (t1 > t0).

    Fills ysamp[i] with y(ts[i]) for sorted ts inside [t0, t1] by landing
    steps exactly on the sample times.  Returns
    (status, t_reached, y, naccept, nreject).
    """
    n = y0.size
    y = y0.copy()
    ynew = np.empty_like(y)
    yt = np.empty_like(y)
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    k5 = np.empty_like(y)
    k6 = np.empty_like(y)
    k7 = np.empty_like(y)
    e = np.empty_like(y)

    nts = ts.size
    isamp = 0
    t = t0
    while isamp < nts and ts[isamp] <= t:
        for i in range(n):
            ysamp[isamp, i] = y[i]
        isamp += 1

    rhs(t, y, k1, rp, rv1, rv2, w1, w2)
    h = _initial_step(rhs, t, y, k1, rtol, atol, t1 - t0, rp, rv1, rv2, w1, w2)
    errprev = 1e-4
    naccept = 0
    nreject = 0
    rejected_last = False
    nsteps = 0

    while t < t1:
        hmin = 16.0 * _EPS * max(abs(t), 1.0)
        if t1 - t < hmin:
            t = t1
            break
        if nsteps >= max_steps:
            return STEP_BUDGET, t, y, naccept, nreject
        nsteps += 1
        # cap the step onto the next sample time / the interval end
        target = t1
        if isamp < nts and ts[isamp] < target:
            target = ts[isamp]
        if target - t < hmin:
            # degenerate sample spacing: record and continue
            while isamp < nts and ts[isamp] - t < hmin:
                for i in range(n):
                    ysamp[isamp, i] = y[i]
                isamp += 1
            continue
        htry = h
        if t + htry >= target:
            htry = target - t
        if htry < hmin:
            return STEP_UNDERFLOW, t, y, naccept, nreject

        for i in range(n):
            yt[i] = y[i] + htry * (_A21 * k1[i])
        rhs(t + _C2 * htry, yt, k2, rp, rv1, rv2, w1, w2)
        for i in range(n):
            yt[i] = y[i] + htry * (_A31 * k1[i] + _A32 * k2[i])
        rhs(t + _C3 * htry, yt, k3, rp, rv1, rv2, w1, w2)
        for i in range(n):
            yt[i] = y[i] + htry * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        rhs(t + _C4 * htry, yt, k4, rp, rv1, rv2, w1, w2)
        for i in range(n):
            yt[i] = y[i] + htry * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i]
                                   + _A54 * k4[i])
        rhs(t + _C5 * htry, yt, k5, rp, rv1, rv2, w1, w2)
        for i in range(n):
            yt[i] = y[i] + htry * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                   + _A64 * k4[i] + _A65 * k5[i])
        rhs(t + _C6 * htry, yt, k6, rp, rv1, rv2, w1, w2)
        for i in range(n):
            ynew[i] = y[i] + htry * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                     + _B5 * k5[i] + _B6 * k6[i])
        rhs(t + htry, ynew, k7, rp, rv1, rv2, w1, w2)
        for i in range(n):
            e[i] = htry * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i]
                           + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
        err = _err_norm(e, y, ynew, rtol, atol)

        if err <= 1.0 and np.isfinite(err):
            t = t + htry
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]  # FSAL
            while isamp < nts and ts[isamp] <= t:
                for i in range(n):
                    ysamp[isamp, i] = y[i]
                isamp += 1
            naccept += 1
            if err < 1e-30:
                fac = 5.0
            else:
                fac = 0.9 * err ** -0.2 * errprev ** 0.04
                if fac > 5.0:
                    fac = 5.0
                if fac < 0.2:
                    fac = 0.2
            if rejected_last and fac > 1.0:
                fac = 1.0
            rejected_last = False
            errprev = err if err > 1e-10 else 1e-10
            h = htry * fac
        else:
            nreject += 1
            rejected_last = True
            if not np.isfinite(err):
                h = htry * 0.1
            else:
                fac = 0.9 * err ** -0.2
                if fac < 0.2:
                    fac = 0.2
                if fac > 1.0:
                    fac = 1.0
                h = htry * fac

    return OK, t, y, naccept, nreject
