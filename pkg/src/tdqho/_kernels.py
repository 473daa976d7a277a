"""Compiled hot loops: protocol evaluation and the Dormand-Prince 5(4) stepper.

Protocols reach the kernels as ``(kind, params, knots_t, knots_w, knots_d)``.
``side`` forces the branch of a sudden quench (-1 before, +1 after, 0 by
time) so that stages evaluated exactly at the jump use the segment's value.
"""

import math

import numpy as np

from ._jit import njit

KIND_CONSTANT = 0
KIND_QUENCH = 1
KIND_TANH = 2
KIND_RAMP = 3
KIND_SAMPLED = 4

MODE_ERMAKOV = 0  # y = [sigma, sigma_dot, phase_integral]
MODE_LINEAR = 1  # y = [x1, x1_dot, x2, x2_dot]

STATUS_OK = 0
STATUS_MAX_STEPS = 1
STATUS_UNDERFLOW = 2
STATUS_POSITIVITY = 3

MAX_HALVINGS = 60

# Dormand-Prince 5(4)
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
A71, A73, A74, A75, A76 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
D1 = -12715105075.0 / 11282082432.0
D3 = 87487479700.0 / 32700410799.0
D4 = -10690763975.0 / 1880347072.0
D5 = 701980252875.0 / 199316789632.0
D6 = -1453857185.0 / 822651844.0
D7 = 69997945.0 / 29380423.0


@njit
def omega_eval(kind, par, kt, kw, kd, t, side):
    if kind == KIND_CONSTANT:
        return par[0]
    if kind == KIND_QUENCH:
        if side < 0:
            return par[0]
        if side > 0:
            return par[1]
        return par[0] if t < par[2] else par[1]
    if kind == KIND_TANH:
        return 0.5 * (par[0] + par[1]) + 0.5 * (par[1] - par[0]) * math.tanh((t - par[2]) / par[3])
    if kind == KIND_RAMP:
        x = abs(t - par[2])
        if x == 0.0:
            return 0.0
        return math.pow(par[0] * x, 0.5 * par[1])
    # sampled: cubic Hermite on PCHIP slopes, clamped to the grid
    n = kt.shape[0]
    if t <= kt[0]:
        return kw[0]
    if t >= kt[n - 1]:
        return kw[n - 1]
    i = np.searchsorted(kt, t, side="right") - 1
    h = kt[i + 1] - kt[i]
    s = (t - kt[i]) / h
    s2 = s * s
    s3 = s2 * s
    return (kw[i] * (2 * s3 - 3 * s2 + 1) + kd[i] * h * (s3 - 2 * s2 + s)
            + kw[i + 1] * (3 * s2 - 2 * s3) + kd[i + 1] * h * (s3 - s2))


@njit
def omega_array(kind, par, kt, kw, kd, t):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        out[i] = omega_eval(kind, par, kt, kw, kd, t[i], 0)
    return out


@njit
def _rhs(mode, kind, par, kt, kw, kd, cpar, side, t, y, dy):
    w = omega_eval(kind, par, kt, kw, kd, t, side)
    w2 = w * w
    if mode == MODE_ERMAKOV:
        s = y[0]
        dy[0] = y[1]
        dy[1] = -w2 * s + cpar[0] / (s * s * s)
        dy[2] = cpar[1] / (s * s)
    else:
        dy[0] = y[1]
        dy[1] = -w2 * y[0]
        dy[2] = y[3]
        dy[3] = -w2 * y[2]


@njit
def _rms(v, sk):
    acc = 0.0
    for i in range(v.shape[0]):
        q = v[i] / sk[i]
        acc += q * q
    return math.sqrt(acc / v.shape[0])


@njit
def _initial_step(mode, kind, par, kt, kw, kd, cpar, side, t0, y0, f0, hmax, rtol, atol):
    dim = y0.shape[0]
    sk = np.empty(dim)
    for i in range(dim):
        sk[i] = atol + rtol * abs(y0[i])
    d0 = _rms(y0, sk)
    d1 = _rms(f0, sk)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    if not h0 > 0.0:  # overflowed norms under extreme tolerances
        h0 = 1e-6
    h0 = min(h0, hmax)
    y1 = y0 + h0 * f0
    if mode == MODE_ERMAKOV and y1[0] <= 0.0:
        return h0 * 0.01
    f1 = np.empty(dim)
    _rhs(mode, kind, par, kt, kw, kd, cpar, side, t0 + h0, y1, f1)
    d2 = _rms(f1 - f0, sk) / h0
    big = max(d1, d2)
    if big <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / big) ** 0.2
    return min(100.0 * h0, h1, hmax)


@njit
def dp5_integrate(mode, kind, par, kt, kw, kd, cpar, side, t0, t1, y0, rtol, atol, max_steps):
    """Integrate from t0 to t1 > t0.

    Returns (ts, ys, rcont, status, n_accepted, n_rejected).  ``rcont[i]``
    holds the five Hermite-Dormand-Prince dense-output vectors of step i.
    """
    dim = y0.shape[0]
    cap = 256
    ts = np.empty(cap)
    ys = np.empty((cap, dim))
    rc = np.empty((cap, 5, dim))
    ts[0] = t0
    ys[0] = y0
    n = 1

    y = y0.copy()
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    k5 = np.empty(dim)
    k6 = np.empty(dim)
    k7 = np.empty(dim)
    yt = np.empty(dim)
    ynew = np.empty(dim)
    errv = np.empty(dim)
    sk = np.empty(dim)

    _rhs(mode, kind, par, kt, kw, kd, cpar, side, t0, y, k1)
    span = t1 - t0
    h = _initial_step(mode, kind, par, kt, kw, kd, cpar, side, t0, y, k1, span, rtol, atol)
    t = t0
    errold = 1e-4
    rejected = False
    halvings = 0
    nacc = 0
    nrej = 0
    status = STATUS_OK
    last = False
    eps = 2.220446049250313e-16

    while True:
        if nacc + nrej >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if t + 1.01 * h >= t1:
            h = t1 - t
            last = True
        else:
            last = False
        if h <= 16.0 * eps * max(abs(t), 1.0) * 0.0625:
            status = STATUS_UNDERFLOW
            break

        bad = False
        for i in range(dim):
            yt[i] = y[i] + h * A21 * k1[i]
        if mode == MODE_ERMAKOV and yt[0] <= 0.0:
            bad = True
        if not bad:
            _rhs(mode, kind, par, kt, kw, kd, cpar, side, t + C2 * h, yt, k2)
            for i in range(dim):
                yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
            if mode == MODE_ERMAKOV and yt[0] <= 0.0:
                bad = True
        if not bad:
            _rhs(mode, kind, par, kt, kw, kd, cpar, side, t + C3 * h, yt, k3)
            for i in range(dim):
                yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            if mode == MODE_ERMAKOV and yt[0] <= 0.0:
                bad = True
        if not bad:
            _rhs(mode, kind, par, kt, kw, kd, cpar, side, t + C4 * h, yt, k4)
            for i in range(dim):
                yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            if mode == MODE_ERMAKOV and yt[0] <= 0.0:
                bad = True
        if not bad:
            _rhs(mode, kind, par, kt, kw, kd, cpar, side, t + C5 * h, yt, k5)
            for i in range(dim):
                yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            if mode == MODE_ERMAKOV and yt[0] <= 0.0:
                bad = True
        if not bad:
            _rhs(mode, kind, par, kt, kw, kd, cpar, side, t + h, yt, k6)
            for i in range(dim):
                ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i])
            if mode == MODE_ERMAKOV and ynew[0] <= 0.0:
                bad = True
        if bad:
            halvings += 1
            if halvings > MAX_HALVINGS:
                status = STATUS_POSITIVITY
                break
            h *= 0.5
            nrej += 1
            rejected = True
            continue

        _rhs(mode, kind, par, kt, kw, kd, cpar, side, t + h, ynew, k7)
        for i in range(dim):
            errv[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sk[i] = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        err = _rms(errv, sk)
        if not math.isfinite(err):
            err = 1e10
        fac11 = err ** 0.17
        if err <= 1.0:
            fac = fac11 / errold ** 0.04
            fac = max(0.1, min(5.0, fac / 0.9))
            hnew = h / fac
            errold = max(err, 1e-4)
            if n >= cap:
                cap *= 2
                ts2 = np.empty(cap)
                ys2 = np.empty((cap, dim))
                rc2 = np.empty((cap, 5, dim))
                ts2[:n] = ts[:n]
                ys2[:n] = ys[:n]
                rc2[:n - 1] = rc[:n - 1]
                ts, ys, rc = ts2, ys2, rc2
            for i in range(dim):
                ydiff = ynew[i] - y[i]
                bspl = h * k1[i] - ydiff
                rc[n - 1, 0, i] = y[i]
                rc[n - 1, 1, i] = ydiff
                rc[n - 1, 2, i] = bspl
                rc[n - 1, 3, i] = ydiff - h * k7[i] - bspl
                rc[n - 1, 4, i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i]
                                       + D6 * k6[i] + D7 * k7[i])
            t = t1 if last else t + h
            ts[n] = t
            for i in range(dim):
                y[i] = ynew[i]
                ys[n, i] = ynew[i]
                k1[i] = k7[i]
            n += 1
            nacc += 1
            halvings = 0
            if rejected:
                hnew = min(hnew, h)
            rejected = False
            h = hnew
            if last:
                break
        else:
            h = h / min(5.0, fac11 / 0.9)
            rejected = True
            nrej += 1
    return ts[:n].copy(), ys[:n].copy(), rc[:max(n - 1, 0)].copy(), status, nacc, nrej


@njit
def dense_eval(ts, rc, tq):
    """Dense-output values and time derivatives at query times tq.

    Queries are clamped to [ts[0], ts[-1]].
    """
    nq = tq.shape[0]
    dim = rc.shape[2]
    vals = np.empty((nq, dim))
    ders = np.empty((nq, dim))
    nsteps = rc.shape[0]
    for q in range(nq):
        t = tq[q]
        i = np.searchsorted(ts, t, side="right") - 1
        if i < 0:
            i = 0
        if i > nsteps - 1:
            i = nsteps - 1
        h = ts[i + 1] - ts[i]
        th = (t - ts[i]) / h
        th1 = 1.0 - th
        dth = (1.0 - 2.0 * th, 2.0 * th - 3.0 * th * th, 2.0 * th - 6.0 * th * th + 4.0 * th * th * th)
        for j in range(dim):
            r1 = rc[i, 0, j]
            r2 = rc[i, 1, j]
            r3 = rc[i, 2, j]
            r4 = rc[i, 3, j]
            r5 = rc[i, 4, j]
            vals[q, j] = r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))
            ders[q, j] = (r2 + dth[0] * r3 + dth[1] * r4 + dth[2] * r5) / h
    return vals, ders
