"""Analytic reference solutions: sudden quench, Airy ramps, scaling laws.

Airy formulas live in the rescaled variables s = delta^(1/3) t and
sigma~ = delta^(1/6) sigma with Ermakov constant c = 1/4; use
:func:`to_rescaled` / :func:`from_rescaled` to move between the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .specfun import airy, ln_gamma

#: sigma^2 = HALF_RAMP_WEIGHT (Ai^2 + Bi^2) for s <= 0
HALF_RAMP_WEIGHT = math.pi / 2.0
#: sigma^2 = w_A Ai(-s)^2 + w_B Bi(-s)^2 for s > 0
FULL_RAMP_WEIGHTS = (3.0 * math.pi / 2.0, math.pi / 6.0)
#: Ermakov constant of the Airy solutions
AIRY_C = 0.25


def _out(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


# --------------------------------------------------------------------------
# sudden quench
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuenchReference:
    omega_i: float
    omega_f: float
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.omega_i > 0 and self.omega_f > 0):
            raise ValueError("quench frequencies must be positive")


def quench_sigma(ref: QuenchReference, t):
    """Post-quench (sigma, sigma_dot) in the c = 1/M^2 convention, t >= 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("closed form holds for t >= 0 only")
    wi, wf = ref.omega_i, ref.omega_f
    a = 1.0 / math.sqrt(ref.mass * wi)
    c, s = np.cos(wf * t), np.sin(wf * t)
    rho2 = (wi / wf) ** 2
    d = c * c + rho2 * s * s
    root = np.sqrt(d)
    return _out(a * root), _out(a * wf * s * c * (rho2 - 1.0) / root)


@dataclass(frozen=True)
class QuenchDiagnostics:
    Q: float
    r: float
    omega_f: float
    raising: bool

    def phi(self, t):
        """Squeezing phase in (-pi, pi]; cos(phi) = sign(w_i - w_f) cos(2 w_f t)."""
        if self.r == 0.0:
            return _out(np.zeros_like(np.asarray(t, dtype=float)))
        x = (math.pi if self.raising else 0.0) - 2.0 * self.omega_f * np.asarray(t, dtype=float)
        w = np.angle(np.exp(1j * x))
        return _out(np.where(w <= -math.pi, math.pi, w))


def quench_diagnostics(ref: QuenchReference) -> QuenchDiagnostics:
    wi, wf = ref.omega_i, ref.omega_f
    Q = (wi * wi + wf * wf) / (2.0 * wi * wf)
    r = math.acosh(max(1.0, (wi + wf) / (2.0 * math.sqrt(wi * wf))))
    return QuenchDiagnostics(Q, r, wf, wi < wf)


def quench_variances(ref: QuenchReference, n, t):
    """Post-quench Fock-state variances (var_q, var_p) at t >= 0.

    var_p is cos^2 + (w_f/w_i)^2 sin^2 times hbar M w_i (n + 1/2), which
    equals the sigma-form value and is continuous across the jump.
    """
    t = np.asarray(t, dtype=float)
    wi, wf = ref.omega_i, ref.omega_f
    k = n + 0.5
    c2, s2 = np.cos(wf * t) ** 2, np.sin(wf * t) ** 2
    vq = ref.hbar / (ref.mass * wi) * k * (c2 + (wi / wf) ** 2 * s2)
    vp = ref.hbar * ref.mass * wi * k * (c2 + (wf / wi) ** 2 * s2)
    return _out(vq), _out(vp)


def quench_mean_variances(ref: QuenchReference, n):
    """One-period averages of :func:`quench_variances`."""
    wi, wf = ref.omega_i, ref.omega_f
    k = n + 0.5
    return (ref.hbar / (2 * ref.mass * wi) * k * (1 + (wi / wf) ** 2),
            ref.hbar * ref.mass * wi / 2 * k * (1 + (wf / wi) ** 2))


# --------------------------------------------------------------------------
# Airy ramps (c = 1/4, rescaled variables)
# --------------------------------------------------------------------------

def to_rescaled(t, sigma, sigma_dot, delta):
    """(s, sigma~, dsigma~/ds) from physical (t, sigma, dsigma/dt)."""
    k = delta ** (1.0 / 6.0)
    return (_out(delta ** (1.0 / 3.0) * np.asarray(t, dtype=float)),
            _out(k * np.asarray(sigma, dtype=float)), _out(np.asarray(sigma_dot, dtype=float) / k))


def from_rescaled(s, sigma_r, sigma_r_prime, delta):
    """Inverse of :func:`to_rescaled`."""
    k = delta ** (1.0 / 6.0)
    return (_out(np.asarray(s, dtype=float) / delta ** (1.0 / 3.0)),
            _out(np.asarray(sigma_r, dtype=float) / k), _out(k * np.asarray(sigma_r_prime, dtype=float)))


def convert_sigma(sigma, sigma_dot, c_from, c_to):
    """Map an Ermakov solution between constants: sigma scales as c^(1/4).

    Going from c = 1/M^2 to c = 1/4 the factor is sqrt(M/2).
    """
    f = (c_to / c_from) ** 0.25
    return _out(f * np.asarray(sigma, dtype=float)), _out(f * np.asarray(sigma_dot, dtype=float))


def airy_half_ramp(s):
    """(sigma, dsigma/ds) for s <= 0: sigma^2 = (pi/2)(Ai^2 + Bi^2)."""
    s = np.asarray(s, dtype=float)
    if np.any(s > 0):
        raise ValueError("half-ramp solution is defined for s <= 0")
    ai, bi, aip, bip = (np.asarray(v) for v in airy(s))
    w = HALF_RAMP_WEIGHT
    sig = np.sqrt(w * (ai * ai + bi * bi))
    return _out(sig), _out(w * (ai * aip + bi * bip) / sig)


def airy_full_ramp(s):
    """(sigma, dsigma/ds) for s >= 0: sigma^2 = (3 pi/2) Ai(-s)^2 + (pi/6) Bi(-s)^2."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("full-ramp branch is defined for s >= 0")
    ai, bi, aip, bip = (np.asarray(v) for v in airy(-s))
    wa, wb = FULL_RAMP_WEIGHTS
    sig = np.sqrt(wa * ai * ai + wb * bi * bi)
    return _out(sig), _out(-(wa * ai * aip + wb * bi * bip) / sig)


def airy_ramp(s):
    """Piecewise solution over the whole symmetric linear ramp."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    sig = np.empty_like(s)
    sd = np.empty_like(s)
    neg = s <= 0
    if np.any(neg):
        sig[neg], sd[neg] = airy_half_ramp(s[neg])
    if np.any(~neg):
        sig[~neg], sd[~neg] = airy_full_ramp(s[~neg])
    return sig, sd


def half_ramp_sigma0_sq():
    """sigma^2(0) = 2 pi / (3^(4/3) Gamma(2/3)^2)."""
    return 2.0 * math.pi / (3.0 ** (4.0 / 3.0) * math.exp(2.0 * ln_gamma(2.0 / 3.0)))


def half_ramp_sigma_sigma_dot0():
    """sigma(0) sigma'(0) = pi / (3 Gamma(1/3) Gamma(2/3))."""
    return math.pi / (3.0 * math.exp(ln_gamma(1.0 / 3.0) + ln_gamma(2.0 / 3.0)))


def half_ramp_excess_energy(delta, hbar=1.0):
    """Ground-state energy at the critical point: pi hbar delta^(1/3) / (3^(2/3) Gamma(1/3)^2)."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    return math.pi * hbar * delta ** (1.0 / 3.0) / (3.0 ** (2.0 / 3.0) * math.exp(2.0 * ln_gamma(1.0 / 3.0)))


def asymptotic_r(eta):
    """Late-time squeezing of the eta ramp: arccosh(1/sin(pi/(2 + eta)))."""
    if not eta >= 1:
        raise ValueError("eta must be >= 1")
    return math.acosh(1.0 / math.sin(math.pi / (2.0 + eta)))


def kz_exponent(z_nu):
    """Kibble-Zurek exponent z nu / (1 + z nu)."""
    if not z_nu > 0:
        raise ValueError("z_nu must be positive")
    if math.isinf(z_nu):
        return 1.0
    return z_nu / (1.0 + z_nu)


# --------------------------------------------------------------------------
# oscillation averaging
# --------------------------------------------------------------------------

def oscillation_average(t, x, tail=0.2, iterations=3):
    """Average of x over its last full oscillation period.

    The period is delimited by the last two upward crossings of x - m, where
    m starts as the mean of the trailing ``tail`` fraction and is then
    replaced by the period average itself.  Falls back to the tail mean if
    fewer than two crossings exist.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    start = int((1.0 - tail) * t.size)
    m = float(np.mean(x[start:]))
    for _ in range(iterations):
        d = x - m
        up = np.nonzero((d[:-1] < 0) & (d[1:] >= 0))[0]
        if up.size < 2:
            return m
        i0, i1 = up[-2], up[-1]
        # linear interpolation of the crossing instants
        ta = t[i0] - d[i0] * (t[i0 + 1] - t[i0]) / (d[i0 + 1] - d[i0])
        tb = t[i1] - d[i1] * (t[i1 + 1] - t[i1]) / (d[i1 + 1] - d[i1])
        seg_t = np.concatenate([[ta], t[i0 + 1:i1 + 1], [tb]])
        seg_x = np.interp(seg_t, t, x)
        m = float(trapezoid(seg_x, seg_t) / (tb - ta))
    return m


def loglog_slope(x, y):
    """Least-squares slope of log y against log x."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])
