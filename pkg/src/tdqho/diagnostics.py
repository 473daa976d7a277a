"""Observables derived from (sigma, sigma_dot, omega).

Every function accepts scalars or numpy arrays.  Inputs are in the
convention of ``params.c`` and are first mapped to the c = 1/M^2
normalisation, where the formulas below hold.  All observables go
through the Bogoliubov pair (u, v); the sigma-form expressions are kept
as cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .protocols import OscillatorParams

R_CLAMP_TOL = 1e-12


class DiagnosticsDomainError(ValueError):
    """Observable undefined for the given state (e.g. omega = 0)."""


def _out(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


def wrap_angle(x):
    """Map angles to (-pi, pi]."""
    w = np.angle(np.exp(1j * np.asarray(x, dtype=float)))
    w = np.where(w <= -math.pi, math.pi, w)
    return _out(w)


def to_standard(sigma, sigma_dot, params: OscillatorParams):
    """Rescale (sigma, sigma_dot) into the c = 1/M^2 convention."""
    s = params.scale
    return np.asarray(sigma, dtype=float) * s, np.asarray(sigma_dot, dtype=float) * s


def _positive_omega(omega):
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0)):
        raise DiagnosticsDomainError("instantaneous eigenbasis undefined for omega <= 0")
    return w


def _positive_sigma(sigma):
    s = np.asarray(sigma, dtype=float)
    if np.any(~(s > 0)):
        raise DiagnosticsDomainError("sigma must be positive")
    return s


@dataclass(frozen=True)
class BogoliubovPair:
    u: complex
    v: complex

    def norm_defect(self):
        """|u|^2 - |v|^2 - 1."""
        return _out(np.abs(self.u) ** 2 - np.abs(self.v) ** 2 - 1.0)


@dataclass(frozen=True)
class SqueezeParams:
    r: float
    phi: float = 0.0
    chi: float = 0.0

    def __post_init__(self):
        if np.any(np.asarray(self.r) < 0):
            raise ValueError("squeezing modulus must be non-negative")

    def reconstruct(self):
        """(u, v) = (e^{-i chi} cosh r, e^{-i(chi - phi)} sinh r)."""
        r, phi, chi = (np.asarray(a) for a in (self.r, self.phi, self.chi))
        return BogoliubovPair(_out(np.exp(-1j * chi) * np.cosh(r)),
                              _out(np.exp(-1j * (chi - phi)) * np.sinh(r)))


def bogoliubov_uv(sigma, sigma_dot, omega, params: OscillatorParams) -> BogoliubovPair:
    """u = (1/s + M w s - i M s')/(2 sqrt(M w)), v = (1/s - M w s - i M s')/(2 sqrt(M w))."""
    w = _positive_omega(omega)
    s, sd = to_standard(_positive_sigma(sigma), sigma_dot, params)
    M = params.mass
    den = 2.0 * np.sqrt(M * w)
    u = (1.0 / s + M * w * s - 1j * M * sd) / den
    v = (1.0 / s - M * w * s - 1j * M * sd) / den
    return BogoliubovPair(_out(u), _out(v))


def squeeze_params(pair: BogoliubovPair) -> SqueezeParams:
    """(r, phi, chi) with u = e^{-i chi} cosh r and v = e^{-i(chi - phi)} sinh r."""
    u = np.asarray(pair.u, dtype=complex)
    v = np.asarray(pair.v, dtype=complex)
    au = np.abs(u)
    if np.any(au < 1.0 - R_CLAMP_TOL):
        raise DiagnosticsDomainError(f"|u| = {np.min(au)!r} < 1: not a Bogoliubov pair")
    r = np.arccosh(np.maximum(au, 1.0))
    chi = wrap_angle(-np.angle(u))
    phi = np.asarray(wrap_angle(np.angle(v) - np.angle(u)))
    phi = np.where((r == 0.0) | (np.abs(v) == 0.0), 0.0, phi)
    return SqueezeParams(_out(r), _out(phi), _out(chi))


def adiabaticity_Q(sigma, sigma_dot, omega, params: OscillatorParams):
    """Q = (M s'^2 + M w^2 s^2 + 1/(M s^2)) / (2 w)."""
    w = _positive_omega(omega)
    s, sd = to_standard(_positive_sigma(sigma), sigma_dot, params)
    M = params.mass
    return _out((M * sd * sd + M * w * w * s * s + 1.0 / (M * s * s)) / (2.0 * w))


def mean_excitations(Q):
    """<nu> = (Q - 1)/2 for an initial vacuum."""
    return _out((np.asarray(Q) - 1.0) / 2.0)


def fock_variances_sigma_form(n, sigma, sigma_dot, params: OscillatorParams):
    """(var_q, var_p) = (hbar s^2 (n+1/2), hbar (1/s^2 + M^2 s'^2)(n+1/2))."""
    s, sd = to_standard(_positive_sigma(sigma), sigma_dot, params)
    M, hb = params.mass, params.hbar
    k = n + 0.5
    return _out(hb * s * s * k), _out(hb * (1.0 / (s * s) + M * M * sd * sd) * k)


def fock_variances(n, sigma, sigma_dot, omega, params: OscillatorParams):
    """Position and momentum variances of the n-th dynamical Fock state.

    For omega > 0 this uses |u - v|^2 and |u + v|^2; where omega = 0 it
    falls back to the sigma form, which stays finite.
    """
    if n < 0:
        raise ValueError("level index must be >= 0")
    w = np.asarray(omega, dtype=float)
    if np.all(w > 0):
        pair = bogoliubov_uv(sigma, sigma_dot, w, params)
        M, hb = params.mass, params.hbar
        k = n + 0.5
        vq = hb / (M * w) * k * np.abs(np.asarray(pair.u) - pair.v) ** 2
        vp = hb * M * w * k * np.abs(np.asarray(pair.u) + pair.v) ** 2
        return _out(vq), _out(vp)
    vq, vp = (np.asarray(a) for a in fock_variances_sigma_form(n, sigma, sigma_dot, params))
    if w.ndim and np.any(w > 0):
        pos = w > 0
        bq, bp = fock_variances(n, np.asarray(sigma)[pos], np.asarray(sigma_dot)[pos], w[pos], params)
        vq = vq.copy()
        vp = vp.copy()
        vq[pos] = bq
        vp[pos] = bp
    return _out(vq), _out(vp)


def coherent_observables(alpha, sigma, sigma_dot, phase_integral, params: OscillatorParams):
    """(mean_q, var_q, var_p) for a coherent state of the invariant.

    mean_q = sqrt(2 hbar) sigma |alpha| cos(Lambda + theta) with
    alpha = |alpha| e^{-i theta}.
    """
    alpha = complex(alpha)
    s, _ = to_standard(_positive_sigma(sigma), sigma_dot, params)
    theta = -math.atan2(alpha.imag, alpha.real) if alpha != 0 else 0.0
    lam = np.asarray(phase_integral, dtype=float)
    mean_q = math.sqrt(2.0 * params.hbar) * s * abs(alpha) * np.cos(lam + theta)
    vq, vp = fock_variances_sigma_form(0, sigma, sigma_dot, params)
    return _out(mean_q), vq, vp


def ground_energy(sigma, sigma_dot, omega, params: OscillatorParams):
    """<H> in the dynamical ground state: Q hbar omega / 2.

    At omega = 0 the equivalent direct form (hbar/4)(M s'^2 + M w^2 s^2 + 1/(M s^2))
    is used.
    """
    w = np.asarray(omega, dtype=float)
    hb = params.hbar
    if np.all(w > 0):
        return _out(np.asarray(adiabaticity_Q(sigma, sigma_dot, w, params)) * hb * w / 2.0)
    s, sd = to_standard(_positive_sigma(sigma), sigma_dot, params)
    M = params.mass
    return _out(hb / 4.0 * (M * sd * sd + M * w * w * s * s + 1.0 / (M * s * s)))


COLUMNS = ("t", "omega", "sigma", "sigma_dot", "Q", "r", "phi", "chi", "n_exc", "var_q", "var_p")


@dataclass(frozen=True)
class DiagnosticsSample:
    t: float
    Q: float
    squeeze: SqueezeParams
    mean_excitations: float
    var_q: float
    var_p: float


def diagnose(t, omega, sigma, sigma_dot, params: OscillatorParams, n=0):
    """Column dict (keys :data:`COLUMNS`) for a batch of states.

    Quantities tied to the instantaneous eigenbasis are NaN where omega = 0.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    s = np.atleast_1d(np.asarray(sigma, dtype=float))
    sd = np.atleast_1d(np.asarray(sigma_dot, dtype=float))
    nan = np.full(t.shape, np.nan)
    Q, r, phi, chi = nan.copy(), nan.copy(), nan.copy(), nan.copy()
    pos = w > 0
    if np.any(pos):
        Q[pos] = adiabaticity_Q(s[pos], sd[pos], w[pos], params)
        sq = squeeze_params(bogoliubov_uv(s[pos], sd[pos], w[pos], params))
        r[pos], phi[pos], chi[pos] = sq.r, sq.phi, sq.chi
    vq, vp = fock_variances(n, s, sd, w, params)
    return {"t": t, "omega": w, "sigma": s, "sigma_dot": sd, "Q": Q, "r": r, "phi": phi,
            "chi": chi, "n_exc": (Q - 1.0) / 2.0, "var_q": np.atleast_1d(vq), "var_p": np.atleast_1d(vp)}


def diagnose_trajectory(traj, t=None, n=0):
    """:func:`diagnose` on a trajectory's step points or on a query grid."""
    if t is None:
        t = traj.t
        s, sd = traj.sigma, traj.sigma_dot
    else:
        s, sd, _ = traj.at(t)
    return diagnose(t, traj.protocol.omega(t), s, sd, traj.params, n=n)


def samples(columns):
    """Row objects from a :func:`diagnose` column dict."""
    out = []
    for i in range(columns["t"].shape[0]):
        sq = SqueezeParams(float(columns["r"][i]) if np.isfinite(columns["r"][i]) else 0.0,
                           float(columns["phi"][i]), float(columns["chi"][i]))
        out.append(DiagnosticsSample(float(columns["t"][i]), float(columns["Q"][i]), sq,
                                     float(columns["n_exc"][i]), float(columns["var_q"][i]),
                                     float(columns["var_p"][i])))
    return out
