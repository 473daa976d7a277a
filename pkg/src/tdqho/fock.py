"""Fock-space layer: squeezing matrix elements, excitation statistics,
transition tables, wavefunctions and two independent oracles.

Conventions: S(xi) = exp(-(xi/2) b^dag^2 + (xi^*/2) b^2), xi = r e^{i phi},
so that S|0> has the amplitude -e^{i phi} tanh(r)/sqrt(2) on |2>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .diagnostics import (SqueezeParams, adiabaticity_Q, bogoliubov_uv, squeeze_params,
                          to_standard)
from .ermakov import ErmakovTrajectory, alpha_phase
from .specfun import (QuadratureRule, assoc_legendre, hermite_normalized, hypergeom_terminating,
                      ln_factorial)

PMF_TAIL = 1e-14


class ParityError(ValueError):
    """Levels of opposite parity where a same-parity pair is required."""


class TruncationError(ValueError):
    """Truncation or quadrature order too small for the requested accuracy."""


def _check_levels(m, n):
    if m < 0 or n < 0:
        raise ValueError(f"levels must be non-negative, got ({m}, {n})")


# --------------------------------------------------------------------------
# matrix elements
# --------------------------------------------------------------------------

def _series_magnitude(lo, hi, r):
    """Signed real part of <hi|S|lo> without the phase factor.

    Each term of the finite sum carries the full prefactor in log space so
    that large levels neither overflow nor underflow.
    """
    k = (hi - lo) // 2
    if r == 0.0:
        return 1.0 if k == 0 else 0.0
    log_pref = (-(lo + 0.5) * math.log(math.cosh(r)) + 0.5 * (ln_factorial(hi) + ln_factorial(lo)))
    if k:
        log_pref += k * (math.log(math.tanh(r)) - math.log(2.0))
    # sum_j (-sinh^2 r / 4)^j / ((k+j)! j! (lo-2j)!)
    ls = 2.0 * math.log(math.sinh(r)) - 2.0 * math.log(2.0)
    terms = []
    for j in range(lo // 2 + 1):
        lt = log_pref + j * ls - ln_factorial(k + j) - ln_factorial(j) - ln_factorial(lo - 2 * j)
        terms.append((-1.0) ** j * math.exp(lt))
    return math.fsum(terms)


def squeeze_element_series(m, n, sq: SqueezeParams) -> complex:
    """<m|S|n> from the finite sums; exactly 0 for opposite parity."""
    _check_levels(m, n)
    if (m - n) % 2:
        return 0j
    r, phi = float(sq.r), float(sq.phi)
    if m >= n:
        k = (m - n) // 2
        mag = _series_magnitude(n, m, r)
        return mag * (-1.0) ** k * complex(math.cos(k * phi), math.sin(k * phi))
    k = (n - m) // 2
    mag = _series_magnitude(m, n, r)
    return mag * complex(math.cos(k * phi), -math.sin(k * phi))


def squeeze_element_hypergeom(m, n, sq: SqueezeParams) -> complex:
    """Same element with the inner sum written as a terminating 2F1."""
    _check_levels(m, n)
    if (m - n) % 2:
        return 0j
    lo, hi = min(m, n), max(m, n)
    k = (hi - lo) // 2
    r, phi = float(sq.r), float(sq.phi)
    f = hypergeom_terminating(-lo / 2.0, (1.0 - lo) / 2.0, k + 1.0, -math.sinh(r) ** 2)
    log_pref = (-(lo + 0.5) * math.log(math.cosh(r))
                + 0.5 * (ln_factorial(hi) + ln_factorial(lo)) - ln_factorial(lo) - ln_factorial(k))
    if k:
        if r == 0.0:
            return 0j
        log_pref += k * (math.log(math.tanh(r)) - math.log(2.0))
    mag = math.exp(log_pref) * f
    if m >= n:
        return mag * (-1.0) ** k * complex(math.cos(k * phi), math.sin(k * phi))
    return mag * complex(math.cos(k * phi), -math.sin(k * phi))


def squeeze_element_legendre(m, n, sq: SqueezeParams) -> complex:
    """sqrt(min!/max!) sqrt(x) P^|k|_l(x) times the phase, x = 1/cosh r."""
    _check_levels(m, n)
    if (m - n) % 2:
        raise ParityError(f"Legendre form needs equal parity, got ({m}, {n})")
    lo, hi = min(m, n), max(m, n)
    l, k = (m + n) // 2, (m - n) // 2
    x = 1.0 / math.cosh(float(sq.r))
    val = math.exp(0.5 * (ln_factorial(lo) - ln_factorial(hi))) * math.sqrt(x) * assoc_legendre(l, abs(k), x)
    phi = float(sq.phi)
    if k >= 0:
        return val * complex(math.cos(k * phi), math.sin(k * phi))
    kk = -k
    return (-1.0) ** kk * val * complex(math.cos(kk * phi), -math.sin(kk * phi))


def oracle_truncation(m, n, r):
    """Default truncation: max(64, 8 (m + n), ceil(40 r) + 32)."""
    return max(64, 8 * (m + n), int(math.ceil(40.0 * r)) + 32)


def oracle_squeeze_matrix(sq: SqueezeParams, N: int) -> np.ndarray:
    """expm of the truncated generator in an N-level Fock basis.

    Only the interior block (levels below N/2) approximates S.
    """
    r = float(sq.r)
    if N < 4 * (r * 10) + 20:
        raise TruncationError(f"N={N} below the budget 40 r + 20 = {40 * r + 20:.1f}")
    xi = r * complex(math.cos(sq.phi), math.sin(sq.phi))
    k = np.arange(N - 2)
    c = np.sqrt((k + 1.0) * (k + 2.0))
    G = np.zeros((N, N), dtype=complex)
    G[k + 2, k] = -0.5 * xi * c           # -(xi/2) b^dag^2
    G[k, k + 2] = 0.5 * np.conj(xi) * c   # (xi^*/2) b^2
    return expm(G)


# --------------------------------------------------------------------------
# probabilities
# --------------------------------------------------------------------------

def transition_probability(m, n, r) -> float:
    """p(m|n) = (min!/max!) x P^|k|_l(x)^2 with x = 1/cosh r.

    Evaluated from (min, max) only, so p(m|n) and p(n|m) are the same float.
    """
    _check_levels(m, n)
    lo, hi = (m, n) if m <= n else (n, m)
    if (hi - lo) % 2:
        return 0.0
    x = 1.0 / math.cosh(float(r))
    P = assoc_legendre((lo + hi) // 2, (hi - lo) // 2, x)
    return math.exp(ln_factorial(lo) - ln_factorial(hi)) * x * P * P


@dataclass(frozen=True)
class TransitionTable:
    N: int
    p: np.ndarray
    squeeze: SqueezeParams

    def column_sums(self):
        return self.p.sum(axis=0)


def transition_table(sq: SqueezeParams, N: int) -> TransitionTable:
    """p[m][n] for 0 <= m, n < N."""
    p = np.zeros((N, N))
    for lo in range(N):
        for hi in range(lo, N, 2):
            v = transition_probability(lo, hi, sq.r)
            p[lo, hi] = v
            p[hi, lo] = v
    return TransitionTable(N, p, sq)


@dataclass(frozen=True)
class ExcitationPMF:
    """Masses p(2k), k = 0..K, of the excitation number from the vacuum."""

    r: float
    p: np.ndarray

    @property
    def K(self):
        return self.p.size - 1

    @property
    def levels(self):
        return 2 * np.arange(self.p.size)

    def mean(self):
        return float(math.fsum(self.levels * self.p))

    def total(self):
        return float(math.fsum(self.p))


def negative_binomial_pmf(p_tilde, K, q=None):
    """binom(k - 1/2, k) p~^(1/2) (1 - p~)^k for k = 0..K.

    ``q`` may carry 1 - p~ when it is known more accurately than by
    subtraction.
    """
    if not 0.0 < p_tilde <= 1.0:
        raise ValueError(f"p~ must lie in (0, 1], got {p_tilde}")
    q = 1.0 - p_tilde if q is None else q
    out = np.empty(K + 1)
    coef = 1.0
    root = math.sqrt(p_tilde)
    qk = 1.0
    for k in range(K + 1):
        if k:
            coef *= (2 * k - 1) / (2 * k)
            qk *= q
        out[k] = coef * root * qk
    return out


def pmf_cutoff(r, tail=PMF_TAIL):
    """Smallest K with tanh(r)^(2K) cosh(r) <= tail (0 when r = 0)."""
    if r == 0.0:
        return 0
    lq = 2.0 * math.log(math.tanh(r))
    return max(0, int(math.ceil((math.log(tail) - math.log(math.cosh(r))) / lq)))


def ground_excitation_pmf(r, K=None) -> ExcitationPMF:
    """Excitation PMF from the vacuum: negative binomial with p~ = 1/cosh^2 r."""
    r = float(r)
    if r < 0:
        raise ValueError("r must be non-negative")
    K = pmf_cutoff(r) if K is None else int(K)
    if K < 0:
        raise ValueError("K must be >= 0")
    return ExcitationPMF(r, negative_binomial_pmf(1.0 / math.cosh(r) ** 2, K, q=math.tanh(r) ** 2))


def pmf_factorial_form(r, K):
    """(2k)!/((k!)^2 2^{2k}) tanh^{2k} r / cosh r, evaluated in log space."""
    out = np.zeros(K + 1)
    lt = math.log(math.tanh(r)) if r > 0 else -math.inf
    for k in range(K + 1):
        if k and r == 0:
            continue
        lv = (ln_factorial(2 * k) - 2 * ln_factorial(k) - 2 * k * math.log(2.0)
              - math.log(math.cosh(r)) + (2 * k * lt if k else 0.0))
        out[k] = math.exp(lv)
    return out


# --------------------------------------------------------------------------
# wavefunctions and amplitudes
# --------------------------------------------------------------------------

def adiabatic_wavefunction(m, q, omega, params):
    """Instantaneous eigenfunction Phi_m(q) of H(t) at frequency omega."""
    q = np.asarray(q, dtype=float)
    a = math.sqrt(params.mass * omega / params.hbar)
    y = a * q
    h = hermite_normalized(m, y)[m]
    return math.sqrt(a) * h * np.exp(-0.5 * y * y)


def wavefunction(n, q, sigma, sigma_dot, phase_integral, params, include_phase=True):
    """Dynamical eigenstate psi_n(q) of the invariant, with e^{i alpha_n}."""
    q = np.asarray(q, dtype=float)
    s, sd = (float(v) for v in to_standard(sigma, sigma_dot, params))
    hb, M = params.hbar, params.mass
    x = q / (math.sqrt(hb) * s)
    h = hermite_normalized(n, x)[n]
    chirp = np.exp(1j * M * sd * q * q / (2.0 * hb * s))
    out = (hb * s * s) ** -0.25 * h * np.exp(-0.5 * x * x) * chirp
    if include_phase:
        out = out * np.exp(-1j * (n + 0.5) * float(phase_integral))
    return out


def quadrature_amplitude(m, n, sigma, sigma_dot, omega, params, rule: QuadratureRule) -> complex:
    """Overlap int Phi_m(q) phi_n(q) dq by Gauss-Hermite, phases alpha_n excluded."""
    if not omega > 0:
        raise ValueError("adiabatic eigenfunctions need omega > 0")
    if rule.order < m + n + 16:
        raise TruncationError(f"quadrature order {rule.order} < m + n + 16 = {m + n + 16}")
    s, _ = (float(v) for v in to_standard(sigma, sigma_dot, params))
    hb, M = params.hbar, params.mass
    kappa2 = M * omega * s * s
    # q = sqrt(hbar) s x with x = u sqrt(2/(1 + kappa^2)) turns the Gaussian into e^{-u^2}
    scale = math.sqrt(2.0 / (1.0 + kappa2))
    q = math.sqrt(hb) * s * scale * rule.nodes
    g = np.exp(0.5 * (1.0 + kappa2) * (q / (math.sqrt(hb) * s)) ** 2)
    vals = np.conj(adiabatic_wavefunction(m, q, omega, params)) * \
        wavefunction(n, q, sigma, sigma_dot, 0.0, params, include_phase=False) * g
    return complex(rule.integrate(vals) * math.sqrt(hb) * s * scale)


def full_amplitude(m, n, t, traj: ErmakovTrajectory, tol=1e-12) -> complex:
    """e^{i alpha_n} e^{i (n+1/2) chi} <m|S(t)|n> for a run started in equilibrium."""
    t0 = traj.t[0]
    s0, sd0 = traj.sigma[0], traj.sigma_dot[0]
    w0 = float(traj.protocol.omega_before(t0))
    if sd0 != 0.0 or not w0 > 0 or abs(adiabaticity_Q(s0, sd0, w0, traj.params) - 1.0) > tol:
        raise ValueError("full_amplitude needs equilibrium initial conditions")
    s, sd, _ = traj.at(t)
    w = float(traj.protocol.omega(t))
    sq = squeeze_params(bogoliubov_uv(s, sd, w, traj.params))
    phase = float(alpha_phase(traj, n, t)) + (n + 0.5) * float(sq.chi)
    return complex(math.cos(phase), math.sin(phase)) * squeeze_element_series(m, n, sq)


def quadratic_diagonalize(eta, eps):
    """Diagonalise eta b^dag b + eps b^dag^2 + h.c.: (omega_eff, r, phi)."""
    eps = complex(eps)
    a = abs(eps)
    if not eta > 2.0 * a:
        raise ValueError(f"unstable quadratic form: eta={eta} <= 2|eps|={2 * a}")
    return (math.sqrt(eta * eta - 4.0 * a * a), 0.5 * math.atanh(2.0 * a / eta),
            math.atan2(eps.imag, eps.real) if a else 0.0)
