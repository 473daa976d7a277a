"""Ermakov equation solver and closed-form solution constructors.

The auxiliary amplitude obeys

    sigma'' + omega(t)^2 sigma = c / sigma^3,

integrated together with the phase integral Lambda(t) = int dt / (M sigma_std^2),
where sigma_std is sigma mapped to the c = 1/M^2 convention.  In any
convention this reduces to d Lambda/dt = sqrt(c)/sigma^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _spi
from scipy.interpolate import PchipInterpolator

from . import _kernels as K
from .protocols import FrequencyProtocol, OscillatorParams, ProtocolError, Sampled
from .specfun import airy

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12
DEFAULT_MAX_STEPS = 20_000_000


class IntegrationError(RuntimeError):
    """The adaptive integrator could not complete; ``state`` holds the last good point."""

    def __init__(self, message, state=None):
        super().__init__(message if state is None else f"{message} (last state: {state})")
        self.state = state


class ErmakovConstraintError(ValueError):
    """Coefficients of a closed-form Ermakov solution violate their constraint."""


@dataclass(frozen=True)
class ErmakovState:
    t: float
    sigma: float
    sigma_dot: float
    phase_integral: float


# --------------------------------------------------------------------------
# initial conditions
# --------------------------------------------------------------------------

def _equilibrium_sigma(w, params):
    return (params.c * params.mass ** 2) ** 0.25 / math.sqrt(params.mass * w)


def equilibrium_ics(p: FrequencyProtocol, t0: float, params: OscillatorParams):
    """(sigma0, 0) making the invariant proportional to H(t0), so Q(t0) = 1.

    At a quench instant the pre-jump frequency is used.
    """
    w = float(p.omega_before(t0))
    if not w > 0:
        raise ProtocolError(f"no equilibrium at t0={t0}: omega(t0) = {w}")
    return _equilibrium_sigma(w, params), 0.0


def adiabatic_ics(p: FrequencyProtocol, t0: float, params: OscillatorParams):
    """First-order WKB values: the equilibrium sigma and its time derivative.

    Used as the finite-time stand-in for boundary conditions imposed at
    t = -inf.
    """
    w = float(p.omega_before(t0))
    if not w > 0:
        raise ProtocolError(f"adiabatic initial data need omega(t0) > 0, got {w}")
    wd = float(p.omega_dot(t0))
    s0 = _equilibrium_sigma(w, params)
    return s0, -0.5 * s0 * wd / w


# --------------------------------------------------------------------------
# numerical trajectory
# --------------------------------------------------------------------------

def _segments(p, t0, t1):
    cuts = sorted(b for b in p.breakpoints() if t0 < b < t1)
    edges = [t0, *cuts, t1]
    quench = p.kernel_spec().kind == K.KIND_QUENCH
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        side = 0
        if quench:
            side = -1 if b <= p.t_q else 1
        out.append((a, b, side))
    return out


def _run(mode, p, cpar, y0, t_span, rtol, atol, max_steps):
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got {t_span}")
    lo, hi = p.domain()
    if t0 < lo or t1 > hi:
        raise ProtocolError(f"span {t_span} leaves the protocol domain [{lo}, {hi}]")
    ks = p.kernel_spec()
    y = np.asarray(y0, dtype=float).copy()
    t_parts, y_parts, rc_parts = [], [], []
    nacc = nrej = 0
    for a, b, side in _segments(p, t0, t1):
        ts, ys, rc, status, na, nr = K.dp5_integrate(
            mode, ks.kind, ks.params, ks.knots_t, ks.knots_w, ks.knots_d, cpar, side,
            a, b, y, float(rtol), float(atol), int(max_steps))
        nacc += na
        nrej += nr
        if status != K.STATUS_OK:
            reason = {K.STATUS_MAX_STEPS: "step budget exhausted",
                      K.STATUS_UNDERFLOW: "step size underflow",
                      K.STATUS_POSITIVITY: "sigma <= 0 retry budget exhausted"}[status]
            last = tuple(float(v) for v in ys[-1])
            raise IntegrationError(f"integration failed at t={ts[-1]:.17g}: {reason}",
                                   state=(float(ts[-1]),) + last)
        t_parts.append(ts if not t_parts else ts[1:])
        y_parts.append(ys if not y_parts else ys[1:])
        rc_parts.append(rc)
        y = ys[-1].copy()
    return (np.concatenate(t_parts), np.concatenate(y_parts), np.concatenate(rc_parts),
            {"accepted": nacc, "rejected": nrej})


class _Dense:
    """Shared dense-output access for a piecewise DP5 solution."""

    t: np.ndarray
    y: np.ndarray
    rcont: np.ndarray

    def _check_span(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.t[0], self.t[-1]
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(t < lo - tol) or np.any(t > hi + tol):
            raise ValueError(f"t outside trajectory span [{lo}, {hi}]")
        return t

    def _dense(self, t):
        t = self._check_span(t)
        flat = np.ascontiguousarray(np.atleast_1d(t).ravel())
        vals, ders = K.dense_eval(self.t, self.rcont, flat)
        return t.shape, vals, ders

    @property
    def span(self):
        return float(self.t[0]), float(self.t[-1])


def _shape(a, shape):
    a = a.reshape(shape)
    return float(a) if a.ndim == 0 else a


@dataclass(eq=False)
class ErmakovTrajectory(_Dense):
    """Accepted steps of an Ermakov integration with dense output.

    ``y`` columns are sigma, sigma_dot and the phase integral.
    """

    params: OscillatorParams
    protocol: FrequencyProtocol
    t: np.ndarray
    y: np.ndarray
    rcont: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def sigma(self):
        return self.y[:, 0]

    @property
    def sigma_dot(self):
        return self.y[:, 1]

    @property
    def phase_integral(self):
        return self.y[:, 2]

    def omega(self, t=None):
        return self.protocol.omega(self.t if t is None else t)

    def at(self, t):
        """(sigma, sigma_dot, phase_integral) at arbitrary t in the span."""
        shape, vals, _ = self._dense(t)
        return tuple(_shape(vals[:, j], shape) for j in range(3))

    def sigma_ddot(self, t):
        """Second derivative from the dense interpolant of sigma_dot."""
        shape, _, ders = self._dense(t)
        return _shape(ders[:, 1], shape)

    def residual(self, t=None):
        """sigma_ddot + omega^2 sigma - c/sigma^3 with sigma_ddot from dense output."""
        t = self.t if t is None else np.asarray(t, dtype=float)
        s, _, _ = self.at(t)
        w = np.asarray(self.protocol.omega(t))
        return self.sigma_ddot(t) + w * w * s - self.params.c / s ** 3

    def states(self):
        return [ErmakovState(float(t), float(a), float(b), float(c))
                for t, (a, b, c) in zip(self.t, self.y)]

    def final_state(self):
        return ErmakovState(float(self.t[-1]), *(float(v) for v in self.y[-1]))


def integrate(p: FrequencyProtocol, params: OscillatorParams, ics, t_span,
              tol=(DEFAULT_RTOL, DEFAULT_ATOL), max_steps=DEFAULT_MAX_STEPS) -> ErmakovTrajectory:
    """Adaptive Dormand-Prince 5(4) solution of the Ermakov system.

    Protocol breakpoints (quench instants, ramp critical points) split the
    span so that the integrator restarts exactly there.
    """
    s0, sd0 = float(ics[0]), float(ics[1])
    if not s0 > 0:
        raise ValueError(f"sigma0 must be positive, got {s0}")
    rtol, atol = tol
    cpar = np.array([params.c, math.sqrt(params.c)])
    t, y, rc, stats = _run(K.MODE_ERMAKOV, p, cpar, [s0, sd0, 0.0], t_span, rtol, atol, max_steps)
    return ErmakovTrajectory(params, p, t, y, rc, stats)


def alpha_phase(traj: ErmakovTrajectory, n: int, t):
    """Dynamical phase alpha_n(t) = -(n + 1/2) Lambda(t)."""
    if n < 0:
        raise ValueError("level index must be >= 0")
    _, _, lam = traj.at(t)
    return -(n + 0.5) * lam


# --------------------------------------------------------------------------
# homogeneous solutions
# --------------------------------------------------------------------------

class HomogeneousPair:
    """Two real solutions x1, x2 of x'' + omega(t)^2 x = 0.

    Subclasses implement :meth:`states`, returning (x1, x1', x2, x2') at t.
    ``t0`` is the reference time used for Wronskian and initial-data checks.
    """

    t0: float = 0.0

    def states(self, t):  # pragma: no cover - abstract
        raise NotImplementedError

    def omega(self, t):  # pragma: no cover - abstract
        raise NotImplementedError

    def wronskian(self, t=None):
        x1, d1, x2, d2 = self.states(self.t0 if t is None else t)
        return x1 * d2 - d1 * x2


class NumericPair(HomogeneousPair, _Dense):
    def __init__(self, protocol, t, y, rcont, stats):
        self.protocol = protocol
        self.t = t
        self.y = y
        self.rcont = rcont
        self.stats = stats
        self.t0 = float(t[0])

    def states(self, t):
        shape, vals, _ = self._dense(t)
        return tuple(_shape(vals[:, j], shape) for j in range(4))

    def omega(self, t):
        return self.protocol.omega(t)


class FunctionPair(HomogeneousPair):
    """Pair given by closed-form callables."""

    def __init__(self, states_fn, omega_fn, t0=0.0):
        self._states = states_fn
        self._omega = omega_fn
        self.t0 = t0

    def states(self, t):
        return self._states(t)

    def omega(self, t):
        return self._omega(t)


def homogeneous_pair(p: FrequencyProtocol, x0, t_span, tol=(1e-11, 1e-13),
                     max_steps=DEFAULT_MAX_STEPS) -> NumericPair:
    """Integrate two solutions from initial data x0 = (x1, x1', x2, x2') at t_span[0]."""
    rtol, atol = tol
    t, y, rc, stats = _run(K.MODE_LINEAR, p, np.zeros(2), x0, t_span, rtol, atol, max_steps)
    return NumericPair(p, t, y, rc, stats)


def cauchy_pair(p, sigma0, sigma_dot0, t_span, tol=(1e-11, 1e-13)) -> NumericPair:
    """Pair with x1 = (sigma0, sigma_dot0), x2 = (0, 1/sigma0) at t_span[0]; Wr = 1."""
    return homogeneous_pair(p, [sigma0, sigma_dot0, 0.0, 1.0 / sigma0], t_span, tol)


def quench_pair(omega_i, omega_f, mass=1.0) -> FunctionPair:
    """Closed-form post-quench pair started from equilibrium at omega_i (t >= 0)."""
    a = 1.0 / math.sqrt(mass * omega_i)
    b = math.sqrt(mass * omega_i) / omega_f

    def states(t):
        t = np.asarray(t, dtype=float)
        c, s = np.cos(omega_f * t), np.sin(omega_f * t)
        return (a * c, -a * omega_f * s, b * s, b * omega_f * c)

    return FunctionPair(states, lambda t: np.full_like(np.asarray(t, dtype=float), omega_f))


def airy_pair(delta=1.0, positive=False) -> FunctionPair:
    """Airy solutions for omega^2 = delta |t|.

    For t <= 0 the pair is (Ai(s), Bi(s)), for t >= 0 it is (Ai(-s), Bi(-s)),
    with s = delta^(1/3) t.  Wronskians: delta^(1/3)/pi and -delta^(1/3)/pi.
    """
    k = delta ** (1.0 / 3.0)
    sgn = -1.0 if positive else 1.0

    def states(t):
        t = np.asarray(t, dtype=float)
        if np.any(sgn * t > 0):
            raise ValueError("time on the wrong side of the critical point for this Airy pair")
        ai, bi, aip, bip = airy(sgn * k * t)
        return (ai, sgn * k * aip, bi, sgn * k * bip)

    return FunctionPair(states, lambda t: np.sqrt(delta * np.abs(np.asarray(t, dtype=float))))


# --------------------------------------------------------------------------
# closed-form Ermakov solutions
# --------------------------------------------------------------------------

class PinneySolution:
    """sigma(t) = sqrt(A x1^2 + 2B x1 x2 + C x2^2) over a homogeneous pair."""

    def __init__(self, pair, A, B, C, c):
        self.pair = pair
        self.A, self.B, self.C, self.c = float(A), float(B), float(C), float(c)

    def _f(self, t):
        x1, d1, x2, d2 = self.pair.states(t)
        A, B, C = self.A, self.B, self.C
        f = A * x1 * x1 + 2 * B * x1 * x2 + C * x2 * x2
        if np.any(np.asarray(f) <= 0):
            raise ErmakovConstraintError("A x1^2 + 2B x1 x2 + C x2^2 is not positive")
        half_fd = A * x1 * d1 + B * (x1 * d2 + d1 * x2) + C * x2 * d2
        return x1, d1, x2, d2, f, half_fd

    def __call__(self, t):
        return np.sqrt(self._f(t)[4])

    def sigma_dot(self, t):
        *_, f, hfd = self._f(t)
        return hfd / np.sqrt(f)

    def sigma_ddot(self, t):
        x1, d1, x2, d2, f, hfd = self._f(t)
        w2 = np.asarray(self.pair.omega(t)) ** 2
        A, B, C = self.A, self.B, self.C
        half_fdd = (A * (d1 * d1 - w2 * x1 * x1) + B * (2 * d1 * d2 - 2 * w2 * x1 * x2)
                    + C * (d2 * d2 - w2 * x2 * x2))
        s = np.sqrt(f)
        sd = hfd / s
        return (half_fdd - sd * sd) / s

    def evaluate(self, t):
        """(sigma, sigma_dot) at t."""
        *_, f, hfd = self._f(t)
        s = np.sqrt(f)
        return s, hfd / s


def pinney_solution(pair: HomogeneousPair, A, B, C, c) -> PinneySolution:
    """General Ermakov solution; requires AC - B^2 = c / Wr^2."""
    wr = float(pair.wronskian())
    target = c / wr ** 2
    if abs(A * C - B * B - target) > 1e-10 * max(1.0, abs(target)):
        raise ErmakovConstraintError(
            f"AC - B^2 = {A * C - B * B:.17g} but c/Wr^2 = {target:.17g}")
    return PinneySolution(pair, A, B, C, c)


def cauchy_solution(pair: HomogeneousPair, c) -> PinneySolution:
    """sigma = sqrt(x1^2 + c x2^2) for a pair with x2(t0) = 0 and Wr = 1."""
    x1, d1, x2, d2 = (float(v) for v in pair.states(pair.t0))
    if abs(x2) > 1e-12 * max(1.0, abs(x1)) or abs(x1 * d2 - d1 * x2 - 1.0) > 1e-10:
        raise ErmakovConstraintError("Cauchy construction needs x2(t0) = 0 and Wr[x1, x2] = 1")
    return PinneySolution(pair, 1.0, 0.0, c, c)


def complex_solution(pair: HomogeneousPair, a, b) -> PinneySolution:
    """sigma = |a x1 + b x2| with a real, b complex, normalised to Wr[w, w*] = -i.

    The normalisation means a Im(b) Wr[x1, x2] = 1/2, and the result solves the
    Ermakov equation with c = 1/4.
    """
    a = float(a)
    b = complex(b)
    wr = float(pair.wronskian())
    if abs(a * b.imag * wr - 0.5) > 1e-10:
        raise ErmakovConstraintError(
            f"Wr[w, w*] = {-2j * a * b.imag * wr} but must equal -i")
    return PinneySolution(pair, a * a, a * b.real, abs(b) ** 2, 0.25)


# --------------------------------------------------------------------------
# time-dependent mass
# --------------------------------------------------------------------------

class MassRescaling:
    """Maps a variable-mass problem onto a unit-mass one in rescaled time T.

    With T(t) = int_{t0}^t dt'/M(t') and omega_bar(T) = M(t) omega(t), a
    solution of sigma'' + omega_bar^2 sigma = 1/sigma^3 in T, pulled back to
    t, solves the damped equation

        sigma_tt + (M_t/M) sigma_t + omega^2 sigma = 1/(M^2 sigma^3).
    """

    def __init__(self, m_of_t, protocol, t_span, n_grid=4001):
        self.m = m_of_t
        self.protocol = protocol
        t0, t1 = float(t_span[0]), float(t_span[1])
        tg = np.linspace(t0, t1, n_grid)
        mg = np.array([float(m_of_t(x)) for x in tg])
        if not np.all(np.isfinite(mg)) or np.any(mg <= 0):
            raise ValueError("mass protocol must be positive and finite on the span")
        inv = lambda x: 1.0 / float(m_of_t(x))  # noqa: E731
        steps = [_spi.quad(inv, a, b, epsabs=0.0, epsrel=1e-13)[0] for a, b in zip(tg[:-1], tg[1:])]
        Tg = np.concatenate([[0.0], np.cumsum(steps)])
        self.t_grid = tg
        self.T_grid = Tg
        self._inv_guess = PchipInterpolator(Tg, tg)
        self._inv = inv
        # omega_bar on a uniform T grid
        Tu = np.linspace(0.0, Tg[-1], n_grid)
        tu = self.t_of_T(Tu)
        wbar = np.array([float(m_of_t(x)) for x in tu]) * np.asarray(protocol.omega(tu))
        self.omega_bar = Sampled(tuple(Tu.tolist()), tuple(wbar.tolist()))

    def T(self, t):
        """Rescaled time; exact quadrature from the nearest grid node."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        i = np.clip(np.searchsorted(self.t_grid, t) - 1, 0, self.t_grid.size - 2)
        out = np.array([self.T_grid[j] + _spi.quad(self._inv, self.t_grid[j], x,
                                                   epsabs=0.0, epsrel=1e-13)[0]
                        for j, x in zip(i, t)])
        return out

    def t_of_T(self, T):
        """Inverse map by monotone interpolation refined with Newton steps."""
        T = np.atleast_1d(np.asarray(T, dtype=float))
        t = self._inv_guess(T)
        for _ in range(4):
            t = t - (self.T(t) - T) * np.array([float(self.m(x)) for x in t])
            t = np.clip(t, self.t_grid[0], self.t_grid[-1])
        return t

    def damping(self, t, h=1e-5):
        """d/dt log M by central differences."""
        t = np.asarray(t, dtype=float)
        lm = lambda x: np.log([float(self.m(v)) for v in np.atleast_1d(x)])  # noqa: E731
        return (lm(t + h) - lm(t - h)) / (2 * h)

    def pull_back(self, traj: ErmakovTrajectory, t):
        """(sigma, dsigma/dt, d2sigma/dt2) at physical times t from a trajectory in T."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        T = self.T(t)
        s, sT, _ = traj.at(T)
        sTT = traj.sigma_ddot(T)
        m = np.array([float(self.m(x)) for x in t])
        mdot = self.damping(t) * m
        return s, sT / m, (sTT - mdot * sT) / m ** 2


def mass_rescale(m_of_t, p: FrequencyProtocol, t_span, n_grid=4001) -> MassRescaling:
    """Build the rescaled-time problem for a time-dependent mass."""
    return MassRescaling(m_of_t, p, t_span, n_grid)
