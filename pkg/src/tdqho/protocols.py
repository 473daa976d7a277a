"""Frequency protocols omega(t) and oscillator parameters.

Each protocol is an immutable dataclass.  Besides pointwise evaluation it
can export a flat ``(kind, params, knots)`` encoding that the compiled
integrator kernels understand, so the hot loop never calls back into
Python.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.interpolate import PchipInterpolator

from ._kernels import (KIND_CONSTANT, KIND_QUENCH, KIND_RAMP, KIND_SAMPLED,
                       KIND_TANH, omega_array)

#: Tanh protocols idealised as starting at -infinity begin this many widths
#: before their centre.
TANH_START_WIDTHS = 20.0


class ProtocolError(ValueError):
    """Invalid protocol parameters or evaluation outside the domain."""


@dataclass(frozen=True)
class OscillatorParams:
    """Mass, Planck constant and Ermakov constant.

    ``c`` defaults to ``1/M**2``, the convention in which the invariant's
    eigenstates coincide with the Hamiltonian's at equilibrium.
    """

    mass: float = 1.0
    hbar: float = 1.0
    c: float | None = None

    def __post_init__(self):
        if not self.mass > 0:
            raise ProtocolError(f"mass must be positive, got {self.mass}")
        if not self.hbar > 0:
            raise ProtocolError(f"hbar must be positive, got {self.hbar}")
        if self.c is None:
            object.__setattr__(self, "c", 1.0 / self.mass ** 2)
        if not self.c > 0:
            raise ProtocolError(f"Ermakov constant must be positive, got {self.c}")

    @property
    def scale(self):
        """Factor s with sigma_std = s * sigma mapping to the c = 1/M^2 convention."""
        return (1.0 / (self.mass ** 2 * self.c)) ** 0.25


@dataclass(frozen=True)
class KernelSpec:
    """Flat encoding of a protocol for the compiled kernels."""

    kind: int
    params: np.ndarray
    knots_t: np.ndarray
    knots_w: np.ndarray
    knots_d: np.ndarray


_EMPTY = np.zeros(1)


class FrequencyProtocol:
    """Base class; subclasses are frozen dataclasses."""

    #: instants where omega or its derivative jumps
    def breakpoints(self):
        return ()

    def kernel_spec(self) -> KernelSpec:  # pragma: no cover - abstract
        raise NotImplementedError

    def domain(self):
        return (-math.inf, math.inf)

    def _check_domain(self, t):
        lo, hi = self.domain()
        t = np.asarray(t, dtype=float)
        if np.any(t < lo) or np.any(t > hi):
            raise ProtocolError(f"t outside protocol domain [{lo}, {hi}]")
        return t

    def omega(self, t):
        """Frequency at time(s) t."""
        t = self._check_domain(t)
        ks = self.kernel_spec()
        flat = np.ascontiguousarray(np.atleast_1d(t).ravel())
        out = omega_array(ks.kind, ks.params, ks.knots_t, ks.knots_w, ks.knots_d, flat)
        out = out.reshape(t.shape)
        return float(out) if out.ndim == 0 else out

    def omega_before(self, t):
        """Left limit omega(t-); differs from omega(t) only at a jump."""
        return self.omega(t)

    def omega_dot(self, t):  # pragma: no cover - abstract
        raise NotImplementedError

    def reverse(self, tau_total):  # pragma: no cover - abstract
        """Protocol p~ with p~(t) = p(tau_total - t)."""
        raise NotImplementedError

    def sample(self, t):
        """Sampled protocol built from this one on the grid t."""
        t = np.asarray(t, dtype=float)
        return Sampled(tuple(t.tolist()), tuple(np.asarray(self.omega(t)).tolist()))

    def to_dict(self):
        d = {"kind": type(self).__name__}
        for f in fields(self):
            if f.init:
                v = getattr(self, f.name)
                d[f.name] = list(v) if isinstance(v, tuple) else v
        return d


def _spec(kind, params):
    return KernelSpec(kind, np.asarray(params, dtype=float), _EMPTY, _EMPTY, _EMPTY)


def _nonneg(name, v):
    if not (v >= 0 and math.isfinite(v)):
        raise ProtocolError(f"{name} must be a finite non-negative number, got {v}")


@dataclass(frozen=True)
class Constant(FrequencyProtocol):
    omega0: float

    def __post_init__(self):
        _nonneg("omega0", self.omega0)

    def kernel_spec(self):
        return _spec(KIND_CONSTANT, [self.omega0])

    def omega_dot(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        return float(out) if out.ndim == 0 else out

    def reverse(self, tau_total):
        return self


@dataclass(frozen=True)
class SuddenQuench(FrequencyProtocol):
    """omega_i for t < t_q, omega_f for t >= t_q."""

    omega_i: float
    omega_f: float
    t_q: float = 0.0

    def __post_init__(self):
        _nonneg("omega_i", self.omega_i)
        _nonneg("omega_f", self.omega_f)

    def kernel_spec(self):
        return _spec(KIND_QUENCH, [self.omega_i, self.omega_f, self.t_q])

    def breakpoints(self):
        return (self.t_q,)

    def omega_before(self, t):
        t = self._check_domain(t)
        out = np.where(t <= self.t_q, self.omega_i, self.omega_f).astype(float)
        return float(out) if out.ndim == 0 else out

    def omega_dot(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t == self.t_q):
            raise ProtocolError(f"sudden quench is not differentiable at t_q={self.t_q}")
        out = np.zeros_like(t)
        return float(out) if out.ndim == 0 else out

    def reverse(self, tau_total):
        return SuddenQuench(self.omega_f, self.omega_i, tau_total - self.t_q)


@dataclass(frozen=True)
class Tanh(FrequencyProtocol):
    """Smooth step from omega_i (remote past) to omega_f (distant future).

    omega(t) = (omega_i + omega_f)/2 + (omega_f - omega_i)/2 * tanh((t - tau)/eps),
    centred at tau with width eps.
    """

    omega_i: float
    omega_f: float
    tau: float = 0.0
    eps: float = 1.0

    def __post_init__(self):
        _nonneg("omega_i", self.omega_i)
        _nonneg("omega_f", self.omega_f)
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ProtocolError(f"eps must be positive, got {self.eps}")

    def kernel_spec(self):
        return _spec(KIND_TANH, [self.omega_i, self.omega_f, self.tau, self.eps])

    @property
    def start_time(self):
        """Finite stand-in for t = -inf."""
        return self.tau - TANH_START_WIDTHS * self.eps

    def omega_dot(self, t):
        t = np.asarray(t, dtype=float)
        sech2 = 1.0 / np.cosh((t - self.tau) / self.eps) ** 2
        out = 0.5 * (self.omega_f - self.omega_i) * sech2 / self.eps
        return float(out) if out.ndim == 0 else out

    def reverse(self, tau_total):
        return Tanh(self.omega_f, self.omega_i, tau_total - self.tau, self.eps)


@dataclass(frozen=True)
class NonlinearSymmetric(FrequencyProtocol):
    """omega(t) = (delta |t - t_c|)^(eta/2): vanishes at the critical time t_c."""

    delta: float
    eta: float = 1.0
    t_c: float = 0.0

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ProtocolError(f"delta must be positive, got {self.delta}")
        if not (self.eta >= 1 and math.isfinite(self.eta)):
            raise ProtocolError(f"eta must be >= 1, got {self.eta}")

    def kernel_spec(self):
        return _spec(KIND_RAMP, [self.delta, self.eta, self.t_c])

    def breakpoints(self):
        return (self.t_c,)

    def omega_dot(self, t):
        t = np.asarray(t, dtype=float)
        x = t - self.t_c
        if np.any(x == 0.0):
            if self.eta <= 2.0:
                raise ProtocolError("ramp is not differentiable at the critical point for eta <= 2")
        ax = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.sign(x) * 0.5 * self.eta * self.delta * (self.delta * ax) ** (0.5 * self.eta - 1.0)
        out = np.where(x == 0.0, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def reverse(self, tau_total):
        return NonlinearSymmetric(self.delta, self.eta, tau_total - self.t_c)


@dataclass(frozen=True)
class LinearSymmetric(NonlinearSymmetric):
    """omega(t) = sqrt(delta |t - t_c|), the eta = 1 ramp."""

    delta: float
    eta: float = field(default=1.0, init=False)
    t_c: float = 0.0

    def reverse(self, tau_total):
        return LinearSymmetric(self.delta, tau_total - self.t_c)


@dataclass(frozen=True)
class Sampled(FrequencyProtocol):
    """Monotone cubic (PCHIP) interpolant through (t, omega) samples."""

    t: tuple
    w: tuple

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if t.ndim != 1 or t.shape != w.shape or t.size < 2:
            raise ProtocolError("sampled protocol needs two equal-length 1-d grids of size >= 2")
        if not np.all(np.diff(t) > 0):
            raise ProtocolError("sample times must be strictly increasing")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ProtocolError("sampled frequencies must be finite and non-negative")
        object.__setattr__(self, "t", tuple(t.tolist()))
        object.__setattr__(self, "w", tuple(w.tolist()))
        d = PchipInterpolator(t, w).derivative()(t)
        object.__setattr__(self, "_spec", KernelSpec(KIND_SAMPLED, np.zeros(1), t, w, np.ascontiguousarray(d)))

    def kernel_spec(self):
        return self._spec

    def domain(self):
        return (self.t[0], self.t[-1])

    def omega_dot(self, t):
        t = self._check_domain(t)
        ks = self._spec
        tt, ww, dd = ks.knots_t, ks.knots_w, ks.knots_d
        i = np.clip(np.searchsorted(tt, t, side="right") - 1, 0, tt.size - 2)
        h = tt[i + 1] - tt[i]
        s = (t - tt[i]) / h
        out = (ww[i] * (6 * s * s - 6 * s) + ww[i + 1] * (6 * s - 6 * s * s)) / h \
            + dd[i] * (3 * s * s - 4 * s + 1) + dd[i + 1] * (3 * s * s - 2 * s)
        return float(out) if np.ndim(out) == 0 else out

    def reverse(self, tau_total):
        t = tau_total - np.asarray(self.t)[::-1]
        return Sampled(tuple(t.tolist()), tuple(reversed(self.w)))


PROTOCOL_KINDS = {cls.__name__: cls for cls in
                  (Constant, SuddenQuench, Tanh, LinearSymmetric, NonlinearSymmetric, Sampled)}


def protocol_from_dict(d):
    """Build a protocol from ``{"kind": name, **params}``."""
    d = dict(d)
    try:
        cls = PROTOCOL_KINDS[d.pop("kind")]
    except KeyError as exc:
        raise ProtocolError(f"unknown protocol kind {exc.args[0]!r}; expected one of {sorted(PROTOCOL_KINDS)}") from None
    if cls is Sampled:
        return Sampled(tuple(d.pop("t")), tuple(d.pop("w")))
    try:
        return cls(**d)
    except TypeError as exc:
        raise ProtocolError(f"{cls.__name__}: {exc}") from None
