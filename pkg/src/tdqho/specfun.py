"""Special-function kernel.

Hermite polynomials, Airy functions, log-gamma, terminating Gauss
hypergeometric sums, integer-order associated Legendre functions on (0, 1]
and Gauss-Hermite rules.  Everything here is real-valued and double
precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import njit

SQRT_PI = math.sqrt(math.pi)

# Ai(0), -Ai'(0); Bi(0) = sqrt(3) Ai(0), Bi'(0) = -sqrt(3) Ai'(0)
_AI0 = 0.355028053887817239260063186004183176
_AIP0 = 0.258819403792806798405183560189203963

# |x| beyond which the asymptotic expansions replace the Maclaurin series.
AIRY_SWITCH_NEG = 8.0
AIRY_SWITCH_POS = 6.0
# Bi(x) ~ exp(2/3 x^1.5) overflows a double past this point.
AIRY_BI_MAX = 104.0


class SpecialFunctionDomainError(ValueError):
    """Argument outside the domain of a special function."""


# --------------------------------------------------------------------------
# Hermite
# --------------------------------------------------------------------------

def hermite_h(n, x):
    """Physicists' Hermite polynomial H_n(x) by three-term recurrence.

    ``x`` may be a scalar or an array; the result has the same shape.
    """
    n = int(n)
    if n < 0:
        raise SpecialFunctionDomainError(f"Hermite degree must be >= 0, got {n}")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * x
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def hermite_normalized(nmax, x):
    """Rows k = 0..nmax of H_k(x) / sqrt(2^k k! sqrt(pi)), without the Gaussian.

    Multiplying row k by exp(-x^2/2) gives the orthonormal Hermite function.
    The scaled recurrence stays finite where H_k itself would overflow.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0 / math.sqrt(SQRT_PI)
    if nmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, nmax):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


# --------------------------------------------------------------------------
# Gamma
# --------------------------------------------------------------------------

def ln_gamma(x):
    """log Gamma(x) for x > 0."""
    if not x > 0.0:
        raise SpecialFunctionDomainError(f"ln_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def ln_factorial(n):
    if n < 0:
        raise SpecialFunctionDomainError(f"factorial of negative integer {n}")
    return math.lgamma(n + 1.0)


# --------------------------------------------------------------------------
# Airy
# --------------------------------------------------------------------------

@njit
def _airy_series(x):
    # Ai = c1 f - c2 g, Bi = sqrt(3) (c1 f + c2 g)
    x3 = x * x * x
    f = 1.0
    g = x
    fp = 0.0
    gp = 1.0
    tf = 1.0
    tg = x
    # derivative terms carried separately so x = 0 needs no special case
    tfp = 0.0
    tgp = 1.0
    k = 0
    while k < 200:
        k += 1
        tf = tf * x3 / ((3 * k - 1) * (3 * k))
        tg = tg * x3 / ((3 * k) * (3 * k + 1))
        if k == 1:
            tfp = 0.5 * x * x
            tgp = x3 / 3.0
        else:
            tfp = tfp * x3 / ((3 * k - 3) * (3 * k - 1))
            tgp = tgp * x3 / ((3 * k - 2) * (3 * k))
        f += tf
        g += tg
        fp += tfp
        gp += tgp
        if (abs(tf) <= 1e-18 * abs(f) and abs(tg) <= 1e-18 * abs(g)
                and abs(tfp) <= 1e-18 * abs(fp) and abs(tgp) <= 1e-18 * abs(gp)):
            break
    sq3 = math.sqrt(3.0)
    c1 = _AI0
    c2 = _AIP0
    return (c1 * f - c2 * g, sq3 * (c1 * f + c2 * g),
            c1 * fp - c2 * gp, sq3 * (c1 * fp + c2 * gp))


@njit
def _airy_asymptotic_sums(zeta, alternate):
    # returns (sum u_k t^k, sum v_k t^k) with t = +-1/zeta, split by parity
    # of k when alternate is False: (Ueven, Uodd, Veven, Vodd) with the
    # (-1)^k sign inside each parity class.
    u = 1.0
    s_ue = 1.0
    s_uo = 0.0
    s_ve = 1.0
    s_vo = 0.0
    s_u = 1.0
    s_v = 1.0
    inv = 1.0 / zeta
    pw = 1.0
    last = 1.0
    for k in range(1, 80):
        u = u * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
        v = -u * (6 * k + 1) / (6 * k - 1)
        pw = pw * inv
        tu = u * pw
        tv = v * pw
        mag = max(abs(tu), abs(tv))
        if mag > last:
            break
        last = mag
        if alternate:
            sign = -1.0 if k % 2 == 1 else 1.0
            s_u += sign * tu
            s_v += sign * tv
        else:
            j = k // 2
            sign = -1.0 if j % 2 == 1 else 1.0
            if k % 2 == 0:
                s_ue += sign * tu
                s_ve += sign * tv
            else:
                s_uo += sign * tu
                s_vo += sign * tv
        if mag < 1e-17:
            break
    if alternate:
        return s_u, s_v, 0.0, 0.0
    return s_ue, s_uo, s_ve, s_vo


@njit
def _airy_positive_asymptotic(x):
    zeta = 2.0 / 3.0 * x * math.sqrt(x)
    q = x ** 0.25
    su_alt, sv_alt, _, _ = _airy_asymptotic_sums(zeta, True)
    # non-alternating sums for the dominant solution
    u = 1.0
    s_u = 1.0
    s_v = 1.0
    pw = 1.0
    last = 1.0
    for k in range(1, 80):
        u = u * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
        v = -u * (6 * k + 1) / (6 * k - 1)
        pw = pw / zeta
        mag = max(abs(u * pw), abs(v * pw))
        if mag > last:
            break
        last = mag
        s_u += u * pw
        s_v += v * pw
        if mag < 1e-17:
            break
    em = math.exp(-zeta)
    ep = math.exp(zeta)
    ai = em / (2.0 * SQRT_PI * q) * su_alt
    aip = -q * em / (2.0 * SQRT_PI) * sv_alt
    bi = ep / (SQRT_PI * q) * s_u
    bip = q * ep / SQRT_PI * s_v
    return ai, bi, aip, bip


@njit
def _airy_negative_asymptotic(x):
    z = -x
    zeta = 2.0 / 3.0 * z * math.sqrt(z)
    q = z ** 0.25
    ue, uo, ve, vo = _airy_asymptotic_sums(zeta, False)
    arg = zeta - 0.25 * math.pi
    c = math.cos(arg)
    s = math.sin(arg)
    ai = (c * ue + s * uo) / (SQRT_PI * q)
    bi = (-s * ue + c * uo) / (SQRT_PI * q)
    aip = q * (s * ve - c * vo) / SQRT_PI
    bip = q * (c * ve + s * vo) / SQRT_PI
    return ai, bi, aip, bip


@njit
def airy_kernel(x):
    """(Ai, Bi, Ai', Bi') at a finite real x; no overflow check."""
    if x <= -AIRY_SWITCH_NEG:
        return _airy_negative_asymptotic(x)
    if x >= AIRY_SWITCH_POS:
        return _airy_positive_asymptotic(x)
    return _airy_series(x)


@njit
def airy_array(x):
    n = x.shape[0]
    out = np.empty((4, n))
    for i in range(n):
        a, b, ap, bp = airy_kernel(x[i])
        out[0, i] = a
        out[1, i] = b
        out[2, i] = ap
        out[3, i] = bp
    return out


def airy(x):
    """Airy functions and derivatives ``(Ai, Bi, Ai', Bi')``.

    Scalars give a tuple of floats, arrays a tuple of arrays.  Raises
    ``OverflowError`` where Bi no longer fits in a double.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise SpecialFunctionDomainError("Airy argument must be finite")
    if np.any(arr > AIRY_BI_MAX):
        raise OverflowError(f"Bi(x) overflows for x > {AIRY_BI_MAX}")
    if arr.ndim == 0:
        return tuple(float(v) for v in airy_kernel(float(arr)))
    flat = airy_array(np.ascontiguousarray(arr.ravel()))
    return tuple(flat[i].reshape(arr.shape) for i in range(4))


# --------------------------------------------------------------------------
# Hypergeometric and Legendre
# --------------------------------------------------------------------------

def _nonpositive_int(v):
    return v <= 0 and float(v).is_integer()


def hypergeom_terminating(a, b, c, z):
    """Gauss 2F1(a, b; c; z) when a or b is a non-positive integer."""
    lengths = [int(-v) for v in (a, b) if _nonpositive_int(v)]
    if not lengths:
        raise SpecialFunctionDomainError(
            f"2F1({a}, {b}; {c}; z) does not terminate: neither a nor b is a non-positive integer")
    n_terms = min(lengths)
    total = 1.0
    term = 1.0
    for j in range(n_terms):
        if c + j == 0.0:
            raise SpecialFunctionDomainError(f"2F1 denominator (c)_{j + 1} vanishes for c = {c}")
        term *= (a + j) * (b + j) / ((c + j) * (j + 1)) * z
        total += term
    return total


def assoc_legendre(l, k, x):
    """Associated Legendre function P^k_l(x) on 0 < x <= 1.

    Built from the terminating hypergeometric sum that also underlies the
    squeezing-operator matrix elements; for k >= 0 it coincides with the
    Ferrers function including the Condon-Shortley phase.  Negative orders
    use P^-k_l = (-1)^k (l-k)!/(l+k)! P^k_l.
    """
    l = int(l)
    k = int(k)
    if l < 0 or abs(k) > l:
        raise SpecialFunctionDomainError(f"need 0 <= |k| <= l, got l={l}, k={k}")
    if not 0.0 < x <= 1.0:
        raise SpecialFunctionDomainError(f"assoc_legendre defined on (0, 1], got x={x}")
    if k < 0:
        kk = -k
        sign = -1.0 if kk % 2 else 1.0
        ratio = math.exp(ln_factorial(l - kk) - ln_factorial(l + kk))
        return sign * ratio * assoc_legendre(l, kk, x)
    n = l - k
    if k > 0 and x == 1.0:
        return 0.0
    one_minus = (1.0 - x) * (1.0 + x)
    f = hypergeom_terminating(-n / 2.0, (1.0 - n) / 2.0, k + 1.0, -one_minus / (x * x))
    log_pref = (ln_factorial(l + k) - ln_factorial(n) - ln_factorial(k)
                - k * math.log(2.0) + n * math.log(x))
    if k > 0:
        log_pref += 0.5 * k * math.log(one_minus)
    sign = -1.0 if k % 2 else 1.0
    return sign * math.exp(log_pref) * f


# --------------------------------------------------------------------------
# Gauss-Hermite
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for the weight exp(-x^2)."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape:
            raise ValueError("nodes and weights differ in length")

    @property
    def order(self):
        return int(self.nodes.shape[0])

    def integrate(self, values):
        """Sum of weights * values (values sampled at the nodes)."""
        return np.dot(self.weights, values)


def gauss_hermite(n):
    """n-point Gauss-Hermite rule, exact to degree 2n - 1."""
    n = int(n)
    if not 1 <= n <= 200:
        raise SpecialFunctionDomainError(f"Gauss-Hermite order must lie in [1, 200], got {n}")
    nodes, weights = np.polynomial.hermite.hermgauss(n)
    nodes = np.ascontiguousarray(nodes)
    weights = np.ascontiguousarray(weights)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(nodes, weights)
