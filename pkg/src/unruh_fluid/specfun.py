"""Special functions used by the rate formulas.

``scaled_erfc`` is w(x) = exp(x^2) erfc(x) for x >= 0.  Below x = 1.5 it is
evaluated as exp(x^2) minus a positive-term series for exp(x^2) erf(x); above,
the Laplace continued fraction is evaluated bottom-up at a depth chosen per
band of x.  Neither branch forms erfc(x) itself, so nothing underflows.

``bessel_j`` is J_m(x) for integer m and real x >= 0.  Regions, after the
parity reduction J_{-m} = (-1)^m J_m:

* m > x and Kapteyn's bound J_m(x) <= [z e^sqrt(1-z^2) / (1 + sqrt(1-z^2))]^m
  (z = x/m) is below 1e-305: return 0.
* x^2 <= m + 1: ascending power series, leading factor in log form.
* max(m, x) <= 80: Miller backward recurrence normalised with
  J_0^2 + 2 sum J_k^2 = 1, rescaled on the fly.
* otherwise Debye expansions (DLMF 10.19.3 / 10.19.6) written in terms of
  q = sqrt(|m^2 - x^2|) so that m = 0 reduces to Hankel's expansion.  They
  are used when q^3 >= 100 m^2 and q >= 25.
* near the turning point m ~ x the evanescent Debye form is evaluated at the
  first order n1 > x where it is valid, and the three-term recurrence is run
  backward to m.  Backward recurrence is stable for J beyond the turning point
  and neutral below it; the distance covered is O(x^(1/3)).

Accuracy is about 1e-12 relative to the local envelope sqrt(J^2 + Y^2)
(|J| in the evanescent regime).  For x beyond ~1e5 the phase is limited by
the representation of x itself, to roughly x * 1e-16.
"""
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from . import _backend
from ._backend import njit
from .errors import DomainError

MAX_ORDER = 10**6
MAX_ARG = 1.0e6

_SQRT_PI = math.sqrt(math.pi)
_TWO_OVER_SQRT_PI = 2.0 / _SQRT_PI
_LN_1E100 = 100.0 * math.log(10.0)
_LN2 = math.log(2.0)
_LOG_UNDERFLOW = -745.0
_LOG_ZERO_CUT = math.log(1e-305)

_MILLER_MAX = 80.0
_DEBYE_X = 100.0
_DEBYE_QMIN = 25.0
_KMAX = 20
_SERIES_CUT = 0.1  # below this, tanh(a) - a and tan(b) - b use their Taylor series


@dataclass(frozen=True)
class Accuracy:
    rel_tol: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1e-6:
            raise DomainError(f"rel_tol must lie in (0, 1e-6), got {self.rel_tol}")


def _debye_table(kmax):
    """Coefficients c[k, j] of t^(k+2j) in the Debye polynomials u_k(t)."""
    polys = [{0: Fraction(1)}]
    for _ in range(kmax):
        u = polys[-1]
        nxt = {}
        for p, c in u.items():
            if p:
                d = c * p
                nxt[p + 1] = nxt.get(p + 1, 0) + d / 2
                nxt[p + 3] = nxt.get(p + 3, 0) - d / 2
            nxt[p + 1] = nxt.get(p + 1, 0) + c / (8 * (p + 1))
            nxt[p + 3] = nxt.get(p + 3, 0) - 5 * c / (8 * (p + 3))
        polys.append(nxt)
    table = np.zeros((kmax + 1, kmax + 1))
    for k, u in enumerate(polys):
        for p, c in u.items():
            table[k, (p - k) // 2] = float(c)
    return table


DEBYE = _debye_table(_KMAX)


# ---------------------------------------------------------------------------
# scaled complementary error function

@njit
def _cf_depth(x):
    if x < 2.0:
        return 160
    if x < 3.0:
        return 80
    if x < 4.0:
        return 40
    if x < 6.0:
        return 30
    if x < 10.0:
        return 20
    if x < 30.0:
        return 12
    return 8


@njit
def erfcx_scalar(x):
    if x < 1.5:
        s = 0.0
        term = x
        n = 0
        while True:
            s += term
            n += 1
            term *= 2.0 * x * x / (2 * n + 1)
            if term <= 1e-17 * s:
                break
        return math.exp(x * x) - _TWO_OVER_SQRT_PI * s
    t = 0.0
    for n in range(_cf_depth(x), 0, -1):
        t = 0.5 * n / (x + t)
    return 1.0 / (_SQRT_PI * (x + t))


def erfcx_np(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 1.5
    if small.any():
        xs = x[small]
        s = np.zeros_like(xs)
        term = xs.copy()
        n = 0
        while True:
            s += term
            n += 1
            term = term * (2.0 * xs * xs / (2 * n + 1))
            if np.all(term <= 1e-17 * s):
                break
        out[small] = np.exp(xs * xs) - _TWO_OVER_SQRT_PI * s
    big = ~small
    if big.any():
        xb = x[big]
        depth = _cf_depth(float(xb.min()))
        t = np.zeros_like(xb)
        for n in range(depth, 0, -1):
            t = 0.5 * n / (xb + t)
        out[big] = 1.0 / (_SQRT_PI * (xb + t))
    return out


# ---------------------------------------------------------------------------
# Bessel J_m(x): scalar kernels

@njit
def _log_kapteyn(m, x):
    z = x / m
    w = math.sqrt((1.0 - z) * (1.0 + z))
    return m * (math.log(z) + w - math.log1p(w))


@njit
def _jn_series(m, x):
    # log(x) - log 2 stays finite for denormal x, where 0.5 x would underflow
    lead = m * (math.log(x) - _LN2) - math.lgamma(m + 1.0)
    y = -0.25 * x * x
    s = 1.0
    t = 1.0
    k = 0
    while True:
        k += 1
        t *= y / (k * (m + k))
        s += t
        if abs(t) <= 1e-17 * abs(s):
            break
    if lead < _LOG_UNDERFLOW:
        return 0.0
    return math.exp(lead) * s


@njit
def _jn_miller(m, x):
    top = max(float(m), x)
    n = int(top + 30.0 + 15.0 * top ** (1.0 / 3.0))
    fp1 = 0.0
    f = 1e-30
    sq = 0.0
    lin = 0.0
    fm = 0.0
    nres = 0
    if m == n:
        fm = f
    k = n
    while k > 0:
        fnext = (2.0 * k / x) * f - fp1
        sq += 2.0 * f * f
        if k % 2 == 0:
            lin += 2.0 * f
        fp1 = f
        f = fnext
        k -= 1
        if k == m:
            fm = f
            nres = 0
        if abs(f) > 1e100:
            f *= 1e-100
            fp1 *= 1e-100
            sq *= 1e-200
            lin *= 1e-100
            if k <= m:
                nres += 1
    sq += f * f
    lin += f
    if fm == 0.0:
        return 0.0
    lg = math.log(abs(fm)) - _LN_1E100 * nres - 0.5 * math.log(sq)
    if lg < _LOG_UNDERFLOW:
        return 0.0
    val = math.exp(lg)
    if (fm < 0.0) != (lin < 0.0):
        val = -val
    return val


@njit
def _tanh_minus_id(a):
    # tanh(a) - a without cancellation
    if a < _SERIES_CUT:
        a2 = a * a
        return -a * a2 * (1.0 / 3.0 - a2 * (2.0 / 15.0 - a2 * (17.0 / 315.0
                          - a2 * (62.0 / 2835.0 - a2 * (1382.0 / 155925.0
                          - a2 * (21844.0 / 6081075.0 - a2 * 929569.0 / 638512875.0))))))
    return math.tanh(a) - a


@njit
def _debye_evanescent(nu, x):
    """J_nu(x) = exp(expo) * mant for nu > x."""
    q = math.sqrt((nu - x) * (nu + x))
    alpha = math.log1p((nu - x + q) / x)
    expo = nu * _tanh_minus_id(alpha)
    r = (nu / q) ** 2
    iq = 1.0 / q
    s = 0.0
    pw = 1.0
    quiet = 0
    for k in range(_KMAX + 1):
        poly = 0.0
        for j in range(k, -1, -1):
            poly = poly * r + DEBYE[k, j]
        t = pw * poly
        s += t
        # individual terms can be small by cancellation; wait for two in a row
        quiet = quiet + 1 if abs(t) <= 1e-17 * abs(s) else 0
        if quiet == 2:
            break
        pw *= iq
    return expo, s / math.sqrt(2.0 * math.pi * q)


@njit
def _debye_oscillatory(nu, x):
    s = math.sqrt((x - nu) * (x + nu))
    beta = math.atan2(s, nu)
    if beta < _SERIES_CUT:
        xi0 = nu * _tan_minus_id(beta)  # s - nu*beta without cancellation
    else:
        xi0 = s - nu * beta
    xi = xi0 - 0.25 * math.pi
    r = (nu / s) ** 2
    isg = 1.0 / s
    even = 0.0
    odd = 0.0
    pw = 1.0
    quiet = 0
    for k in range(_KMAX + 1):
        poly = 0.0
        for j in range(k, -1, -1):
            poly = poly * (-r) + DEBYE[k, j]
        t = pw * poly
        sgn = 1.0 if (k // 2) % 2 == 0 else -1.0
        if k % 2 == 0:
            even += sgn * t
        else:
            odd += sgn * t
        quiet = quiet + 1 if abs(t) <= 1e-17 * (abs(even) + abs(odd)) else 0
        if quiet == 2:
            break
        pw *= isg
    return math.sqrt(2.0 / (math.pi * s)) * (math.cos(xi) * even + math.sin(xi) * odd)


@njit
def _tan_minus_id(b):
    if b < _SERIES_CUT:
        b2 = b * b
        return b * b2 * (1.0 / 3.0 + b2 * (2.0 / 15.0 + b2 * (17.0 / 315.0
                         + b2 * (62.0 / 2835.0 + b2 * (1382.0 / 155925.0
                         + b2 * (21844.0 / 6081075.0 + b2 * 929569.0 / 638512875.0))))))
    return math.tan(b) - b


@njit
def _debye_ok(q, nu):
    return q >= _DEBYE_QMIN and q * q * q >= _DEBYE_X * nu * nu


@njit
def _transition_start(x):
    d = 0.5 * _DEBYE_X ** (2.0 / 3.0) * x ** (1.0 / 3.0)
    n1 = int(x + d) + 1
    step = 1 + int(0.05 * d)
    while True:
        fn = float(n1)
        q = math.sqrt((fn - x) * (fn + x))
        if _debye_ok(q, fn):
            return n1
        n1 += step


@njit
def _jn_transition(m, x):
    n1 = _transition_start(x)
    e1, a = _debye_evanescent(float(n1), x)
    e2, b = _debye_evanescent(float(n1 + 1), x)
    fp1 = b * math.exp(e2 - e1)
    f = a
    lsc = e1
    k = n1
    while k > m:
        fnext = (2.0 * k / x) * f - fp1
        fp1 = f
        f = fnext
        k -= 1
        if abs(f) > 1e100:
            f *= 1e-100
            fp1 *= 1e-100
            lsc += _LN_1E100
    if f == 0.0:
        return 0.0
    lg = math.log(abs(f)) + lsc
    if lg < _LOG_UNDERFLOW:
        return 0.0
    return math.copysign(math.exp(lg), f)


@njit
def jn_scalar(m, x):
    """J_m(x) for integer m and finite x >= 0 (no argument checking)."""
    sign = 1.0
    if m < 0:
        m = -m
        if m % 2 == 1:
            sign = -1.0
    if x == 0.0:
        return sign if m == 0 else 0.0
    fm = float(m)
    if fm > x and _log_kapteyn(fm, x) < _LOG_ZERO_CUT:
        return 0.0
    if x * x <= fm + 1.0:
        return sign * _jn_series(m, x)
    if fm <= _MILLER_MAX and x <= _MILLER_MAX:
        return sign * _jn_miller(m, x)
    if fm > x:
        q = math.sqrt((fm - x) * (fm + x))
        if _debye_ok(q, fm):
            expo, mant = _debye_evanescent(fm, x)
            if expo < _LOG_UNDERFLOW:
                return 0.0
            return sign * math.exp(expo) * mant
    else:
        s = math.sqrt((x - fm) * (x + fm))
        if _debye_ok(s, fm):
            return sign * _debye_oscillatory(fm, x)
    return sign * _jn_transition(m, x)


@njit
def jn_array_nb(m, x):
    out = np.empty(m.size)
    for i in range(m.size):
        out[i] = jn_scalar(m[i], x[i])
    return out


@njit
def erfcx_array_nb(x):
    out = np.empty(x.size)
    for i in range(x.size):
        out[i] = erfcx_scalar(x[i])
    return out


# ---------------------------------------------------------------------------
# Bessel J_m(x): vectorised numpy twin

def _np_tanh_minus_id(a):
    a2 = a * a
    ser = -a * a2 * (1.0 / 3.0 - a2 * (2.0 / 15.0 - a2 * (17.0 / 315.0
                     - a2 * (62.0 / 2835.0 - a2 * (1382.0 / 155925.0
                     - a2 * (21844.0 / 6081075.0 - a2 * 929569.0 / 638512875.0))))))
    return np.where(a < _SERIES_CUT, ser, np.tanh(a) - a)


def _np_tan_minus_id(b):
    b2 = b * b
    ser = b * b2 * (1.0 / 3.0 + b2 * (2.0 / 15.0 + b2 * (17.0 / 315.0
                    + b2 * (62.0 / 2835.0 + b2 * (1382.0 / 155925.0
                    + b2 * (21844.0 / 6081075.0 + b2 * 929569.0 / 638512875.0))))))
    with np.errstate(invalid="ignore", over="ignore"):
        return np.where(b < _SERIES_CUT, ser, np.tan(b) - b)


def _np_debye_series(inv, r, alternate):
    # sum_k inv^k sum_j c[k,j] (+-r)^j with the oscillatory sign pattern
    rr = -r if alternate else r
    even = np.zeros_like(inv)
    odd = np.zeros_like(inv)
    pw = np.ones_like(inv)
    for k in range(_KMAX + 1):
        poly = np.zeros_like(inv)
        for j in range(k, -1, -1):
            poly = poly * rr + DEBYE[k, j]
        t = pw * poly
        sgn = (1.0 if (k // 2) % 2 == 0 else -1.0) if alternate else 1.0
        if k % 2 == 0:
            even += sgn * t
        else:
            odd += sgn * t
        pw = pw * inv
    return even, odd


def _np_debye_evanescent(nu, x):
    q = np.sqrt((nu - x) * (nu + x))
    alpha = np.log1p((nu - x + q) / x)
    expo = nu * _np_tanh_minus_id(alpha)
    even, odd = _np_debye_series(1.0 / q, (nu / q) ** 2, False)
    return expo, (even + odd) / np.sqrt(2.0 * np.pi * q)


def _np_debye_oscillatory(nu, x):
    s = np.sqrt((x - nu) * (x + nu))
    beta = np.arctan2(s, nu)
    xi0 = np.where(beta < _SERIES_CUT, nu * _np_tan_minus_id(beta), s - nu * beta)
    xi = xi0 - 0.25 * np.pi
    even, odd = _np_debye_series(1.0 / s, (nu / s) ** 2, True)
    return np.sqrt(2.0 / (np.pi * s)) * (np.cos(xi) * even + np.sin(xi) * odd)


def _np_debye_ok(q, nu):
    return (q >= _DEBYE_QMIN) & (q * q * q >= _DEBYE_X * nu * nu)


def _np_series(m, x):
    fm = m.astype(float)
    with np.errstate(divide="ignore"):
        lead = fm * (np.log(x) - _LN2) - gammaln(fm + 1.0)
    y = -0.25 * x * x
    s = np.ones_like(x)
    t = np.ones_like(x)
    k = 0
    while True:
        k += 1
        t = t * (y / (k * (fm + k)))
        s = s + t
        if np.all(np.abs(t) <= 1e-17 * np.abs(s)):
            break
    with np.errstate(under="ignore"):
        return np.where(lead < _LOG_UNDERFLOW, 0.0, np.exp(np.maximum(lead, _LOG_UNDERFLOW)) * s)


def _np_miller(m, x):
    fm = m.astype(float)
    top = np.maximum(fm, x)
    n = int(np.max(top + 30.0 + 15.0 * top ** (1.0 / 3.0)))
    fp1 = np.zeros_like(x)
    f = np.full_like(x, 1e-30)
    sq = np.zeros_like(x)
    lin = np.zeros_like(x)
    fmv = np.where(m == n, f, 0.0)
    nres = np.zeros(x.shape, dtype=np.int64)
    for k in range(n, 0, -1):
        fnext = (2.0 * k / x) * f - fp1
        sq += 2.0 * f * f
        if k % 2 == 0:
            lin += 2.0 * f
        fp1 = f
        f = fnext
        hit = m == k - 1
        fmv = np.where(hit, f, fmv)
        nres = np.where(hit, 0, nres)
        big = np.abs(f) > 1e100
        if big.any():
            scale = np.where(big, 1e-100, 1.0)
            f = f * scale
            fp1 = fp1 * scale
            sq = sq * scale * scale
            lin = lin * scale
            fmv = fmv * np.where(hit, scale, 1.0)
            nres = nres + (big & (m >= k - 1) & ~hit)
    sq += f * f
    lin += f
    with np.errstate(divide="ignore", under="ignore"):
        lg = np.log(np.abs(fmv)) - _LN_1E100 * nres - 0.5 * np.log(sq)
        val = np.where(lg < _LOG_UNDERFLOW, 0.0, np.exp(np.maximum(lg, _LOG_UNDERFLOW)))
    return np.where((fmv < 0.0) != (lin < 0.0), -val, val)


def _np_transition(m, x):
    d = 0.5 * _DEBYE_X ** (2.0 / 3.0) * x ** (1.0 / 3.0)
    n1 = (x + d).astype(np.int64) + 1
    step = 1 + (0.05 * d).astype(np.int64)
    while True:
        fn = n1.astype(float)
        ok = _np_debye_ok(np.sqrt((fn - x) * (fn + x)), fn)
        if ok.all():
            break
        n1 = np.where(ok, n1, n1 + step)
    e1, a = _np_debye_evanescent(n1.astype(float), x)
    e2, b = _np_debye_evanescent(n1.astype(float) + 1.0, x)
    fp1 = b * np.exp(e2 - e1)
    f = a.copy()
    lsc = e1.copy()
    k = n1.copy()
    while True:
        act = k > m
        if not act.any():
            break
        fnext = (2.0 * k / x) * f - fp1
        fp1 = np.where(act, f, fp1)
        f = np.where(act, fnext, f)
        k = np.where(act, k - 1, k)
        big = np.abs(f) > 1e100
        if big.any():
            scale = np.where(big, 1e-100, 1.0)
            f = f * scale
            fp1 = fp1 * scale
            lsc = lsc + np.where(big, _LN_1E100, 0.0)
    with np.errstate(divide="ignore", under="ignore"):
        lg = np.log(np.abs(f)) + lsc
        val = np.where(lg < _LOG_UNDERFLOW, 0.0, np.exp(np.maximum(lg, _LOG_UNDERFLOW)))
    return np.copysign(val, f)


def jn_np(m, x):
    """Vectorised J_m(x); m integer array, x float array (broadcast)."""
    m, x = np.broadcast_arrays(np.asarray(m, dtype=np.int64), np.asarray(x, dtype=float))
    m = m.ravel()
    x = x.ravel()
    shape_out = m.shape
    sign = np.where((m < 0) & (np.abs(m) % 2 == 1), -1.0, 1.0)
    m = np.abs(m)
    fm = m.astype(float)
    out = np.zeros(shape_out)
    done = x == 0.0
    out[done & (m == 0)] = 1.0

    todo = ~done
    evan = todo & (fm > x)
    if evan.any():
        idx = np.flatnonzero(evan)
        z = x[idx] / fm[idx]
        w = np.sqrt((1.0 - z) * (1.0 + z))
        lk = fm[idx] * (np.log(z) + w - np.log1p(w))
        dead = idx[lk < _LOG_ZERO_CUT]
        todo[dead] = False

    ser = todo & (x * x <= fm + 1.0)
    if ser.any():
        out[ser] = _np_series(m[ser], x[ser])
        todo &= ~ser

    mil = todo & (fm <= _MILLER_MAX) & (x <= _MILLER_MAX)
    if mil.any():
        out[mil] = _np_miller(m[mil], x[mil])
        todo &= ~mil

    if todo.any():
        idx = np.flatnonzero(todo)
        nu = fm[idx]
        xx = x[idx]
        q = np.sqrt(np.abs((nu - xx) * (nu + xx)))
        ok = _np_debye_ok(q, nu)
        ev = ok & (nu > xx)
        osc = ok & (nu <= xx)
        if ev.any():
            expo, mant = _np_debye_evanescent(nu[ev], xx[ev])
            with np.errstate(under="ignore"):
                out[idx[ev]] = np.where(expo < _LOG_UNDERFLOW, 0.0,
                                        np.exp(np.maximum(expo, _LOG_UNDERFLOW)) * mant)
        if osc.any():
            out[idx[osc]] = _np_debye_oscillatory(nu[osc], xx[osc])
        tr = ~ok
        if tr.any():
            out[idx[tr]] = _np_transition(m[idx[tr]], xx[tr])
    return sign * out


# ---------------------------------------------------------------------------
# public API

def _check_x(x, upper=None):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise DomainError("argument must be finite and >= 0")
    if upper is not None and np.any(arr > upper):
        raise DomainError(f"argument must not exceed {upper:g}")
    return arr


def _check_m(m):
    arr = np.asarray(m)
    if arr.dtype.kind not in "iu":
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise DomainError("Bessel order must be an integer")
    arr = arr.astype(np.int64)
    if np.any(np.abs(arr) > MAX_ORDER):
        raise DomainError(f"|order| must not exceed {MAX_ORDER}")
    return arr


def _scalar_or_array(arr, like):
    return float(arr.reshape(-1)[0]) if np.ndim(like) == 0 else arr


def scaled_erfc(x):
    """w(x) = exp(x^2) * erfc(x) for x >= 0; scalar or array."""
    arr = _check_x(x)
    flat = np.ascontiguousarray(arr.ravel())
    vals = erfcx_array_nb(flat) if _backend.USE_NUMBA else erfcx_np(flat)
    return _scalar_or_array(vals.reshape(arr.shape), x)


def bessel_j(m, x):
    """Integer-order Bessel function of the first kind J_m(x)."""
    marr = _check_m(m)
    xarr = _check_x(x, MAX_ARG)
    mb, xb = np.broadcast_arrays(marr, xarr)
    if _backend.USE_NUMBA:
        vals = jn_array_nb(np.ascontiguousarray(mb.ravel()), np.ascontiguousarray(xb.ravel()))
    else:
        vals = jn_np(mb.ravel(), xb.ravel())
    vals = vals.reshape(mb.shape)
    if np.ndim(m) == 0 and np.ndim(x) == 0:
        return float(vals)
    return vals


def bessel_j_sq(m, x):
    """J_m(x)^2."""
    j = bessel_j(m, x)
    return j * j
