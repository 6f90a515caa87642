"""Closed forms and asymptotic limits of the detector response.

* ``p0_rate``: the Lorentz-invariant (f = 1) harmonic sum, in units
  Gamma0 = g_-^2 rho0 / (2 hbar M* R^2).  Converting to the mode-sum unit
  g_-^2 rho0 m_B / (2 hbar^3) multiplies by 1/Mt^2.
* ``delta_p_correction``: the large-Mt contribution of modes slower than the
  detector (f(zeta) < v), in mode-sum units,

      dP = 1/(pi gamma) int_{zeta-}^{zeta+} zeta / (f sqrt(v^2 - f^2)) dzeta.

  With zeta = mid - (L/2) cos(theta) the endpoint square roots cancel against
  the Jacobian, leaving a smooth integrand on [0, pi].
* ultrarelativistic thermal forms for f = 1 and gamma >> 1.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _backend
from ._backend import njit
from .dispersion import CondensateParams, analyze_roton, f_squared, f_squared_prime
from .errors import DomainError, InstabilityError, QuadratureError, TruncationError
from .response import MAX_HARMONICS, QUIET_TERMS, DetectorOrbit, first_harmonic
from .specfun import jn_np, jn_scalar
from .units import HBAR, K_B

SQRT_24_5 = math.sqrt(24.0 / 5.0)
T_EFF_COEFF = math.sqrt(5.0) / (2.0 * math.sqrt(6.0))
ZETA_PLUS_CEILING = 1.0e3
_TAIL_FLOOR = 1e-300


@dataclass(frozen=True)
class LiLimitResult:
    p0: float                       # units Gamma0
    delta_p: float                  # mode-sum units
    zeta_minus: float | None = None
    zeta_plus: float | None = None
    p0_units: str = "gamma0"
    delta_p_units: str = "rate_unit"

    def combined(self, m_tilde):
        """p0 / Mt^2 + delta_p, both in mode-sum units."""
        return self.p0 / m_tilde ** 2 + self.delta_p


# ---------------------------------------------------------------------------
# Lorentz-invariant harmonic sum

@njit
def _p0_tail(x_m, v, log_r, m):
    # sum_{j>=1} (x_m + j v)^2 r^(m+j)
    r = math.exp(log_r)
    s0 = r / (1.0 - r)
    s1 = r / (1.0 - r) ** 2
    s2 = r * (1.0 + r) / (1.0 - r) ** 3
    return math.exp(m * log_r) * (x_m * x_m * s0 + 2.0 * x_m * v * s1 + v * v * s2)


@njit
def _p0_certificate(m, x_m, v, e_over_g):
    # z = x/m for later harmonics; bounded by the value at m + 1 when Et < 0
    zsup = v - min(0.0, e_over_g) / (m + 1)
    if zsup >= 1.0:
        return np.inf
    w = math.sqrt((1.0 - zsup) * (1.0 + zsup))
    log_r = 2.0 * (math.log(zsup) + w - math.log1p(w))
    return _p0_tail(x_m, v, log_r, m)


@njit
def p0_sum_nb(v, e_over_g, rel_tol, m_start, max_terms):
    s = 0.0
    quiet = 0
    m = m_start
    tail = np.inf
    while m - m_start <= max_terms:
        x = m * v - e_over_g
        jv = jn_scalar(m, x)
        term = x * x * jv * jv
        s += term
        quiet = quiet + 1 if term <= rel_tol * s else 0
        if quiet >= QUIET_TERMS and m >= 1:
            tail = _p0_certificate(m, x, v, e_over_g)
            if tail <= rel_tol * s or tail <= _TAIL_FLOOR:
                return s, m, tail, True
        m += 1
    return s, m, tail, False


def _p0_certificate_py(m, x_m, v, e_over_g):
    zsup = v - min(0.0, e_over_g) / (m + 1)
    if zsup >= 1.0:
        return math.inf
    w = math.sqrt((1.0 - zsup) * (1.0 + zsup))
    log_r = 2.0 * (math.log(zsup) + w - math.log1p(w))
    r = math.exp(log_r)
    s0 = r / (1.0 - r)
    s1 = r / (1.0 - r) ** 2
    s2 = r * (1.0 + r) / (1.0 - r) ** 3
    return math.exp(m * log_r) * (x_m * x_m * s0 + 2.0 * x_m * v * s1 + v * v * s2)


def p0_sum_np(v, e_over_g, rel_tol, m_start, max_terms, block=1024):
    s = 0.0
    quiet = 0
    tail = math.inf
    m0 = m_start
    while True:
        ms = np.arange(m0, m0 + block, dtype=np.int64)
        x = ms * v - e_over_g
        jv = jn_np(ms, x)
        terms = x * x * jv * jv
        for i in range(block):
            m = int(ms[i])
            s += terms[i]
            quiet = quiet + 1 if terms[i] <= rel_tol * s else 0
            if quiet >= QUIET_TERMS and m >= 1:
                tail = _p0_certificate_py(m, float(x[i]), v, e_over_g)
                if tail <= rel_tol * s or tail <= _TAIL_FLOOR:
                    return s, m, tail, True
            if m - m_start >= max_terms:
                return s, m, tail, False
        m0 += block


def p0_rate(orbit, rel_tol=1e-8, max_terms=MAX_HARMONICS):
    """Lorentz-invariant rate in units Gamma0; never reads the dispersion."""
    if not 0.0 < rel_tol < 0.1:
        raise DomainError(f"rel_tol must lie in (0, 0.1), got {rel_tol}")
    gamma = orbit.gamma
    e_over_g = orbit.e_tilde / gamma
    m_start = first_harmonic(orbit.e_tilde, orbit.v, gamma)
    if _backend.USE_NUMBA:
        s, m, tail, ok = p0_sum_nb(orbit.v, e_over_g, rel_tol, m_start, max_terms)
    else:
        s, m, tail, ok = p0_sum_np(orbit.v, e_over_g, rel_tol, m_start, max_terms)
    if not ok:
        raise TruncationError(f"LI sum not certified after {m - m_start + 1} harmonics",
                              partial=float(s) / gamma)
    return float(s) / gamma


# ---------------------------------------------------------------------------
# critical velocity and the slow-mode correction

def critical_velocity(p):
    """inf f: the speed above which some modes are slower than the detector."""
    info = analyze_roton(p)
    if not info.stable:
        raise InstabilityError("spectrum unstable for these parameters", zeta=info.zeta_c)
    return info.f_c


def slow_mode_interval(p, v):
    """(zeta-, zeta+) with f = v on either side of the minimum, or None."""
    info = analyze_roton(p)
    if not info.stable:
        raise InstabilityError("spectrum unstable for these parameters", zeta=info.zeta_c)
    if info.zeta_c is None or v <= info.f_c:
        return None
    zc = info.zeta_c
    v2 = v * v

    def g(z):
        return f_squared(p, z) - v2

    if not g(0.0) > 0.0:
        raise DomainError("lower endpoint: f(0) = 1 does not exceed v")
    try:
        zm = brentq(g, 0.0, zc, xtol=1e-15, rtol=1e-15)
    except ValueError as exc:
        raise DomainError(f"lower endpoint bracket (0, zeta_c) failed: {exc}") from exc
    hi = ZETA_PLUS_CEILING
    while g(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise DomainError("upper endpoint bracket (zeta_c, ceiling) failed")
    try:
        zp = brentq(g, zc, hi, xtol=1e-15, rtol=1e-15)
    except ValueError as exc:
        raise DomainError(f"upper endpoint bracket (zeta_c, ceiling) failed: {exc}") from exc
    return zm, zp


_DD_NODES, _DD_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _mean_slope(p, a, b):
    """Mean of (f^2)' over [a, b] for arrays of endpoints (16-point Gauss)."""
    s = 0.5 * (_DD_NODES[None, :] + 1.0)
    z = a[:, None] + s * (b - a)[:, None]
    return 0.5 * (f_squared_prime(p, z) @ _DD_WEIGHTS)


def _substituted_integrand(p, v, zm, zp, zc, theta):
    half = 0.5 * (zp - zm)
    mid = 0.5 * (zp + zm)
    z = mid - half * np.cos(theta)
    # phi = (v^2 - f^2) / ((z - zm)(zp - z)) is smooth and positive.  Writing
    # v^2 - f^2 as an integral of (f^2)' from the nearer-side root avoids the
    # cancellation that plain subtraction suffers close to either endpoint.
    left = z <= zc
    phi = np.empty_like(z)
    zl, zr = z[left], z[~left]
    phi[left] = -_mean_slope(p, np.full_like(zl, zm), zl) / (zp - zl)
    phi[~left] = _mean_slope(p, zr, np.full_like(zr, zp)) / (zr - zm)
    return z / (np.sqrt(f_squared(p, z)) * np.sqrt(phi))


def delta_p_correction(p, orbit, rel_tol=1e-8, max_nodes=1 << 12):
    """Slow-mode contribution in mode-sum units (0 when v <= f_c)."""
    if not isinstance(p, CondensateParams):
        raise DomainError("delta_p_correction needs CondensateParams")
    ends = slow_mode_interval(p, orbit.v)
    if ends is None:
        return 0.0
    zm, zp = ends
    zc = analyze_roton(p).zeta_c
    n = 16
    prev = None
    while n <= max_nodes:
        x, w = np.polynomial.legendre.leggauss(n)
        theta = 0.5 * math.pi * (x + 1.0)
        val = 0.5 * math.pi * float(np.dot(w, _substituted_integrand(p, orbit.v, zm, zp, zc, theta)))
        if prev is not None and abs(val - prev) <= rel_tol * abs(val):
            return val / (math.pi * orbit.gamma)
        prev = val
        n *= 2
    raise QuadratureError("slow-mode integral did not converge", residual=abs(val - prev) / abs(val))


def threshold_delta_p(p, gamma=1.0):
    """Limit of delta_p_correction as v -> f_c from above.

    The slow-mode window and the inverse square root shrink together, so the
    limit is finite: zeta_c / (gamma f_c sqrt((f^2)''(zeta_c) / 2))."""
    info = analyze_roton(p)
    if not info.stable or info.zeta_c is None:
        raise DomainError("needs a stable spectrum with an interior minimum")
    zc, h = info.zeta_c, 1e-4 * info.zeta_c
    curv = (f_squared_prime(p, zc + h) - f_squared_prime(p, zc - h)) / (2.0 * h)
    return zc / (gamma * info.f_c * math.sqrt(0.5 * curv))


def li_limit(p, orbit, rel_tol=1e-8):
    ends = slow_mode_interval(p, orbit.v) if isinstance(p, CondensateParams) else None
    dp = delta_p_correction(p, orbit, rel_tol) if ends else 0.0
    return LiLimitResult(p0=p0_rate(orbit, rel_tol), delta_p=dp,
                         zeta_minus=ends[0] if ends else None, zeta_plus=ends[1] if ends else None)


# ---------------------------------------------------------------------------
# ultrarelativistic thermal forms (f = 1, gamma >> 1)

def ultrarelativistic_ratio(y):
    """P(w0)/P(-w0) = (12 y^2 / 5) exp(-sqrt(24/5) y) with y = c0 w0 / a."""
    y = float(y)
    if not (math.isfinite(y) and y > 0.0):
        raise DomainError("c0*omega0/a must be positive")
    return 2.4 * y * y * math.exp(-SQRT_24_5 * y)


def ratio_temperature(y):
    """Detailed-balance temperature implied by ``ultrarelativistic_ratio``,
    in units hbar a / (k_B c0)."""
    ultrarelativistic_ratio(y)
    return y / (SQRT_24_5 * y - math.log(2.4 * y * y))


def t_eff_circular(accel, c0):
    """sqrt(5) hbar a / (2 sqrt(6) k_B c0), in kelvin."""
    if not (accel > 0.0 and c0 > 0.0):
        raise DomainError("acceleration and sound speed must be positive")
    return T_EFF_COEFF * HBAR * accel / (K_B * c0)


def unruh_linear(accel, c0):
    """hbar a / (2 pi k_B c0), the linear-acceleration value."""
    if not (accel > 0.0 and c0 > 0.0):
        raise DomainError("acceleration and sound speed must be positive")
    return HBAR * accel / (2.0 * math.pi * K_B * c0)


def closed_form_bracket(y):
    """1 - exp(-sqrt(24/5) y) + 12 y^2 / 5 for signed y = c0 w0 / a."""
    return 1.0 - math.exp(-SQRT_24_5 * y) + 2.4 * y * y


def closed_form_prefactor(g_minus, rho0, m_b, c0):
    """5 g_-^2 rho0 / (96 sqrt(2 pi) hbar m_B c0^6)."""
    for name, val in (("g_minus", g_minus), ("rho0", rho0), ("m_b", m_b), ("c0", c0)):
        if not val > 0.0:
            raise DomainError(f"{name} must be positive")
    return 5.0 * g_minus ** 2 * rho0 / (96.0 * math.sqrt(2.0 * math.pi) * HBAR * m_b * c0 ** 6)


def closed_form_rate_li(gamma, accel, omega0, c0=1.0, prefactor=1.0):
    """prefactor (3 gamma^2 - 1) a^2 [bracket], evaluated as written.

    omega0 is signed; for large negative c0*omega0/a the bracket (and so the
    value) is negative, which is why ratios are formed from magnitudes."""
    if not (gamma >= 1.0 and accel > 0.0 and c0 > 0.0 and math.isfinite(omega0)):
        raise DomainError("need gamma >= 1, a > 0, c0 > 0 and finite omega0")
    return prefactor * (3.0 * gamma * gamma - 1.0) * accel ** 2 * closed_form_bracket(c0 * omega0 / accel)


def closed_form_ratio(y):
    """|P(w0)| / |P(-w0)| from the closed form at y = c0 w0 / a."""
    return abs(closed_form_bracket(y)) / abs(closed_form_bracket(-y))


def _gamma_v_squared(v):
    # gamma^2 v^2 without forming 1 - v^2 directly
    return v * v / ((1.0 - v) * (1.0 + v))


def gap_over_accel(orbit):
    """c0 w0 / a for a circular orbit: Et / (gamma^2 v^2)."""
    return orbit.e_tilde / _gamma_v_squared(orbit.v)


def orbit_for_gap_ratio(y, gamma, m_tilde=1.0):
    """Orbit with Lorentz factor gamma and c0 w0 / a = y."""
    v = math.sqrt(1.0 - 1.0 / gamma ** 2)
    return DetectorOrbit(m_tilde, y * _gamma_v_squared(v), v)
