"""Slow reference evaluations of the detector rate, for tests and --verify.

smeared_delta_rate
    Replaces delta(zeta f - t_m) by a normalised Gaussian of width sigma and
    integrates over zeta on a uniform grid, with scipy's J_m.

wightman_rate
    Works from the two-point function instead.  With tau = gamma Omega s the
    orbital angle, the rate is

        P = Mt / (2 pi gamma v) int dtau int dzeta (zeta^2 / f)
              J0(2 Mt zeta sin(tau/2)) exp(-i Phi(zeta) tau),
        Phi = (Mt zeta f + Et/gamma) / v.

    A Gaussian window of width T (in tau) turns the tau-integral into
    sum_m c_m(zeta) sqrt(2 pi) T exp(-(m - Phi)^2 T^2 / 2), where c_m are the
    Fourier coefficients of the periodic kernel J0(2 Mt zeta sin(tau/2)),
    obtained here by trapezoidal sampling of the kernel (scipy's j0).  A
    regulator exp(-eta zeta) is applied at two values of eta and removed by
    linear extrapolation.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import j0, jv

from .dispersion import UnitDispersion, analyze_roton, f_squared, f_squared_prime
from .errors import CutoffError, DomainError, InstabilityError, QuadratureError
from .response import first_harmonic

BOUNDARY_MASS_LIMIT = 1e-6
# error of a kernel Fourier coefficient from N-point sampling of |J0| <= 1
_COEFF_FLOOR = 4.0 * np.finfo(float).eps
_GAUSS_SPAN = 9.0


@dataclass(frozen=True)
class SmearingConfig:
    sigma: float
    zeta_cut: float
    m_cut: int

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise DomainError("sigma must be positive")
        if not (math.isfinite(self.zeta_cut) and self.zeta_cut > 0.0):
            raise DomainError("zeta_cut must be positive and finite")
        if not self.m_cut > 0:
            raise DomainError("m_cut must be positive")


def _require_stable(p):
    if isinstance(p, UnitDispersion):
        return
    info = analyze_roton(p)
    if not info.stable:
        raise InstabilityError("spectrum unstable for these parameters", zeta=info.zeta_c)


def _zf(p, z):
    return z * np.sqrt(np.asarray(f_squared(p, z)))


def _max_slope(p, zeta_cut):
    z = np.linspace(0.0, zeta_cut, 20001)
    f2 = np.asarray(f_squared(p, z))
    slope = (2.0 * f2 + z * np.asarray(f_squared_prime(p, z))) / (2.0 * np.sqrt(f2))
    return float(np.max(np.abs(slope)))


def smeared_delta_rate(p, orbit, cfg, check_boundary=True):
    """Rate with the delta constraint smeared to a Gaussian of width sigma.

    Raises CutoffError when more than BOUNDARY_MASS_LIMIT of the result comes
    from the last three harmonics or from within the Gaussian reach of
    zeta_cut, unless check_boundary is False."""
    _require_stable(p)
    gamma = orbit.gamma
    sigma = cfg.sigma
    slope = _max_slope(p, cfg.zeta_cut)
    n = int(math.ceil(cfg.zeta_cut * 10.0 * slope / sigma)) + 1
    z = np.linspace(0.0, cfg.zeta_cut, n)
    dz = z[1] - z[0]
    f = np.sqrt(np.asarray(f_squared(p, z)))
    zf = z * f
    base = z * z / f
    order = np.argsort(zf, kind="stable")
    zf_sorted = zf[order]
    edge = z > cfg.zeta_cut - _GAUSS_SPAN * sigma / max(slope, 1e-300) - 2.0 * dz
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * sigma)

    total = 0.0
    boundary = 0.0
    m_lo = max(-cfg.m_cut, first_harmonic(orbit.e_tilde, orbit.v, gamma) - int(
        math.ceil(_GAUSS_SPAN * sigma * orbit.m_tilde / orbit.v)) - 1)
    for m in range(m_lo, cfg.m_cut + 1):
        t = (m * orbit.v - orbit.e_tilde / gamma) / orbit.m_tilde
        lo = np.searchsorted(zf_sorted, t - _GAUSS_SPAN * sigma, side="left")
        hi = np.searchsorted(zf_sorted, t + _GAUSS_SPAN * sigma, side="right")
        if hi <= lo:
            continue
        idx = order[lo:hi]
        g = norm * np.exp(-0.5 * ((zf[idx] - t) / sigma) ** 2)
        vals = base[idx] * g * jv(m, orbit.m_tilde * z[idx]) ** 2
        # trapezoid weights: endpoints of the full grid count half
        wts = np.where((idx == 0) | (idx == n - 1), 0.5, 1.0)
        contrib = dz * float(np.sum(wts * vals))
        total += contrib
        edge_mass = dz * float(np.sum((wts * vals)[edge[idx]]))
        boundary += edge_mass
        if m > cfg.m_cut - 3:
            boundary += contrib
    rate = total / gamma
    if check_boundary and total > 0.0 and boundary > BOUNDARY_MASS_LIMIT * total:
        raise CutoffError(f"cutoffs leave {boundary / total:.2e} of the mass at the boundary",
                          boundary_fraction=boundary / total)
    return rate


def auto_smearing(p, orbit, sigma, m_cut=None):
    """Cutoffs that grow until the boundary-mass check passes; returns (rate, cfg)."""
    gamma = orbit.gamma
    m_min = first_harmonic(orbit.e_tilde, orbit.v, gamma)
    m_cut = m_cut or max(m_min, 1) + 40 + int(2 * orbit.m_tilde)
    for _ in range(12):
        t_top = (m_cut * orbit.v - orbit.e_tilde / gamma) / orbit.m_tilde + _GAUSS_SPAN * sigma
        zeta_cut = 1.0
        while float(_zf(p, zeta_cut)) < t_top + 10 * sigma:
            zeta_cut *= 1.25
        cfg = SmearingConfig(sigma=sigma, zeta_cut=zeta_cut, m_cut=m_cut)
        try:
            return smeared_delta_rate(p, orbit, cfg), cfg
        except CutoffError:
            m_cut *= 2
    raise CutoffError("could not find sufficient cutoffs")


# ---------------------------------------------------------------------------
# two-point-function route

def _phi(p, orbit, z):
    return (orbit.m_tilde * _zf(p, z) + orbit.e_tilde / orbit.gamma) / orbit.v


def _kernel_coefficients(m_tilde, z, m, n_tau):
    """Fourier coefficients c_m(z) of tau -> J0(2 Mt z sin(tau/2)) by sampling."""
    tau = 2.0 * math.pi * np.arange(n_tau) / n_tau
    kern = j0(2.0 * m_tilde * np.outer(z, np.sin(0.5 * tau)))
    return kern @ np.cos(m * tau) / n_tau


def _evanescent_cut(p, orbit):
    # beyond this zeta every contributing harmonic has order far above argument
    z = 1.0
    for _ in range(200):
        phi = float(_phi(p, orbit, z))
        x = orbit.m_tilde * z
        if phi > x:
            r = x / phi
            w = math.sqrt((1.0 - r) * (1.0 + r))
            if 2.0 * phi * (math.log(r) + w - math.log1p(w)) < -45.0:
                return z
        z *= 1.2
    raise QuadratureError("no evanescent cutoff found", residual=math.inf)


def _wightman_samples(p, orbit, window, etas):
    T = 2.0 * math.pi * window
    span = 10.0 / T
    zcut = _evanescent_cut(p, orbit)
    slope = _max_slope(p, zcut) * orbit.m_tilde / orbit.v   # max dPhi/dzeta
    coarse = np.linspace(0.0, zcut, int(math.ceil(zcut * slope / 0.25)) + 2)
    phic = _phi(p, orbit, coarse)
    lo_c = np.minimum(phic[:-1], phic[1:]) - span
    hi_c = np.maximum(phic[:-1], phic[1:]) + span
    active = np.floor(hi_c) >= np.ceil(lo_c)
    dzf = span / slope / 40.0   # about a quarter of the Gaussian width in zeta
    sub = 2 * max(1, int(math.ceil((coarse[1] - coarse[0]) / dzf / 2)))
    w = np.ones(sub + 1)
    w[0] = w[-1] = 0.5
    w_half = np.zeros(sub + 1)      # trapezoid on every other node, doubled step
    w_half[::2] = 2.0
    w_half[0] = w_half[-1] = 1.0
    sums = np.zeros(len(etas))
    sums_half = np.zeros(len(etas))
    floor = 0.0
    m_tilde = orbit.m_tilde
    for i in np.flatnonzero(active):
        zz = np.linspace(coarse[i], coarse[i + 1], sub + 1)
        phi = _phi(p, orbit, zz)
        f = np.sqrt(np.asarray(f_squared(p, zz)))
        acc = np.zeros(zz.size)
        env = np.zeros(zz.size)
        for m in range(int(math.ceil(lo_c[i])), int(math.floor(hi_c[i])) + 1):
            near = np.abs(m - phi) <= span
            if not near.any():
                continue
            zn = zz[near]
            n_tau = 1 << int(math.ceil(math.log2(2 * (abs(m) + m_tilde * zn.max() + 60))))
            cm = _kernel_coefficients(m_tilde, zn, m, n_tau)
            gauss = math.sqrt(2.0 * math.pi) * T * np.exp(-0.5 * ((m - phi[near]) * T) ** 2)
            acc[near] += cm * gauss
            env[near] += _COEFF_FLOOR * gauss
        base = zz * zz / f * acc
        h = zz[1] - zz[0]
        floor += h * np.dot(w, zz * zz / f * env)
        for k, eta in enumerate(etas):
            reg = base * np.exp(-eta * zz)
            sums[k] += h * np.dot(w, reg)
            sums_half[k] += h * np.dot(w_half, reg)
    pref = orbit.m_tilde / (2.0 * math.pi * orbit.gamma * orbit.v)
    return pref * sums, pref * sums_half, pref * floor


@dataclass(frozen=True)
class WightmanResult:
    value: float
    resolution: float   # absolute round-off floor; |value| below it means "zero"


def wightman_rate(p, orbit, window_time=200.0, etas=(1e-3, 5e-4)):
    """Windowed two-point-function rate; window_time in orbital periods."""
    _require_stable(p)
    if not window_time > 0.0:
        raise DomainError("window_time must be positive")
    vals, half, floor = _wightman_samples(p, orbit, float(window_time), etas)
    scale = max(float(np.abs(vals).max()), floor, 1e-300)
    resid = float(np.max(np.abs(vals - half)))
    if resid > 1e-6 * scale and resid > floor:
        raise QuadratureError("zeta quadrature of the windowed transform not converged",
                              residual=resid / scale)
    e1, e2 = etas
    # linear in eta: value at eta = 0
    value = float(vals[1] + (vals[1] - vals[0]) * e2 / (e1 - e2))
    return WightmanResult(value=value, resolution=3.0 * floor)


def correlation_function(p, orbit, tau, eta=1e-3, zeta_cut=None, n=20001):
    """W(tau) = int dzeta (zeta^2/f) J0(2 Mt zeta sin(tau/2)) exp(-i Mt zeta f tau / v - eta zeta).

    tau is the orbital angle gamma Omega s; returns complex values."""
    _require_stable(p)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    zc = zeta_cut or 40.0 / eta ** 0.5
    z = np.linspace(0.0, zc, n)
    f = np.sqrt(np.asarray(f_squared(p, z)))
    w = np.full(n, z[1] - z[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    base = w * z * z / f * np.exp(-eta * z)
    out = np.empty(tau.size, dtype=complex)
    for i, s in enumerate(tau):
        kern = j0(2.0 * orbit.m_tilde * z * math.sin(0.5 * s))
        out[i] = np.sum(base * kern * np.exp(-1j * orbit.m_tilde * z * f * s / orbit.v))
    return out


__all__ = ["SmearingConfig", "WightmanResult", "smeared_delta_rate", "auto_smearing", "wightman_rate",
           "correlation_function"]
