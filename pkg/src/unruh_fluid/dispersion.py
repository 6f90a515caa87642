"""Bogoliubov dispersion of a quasi-2D dipolar condensate.

Energies are measured in M* = m_B c0^2 and momenta through zeta = hbar c0 k / M*.
The excitation frequency is omega_k = c0 k f(zeta) with

    f^2(zeta) = 1 - (3 r0 / 2) sqrt(A) zeta w(sqrt(A/2) zeta) + zeta^2 / 4,

w the scaled complementary error function.  r0 is the dipolar-to-contact
ratio (0 for pure contact interaction, sqrt(pi/2) when dipoles dominate) and
A the effective chemical potential in units of hbar omega_z.

Useful identities (kinetic energy H = zeta^2/2, hbar omega = zeta f):

    (u + v)^2          = H / (hbar omega) = zeta / (2 f)
    d(zeta f)/dzeta    = h(zeta) / (2 f),  h = 2 f^2 + zeta d(f^2)/dzeta

so the folds of zeta*f (van Hove points) are the zeros of h.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from ._backend import njit
from .errors import DomainError, InstabilityError
from .specfun import erfcx_scalar, scaled_erfc

R0_MAX = math.sqrt(math.pi / 2.0)
# f^2 can only turn negative (for some A) when r0 exceeds this value:
# inf_y [1 - (3 r0/sqrt 2) y w(y)] = 1 - 3 r0 / sqrt(2 pi)
R0_UNSTABLE_MIN = math.sqrt(2.0 * math.pi) / 3.0
A_SEARCH_CEILING = 1.0e8

ZETA_MAX_DEFAULT = 50.0
_GRID_LOG_POINTS = 1500
_GRID_LIN_POINTS = 2500
_REFINE_TOL = 1e-12

KIND_BOGOLIUBOV = 0
KIND_UNIT = 1

_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)


@dataclass(frozen=True)
class CondensateParams:
    r0: float
    a_chem: float

    def __post_init__(self):
        r0 = float(self.r0)
        a = float(self.a_chem)
        if not (math.isfinite(r0) and 0.0 <= r0 <= R0_MAX * (1 + 1e-12)):
            raise DomainError(f"r0 must lie in [0, sqrt(pi/2)], got {self.r0}")
        if not (math.isfinite(a) and a > 0.0):
            raise DomainError(f"a_chem must be positive, got {self.a_chem}")
        object.__setattr__(self, "r0", min(r0, R0_MAX))
        object.__setattr__(self, "a_chem", a)

    kind = KIND_BOGOLIUBOV


@dataclass(frozen=True)
class UnitDispersion:
    """f(zeta) = 1 identically: the Lorentz-invariant reference medium.

    Only meant for consistency checks of the rate machinery.
    """
    r0: float = 0.0
    a_chem: float = 1.0
    kind = KIND_UNIT


@dataclass(frozen=True)
class RotonInfo:
    stable: bool
    zeta_c: float | None
    f_c: float
    zf_monotone: bool
    min_f_squared: float = 1.0
    folds: tuple = ()


def _kind_args(p):
    if not isinstance(p, (CondensateParams, UnitDispersion)):
        raise DomainError(f"expected CondensateParams, got {type(p).__name__}")
    return p.kind, p.r0, p.a_chem


# ---------------------------------------------------------------------------
# scalar kernels (shared with the rate code)

@njit
def f2_kernel(kind, r0, a, z):
    if kind == KIND_UNIT:
        return 1.0
    s = math.sqrt(a)
    return 1.0 - 1.5 * r0 * s * z * erfcx_scalar(math.sqrt(0.5 * a) * z) + 0.25 * z * z


@njit
def f2p_kernel(kind, r0, a, z):
    if kind == KIND_UNIT:
        return 0.0
    c = math.sqrt(0.5 * a)
    y = c * z
    w = erfcx_scalar(y)
    dw = 2.0 * y * w - 2.0 * _INV_SQRT_PI
    return -1.5 * r0 * math.sqrt(a) * (w + z * c * dw) + 0.5 * z


@njit
def h_kernel(kind, r0, a, z):
    """2 f^2 + zeta (f^2)'; same sign as d(zeta f)/dzeta."""
    return 2.0 * f2_kernel(kind, r0, a, z) + z * f2p_kernel(kind, r0, a, z)


# ---------------------------------------------------------------------------
# vectorised forms

def f_squared(p, zeta):
    kind, r0, a = _kind_args(p)
    z = np.asarray(zeta, dtype=float)
    if kind == KIND_UNIT:
        out = np.ones_like(z)
    else:
        out = 1.0 - 1.5 * r0 * math.sqrt(a) * z * scaled_erfc(math.sqrt(0.5 * a) * z) + 0.25 * z * z
    return float(out) if np.ndim(zeta) == 0 else out


def _check_zeta(zeta):
    z = np.asarray(zeta, dtype=float)
    if not np.all(np.isfinite(z)) or np.any(z < 0.0):
        raise DomainError("zeta must be finite and >= 0")
    return z


def _require_stable(p, z, f2):
    bad = np.asarray(f2) < 0.0
    if np.any(bad):
        zb = float(np.asarray(z).reshape(-1)[np.flatnonzero(np.asarray(bad).reshape(-1))[0]])
        raise InstabilityError(f"f^2 < 0 at zeta = {zb:.6g}: spectrum unstable", zeta=zb)


def f_of_zeta(p, zeta):
    """f(zeta); raises InstabilityError where f^2 < 0."""
    z = _check_zeta(zeta)
    f2 = f_squared(p, z)
    _require_stable(p, z, f2)
    out = np.sqrt(f2)
    return float(out) if np.ndim(zeta) == 0 else out


def f_squared_prime(p, zeta):
    kind, r0, a = _kind_args(p)
    z = _check_zeta(zeta)
    if kind == KIND_UNIT:
        out = np.zeros_like(z)
    else:
        c = math.sqrt(0.5 * a)
        w = scaled_erfc(c * z)
        dw = 2.0 * c * z * w - 2.0 * _INV_SQRT_PI
        out = -1.5 * r0 * math.sqrt(a) * (w + z * c * dw) + 0.5 * z
    return float(out) if np.ndim(zeta) == 0 else out


def fold_function(p, zeta):
    """h(zeta) = 2 f^2 + zeta (f^2)', whose zeros are the folds of zeta*f."""
    z = _check_zeta(zeta)
    out = 2.0 * f_squared(p, z) + z * f_squared_prime(p, z)
    return float(out) if np.ndim(zeta) == 0 else out


def zeta_f_prime(p, zeta):
    """d(zeta f)/dzeta = f + zeta (f^2)' / (2 f)."""
    z = _check_zeta(zeta)
    f2 = f_squared(p, z)
    _require_stable(p, z, f2)
    if np.any(f2 == 0.0):
        raise InstabilityError("f = 0: derivative of zeta*f undefined", zeta=float(np.min(z[f2 == 0.0])))
    out = fold_function(p, z) / (2.0 * np.sqrt(f2))
    return float(out) if np.ndim(zeta) == 0 else out


def bogoliubov_weight(p, zeta):
    """(u_k + v_k)^2 = zeta / (2 f)."""
    z = _check_zeta(zeta)
    out = z / (2.0 * np.asarray(f_of_zeta(p, z)))
    return float(out) if np.ndim(zeta) == 0 else out


def bogoliubov_uv(p, zeta):
    """Bogoliubov amplitudes (u, v) from kinetic and interaction energies.

    With H = zeta^2/2 and the interaction energy A_k = f^2 - zeta^2/4 (both in
    M*), hbar omega = sqrt(H (H + 2 A_k)) = zeta f and
    u^2 = ((H + A_k)/hbar omega + 1)/2, v^2 = ((H + A_k)/hbar omega - 1)/2,
    with v <= 0 for repulsive A_k.
    """
    z = _check_zeta(zeta)
    if np.any(z == 0.0):
        raise DomainError("Bogoliubov amplitudes need zeta > 0")
    f = np.asarray(f_of_zeta(p, z))
    kin = 0.5 * z * z
    inter = f * f - 0.25 * z * z
    omega = z * f
    ratio = (kin + inter) / omega
    u = np.sqrt(0.5 * (ratio + 1.0))
    v = -np.sign(inter) * np.sqrt(np.maximum(0.5 * (ratio - 1.0), 0.0))
    if np.ndim(zeta) == 0:
        return float(u), float(v)
    return u, v


# ---------------------------------------------------------------------------
# minimum and fold analysis

def scan_grid(zeta_max=ZETA_MAX_DEFAULT):
    """Zero plus 4000 points: log-spaced on [1e-4, 1], linear on (1, zeta_max]."""
    if not zeta_max > 1.0:
        raise DomainError("zeta_max must exceed 1")
    log_part = np.logspace(-4.0, 0.0, _GRID_LOG_POINTS)
    lin_part = np.linspace(1.0, zeta_max, _GRID_LIN_POINTS + 1)[1:]
    return np.concatenate(([0.0], log_part, lin_part))


def _bisect_sign_change(fun, lo, hi, tol=_REFINE_TOL):
    flo = fun(lo)
    fhi = fun(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ArithmeticError("no sign change in bracket")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _sign_changes(values):
    s = np.sign(values)
    return np.flatnonzero(s[:-1] * s[1:] < 0)


@lru_cache(maxsize=256)
def _analyze_cached(kind, r0, a, zeta_max):
    grid = scan_grid(zeta_max)
    if kind == KIND_UNIT:
        return RotonInfo(stable=True, zeta_c=None, f_c=1.0, zf_monotone=True,
                         min_f_squared=1.0, folds=())
    p = CondensateParams(r0, a)
    f2 = f_squared(p, grid)
    d = f_squared_prime(p, grid)

    def f2p(z):
        return f2p_kernel(kind, r0, a, z)

    # interior minima of f^2: derivative goes from negative to non-negative
    minima = []
    for i in _sign_changes(d):
        if d[i] < 0.0:
            minima.append(_bisect_sign_change(f2p, grid[i], grid[i + 1]))
    zeta_c = None
    f2_min = 1.0
    for z in minima:
        val = f2_kernel(kind, r0, a, z)
        if val < f2_min:
            f2_min, zeta_c = val, z
    f2_min = min(f2_min, float(np.min(f2)))
    stable = f2_min > 0.0

    folds = ()
    zf_monotone = True
    if stable:
        h = 2.0 * f2 + grid * d
        folds = tuple(_bisect_sign_change(lambda z: h_kernel(kind, r0, a, z), grid[i], grid[i + 1])
                      for i in _sign_changes(h))
        if not folds:
            # a narrow fold pair can hide between grid points; refine min h
            i = int(np.argmin(h[1:-1])) + 1
            lo, hi = grid[i - 1], grid[i + 1]
            res = minimize_scalar(lambda z: h_kernel(kind, r0, a, z), bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-13})
            zm = float(res.x)
            if h_kernel(kind, r0, a, zm) <= 0.0:
                hk = lambda z: h_kernel(kind, r0, a, z)  # noqa: E731
                folds = (_bisect_sign_change(hk, lo, zm), _bisect_sign_change(hk, zm, hi))
        zf_monotone = len(folds) == 0
    f_c = math.sqrt(f2_min) if (stable and zeta_c is not None) else (1.0 if stable else 0.0)
    return RotonInfo(stable=bool(stable), zeta_c=None if zeta_c is None else float(zeta_c),
                     f_c=float(f_c), zf_monotone=bool(zf_monotone), min_f_squared=float(f2_min),
                     folds=tuple(float(z) for z in folds))


def analyze_roton(p, zeta_max=ZETA_MAX_DEFAULT):
    """Locate the minimum of f, classify stability and monotonicity of zeta*f."""
    kind, r0, a = _kind_args(p)
    return _analyze_cached(kind, r0, a, float(zeta_max))


def _min_f_squared_scaled(r0, a):
    """min over zeta of f^2, computed in y = sqrt(A/2) zeta where the
    minimiser stays O(A^(1/3)) for all A."""
    k = 3.0 * r0 / math.sqrt(2.0)

    def F(y):
        return 1.0 - k * y * erfcx_scalar(y) + y * y / (2.0 * a)

    def dF(y):
        w = erfcx_scalar(y)
        return -k * (w * (1.0 + 2.0 * y * y) - 2.0 * y * _INV_SQRT_PI) + y / a

    ys = np.logspace(-3.0, math.log10(20.0 * a ** (1.0 / 3.0) + 20.0), 2000)
    vals = np.array([F(y) for y in ys])
    i = int(np.argmin(vals))
    best = vals[i]
    if 0 < i < ys.size - 1:
        lo, hi = ys[i - 1], ys[i + 1]
        if dF(lo) < 0.0 < dF(hi):
            best = min(best, F(brentq(dF, lo, hi, xtol=1e-14)))
    return best


def critical_a(r0, tol=1e-6):
    """Smallest A at which min f^2 reaches zero, or None.

    min f^2 decreases monotonically with A and tends to 1 - 3 r0/sqrt(2 pi),
    so no threshold exists for r0 <= sqrt(2 pi)/3; in that case (and when the
    threshold lies above A_SEARCH_CEILING) None is returned.
    """
    r0 = float(r0)
    if not (math.isfinite(r0) and 0.0 <= r0 <= R0_MAX * (1 + 1e-12)):
        raise DomainError(f"r0 must lie in [0, sqrt(pi/2)], got {r0}")
    if r0 <= R0_UNSTABLE_MIN:
        return None
    lo, hi = 0.0, 1.0
    while _min_f_squared_scaled(r0, hi) > 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > A_SEARCH_CEILING:
            return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _min_f_squared_scaled(r0, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
