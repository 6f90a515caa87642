"""Mode-sum transition rate of the circulating detector.

In units of g_-^2 rho0 m_B / (2 hbar^3) the rate is

    P = (1/gamma) sum_{m >= m_min} sum_{roots} 2 zeta^2 / |h(zeta)| * J_m(Mt zeta)^2

where the roots solve zeta f(zeta) = t_m = (m v - Et/gamma) / Mt, h = 2 f^2 +
zeta (f^2)' (so 2 zeta^2/|h| = zeta^2 / (f |(zeta f)'|)) and m_min is the
first harmonic with t_m > 0.  Mt is the orbit radius in units of the
Lorentz-breaking length hbar c0 / M*, Et the gap in units of c0 / R.

Truncation.  Past the last fold of zeta*f every harmonic has a single root
and zeta_m grows with m.  With z = Mt zeta / m,

    z = v / (f(zeta) + Et / (gamma Mt zeta)) <= z_sup,

and Kapteyn's inequality |J_m(m z)| <= K(z)^m, K(z) = z exp(sqrt(1-z^2)) /
(1 + sqrt(1-z^2)), bounds every later term by sup(weight) * K(z_sup)^(2m).
Summation stops once 40 consecutive terms are below rel_tol of the running sum
and the geometric tail is below rel_tol as well.  For f = 1 the weight is t^2
and the tail is summed in closed form.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from ._backend import njit
from .dispersion import (
    KIND_UNIT,
    CondensateParams,
    UnitDispersion,
    analyze_roton,
    f2_kernel,
    f_squared,
    f_squared_prime,
    h_kernel,
)
from .errors import DomainError, InstabilityError, TruncationError
from .specfun import MAX_ARG, MAX_ORDER, jn_np, jn_scalar

QUIET_TERMS = 40
MAX_HARMONICS = 10**7
NEAR_SINGULAR_SLOPE = 1e-8
NEAR_SINGULAR_WINDOW = 1e-6
UNDERFLOW_FLOOR = 1e-280
_TAIL_FLOOR = 1e-300
_BOUND_MARGIN = 1e-3

STATUS_OK = 0
STATUS_TRUNCATED = 1
STATUS_RANGE = 2


@dataclass(frozen=True)
class DetectorOrbit:
    m_tilde: float
    e_tilde: float
    v: float

    def __post_init__(self):
        for name in ("m_tilde", "e_tilde", "v"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if not 0.0 < self.v < 1.0:
            raise DomainError(f"orbital speed must satisfy 0 < v < 1, got {self.v}")
        if not self.m_tilde > 0.0:
            raise DomainError(f"m_tilde must be positive, got {self.m_tilde}")

    @property
    def gamma(self):
        return 1.0 / math.sqrt((1.0 - self.v) * (1.0 + self.v))

    @property
    def omega0_mstar(self):
        """Gap in units of M*/hbar."""
        return self.e_tilde / self.m_tilde

    def flipped(self):
        return DetectorOrbit(self.m_tilde, -self.e_tilde, self.v)


@dataclass(frozen=True)
class RateResult:
    value: float
    m_min: int
    m_used: int
    tail_bound: float
    multi_root: bool
    near_singular: bool


@dataclass(frozen=True)
class TemperaturePoint:
    v: float
    omega0: float
    temperature: float | None
    status: str
    rate_excite: float = 0.0
    rate_deexcite: float = 0.0


def first_harmonic(e_tilde, v, gamma):
    """Smallest m with m v - Et/gamma > 0."""
    return math.floor(e_tilde / (v * gamma)) + 1


# ---------------------------------------------------------------------------
# per-dispersion tables

@dataclass(frozen=True)
class _Tables:
    bounds: np.ndarray      # piece boundaries [0, fold_1, ..., fold_k]
    rising: np.ndarray      # 1 where zeta f increases on the piece
    folds: np.ndarray
    t_fold_max: float
    grid: np.ndarray        # tail-bound grid, ascending, starts at 0
    f_inf: np.ndarray       # min f over grid[i:]
    w_sup: np.ndarray       # max 2 zeta^2/|h| over grid[i:]
    w_sup_far: float        # weight bound beyond grid[-1]


@lru_cache(maxsize=128)
def _tables(kind, r0, a):
    if kind == KIND_UNIT:
        p = UnitDispersion()
        folds = np.zeros(0)
    else:
        p = CondensateParams(r0, a)
        info = analyze_roton(p)
        if not info.stable:
            raise InstabilityError("spectrum unstable for these parameters", zeta=info.zeta_c)
        folds = np.asarray(info.folds, dtype=float)
    bounds = np.concatenate(([0.0], folds))
    mids = np.append(0.5 * (bounds[1:] + bounds[:-1]), bounds[-1] + 1.0) if folds.size else np.array([1.0])
    h_mid = 2.0 * f_squared(p, mids) + mids * f_squared_prime(p, mids)
    rising = (h_mid > 0.0).astype(np.int64)
    t_fold_max = float(np.max(folds * np.sqrt(f_squared(p, folds)))) if folds.size else -1.0

    grid = np.concatenate(([0.0], np.geomspace(1e-6, 1e4, 6000)))
    f2 = f_squared(p, grid)
    h = 2.0 * f2 + grid * f_squared_prime(p, grid)
    weight = 2.0 * grid ** 2 / np.maximum(np.abs(h), 1e-300)
    f_inf = np.minimum.accumulate(np.sqrt(f2)[::-1])[::-1] * (1.0 - _BOUND_MARGIN)
    w_sup = np.maximum.accumulate(weight[::-1])[::-1] * (1.0 + _BOUND_MARGIN)
    w_sup_far = max(2.0, float(weight[-1])) * (1.0 + _BOUND_MARGIN)
    return _Tables(bounds, rising, folds, float(t_fold_max), grid, f_inf, w_sup, w_sup_far)


def _kind_args(p):
    if isinstance(p, (CondensateParams, UnitDispersion)):
        return p.kind, p.r0, p.a_chem
    raise DomainError(f"expected CondensateParams, got {type(p).__name__}")


# ---------------------------------------------------------------------------
# numba kernels

@njit
def _zf(kind, r0, a, z):
    return z * math.sqrt(max(f2_kernel(kind, r0, a, z), 0.0))


@njit
def _solve_piece(kind, r0, a, t, lo, hi, rising, guess):
    """Root of zeta f - t on [lo, hi] where zeta f is monotone; -1 if none."""
    glo = _zf(kind, r0, a, lo) - t
    ghi = _zf(kind, r0, a, hi) - t
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if (glo > 0.0) == (ghi > 0.0):
        return -1.0
    z = guess if lo < guess < hi else 0.5 * (lo + hi)
    for _ in range(300):
        f2 = f2_kernel(kind, r0, a, z)
        g = z * math.sqrt(f2) - t
        if g == 0.0:
            return z
        if (g > 0.0) == (rising == 1):
            hi = z
        else:
            lo = z
        d = h_kernel(kind, r0, a, z) / (2.0 * math.sqrt(f2))
        zn = z - g / d if d != 0.0 else 0.5 * (lo + hi)
        if not (lo < zn < hi):
            zn = 0.5 * (lo + hi)
        if abs(zn - z) <= 4e-16 * zn or hi - lo <= 4e-16 * hi:
            return zn
        z = zn
    return z


@njit
def _roots_nb(kind, r0, a, t, bounds, rising, folds, guess, out):
    """Fill out[:, 0] with roots, out[:, 1] with 2 zeta^2/|h|.

    Returns (count, near_singular)."""
    n = 0
    near = False
    npieces = bounds.size
    for i in range(npieces):
        lo = bounds[i]
        if i + 1 < npieces:
            hi = bounds[i + 1]
        else:
            hi = max(lo, 0.0) + 2.0 * math.sqrt(t) + 2.0
        z = _solve_piece(kind, r0, a, t, lo, hi, rising[i], guess if i == npieces - 1 else -1.0)
        if z <= 0.0:
            continue
        f2 = f2_kernel(kind, r0, a, z)
        h = h_kernel(kind, r0, a, z)
        slope = h / (2.0 * math.sqrt(f2))
        close = False
        for fz in folds:
            if abs(z - fz) < NEAR_SINGULAR_WINDOW:
                close = True
        if close or abs(slope) < NEAR_SINGULAR_SLOPE:
            near = True
            continue
        dup = False
        for j in range(n):
            if out[j, 0] == z:
                dup = True
        if dup:
            continue
        out[n, 0] = z
        out[n, 1] = 2.0 * z * z / abs(h)
        n += 1
    return n, near


@njit
def kapteyn_log(z):
    """log of K(z) = z exp(sqrt(1-z^2)) / (1 + sqrt(1-z^2)), 0 < z < 1."""
    w = math.sqrt((1.0 - z) * (1.0 + z))
    return math.log(z) + w - math.log1p(w)


@njit
def _geom_poly_tail(c, b, log_r, m):
    """sum_{j>=1} (c + b j)^2 r^(m+j) for 0 < r < 1."""
    r = math.exp(log_r)
    s0 = r / (1.0 - r)
    s1 = r / (1.0 - r) ** 2
    s2 = r * (1.0 + r) / (1.0 - r) ** 3
    return math.exp(m * log_r) * (c * c * s0 + 2.0 * c * b * s1 + b * b * s2)


@njit
def _tail_bound(kind, r0, a, m, zeta0, t0, e_over_g, mt, v, grid, f_inf, w_sup, w_sup_far):
    """Bound on sum_{m' > m} weight * J^2 given the root zeta0 at harmonic m."""
    if kind == KIND_UNIT:
        finf = 1.0
    else:
        idx = np.searchsorted(grid, zeta0, side="right") - 1
        if idx >= grid.size - 1:
            finf = math.sqrt(f2_kernel(kind, r0, a, zeta0)) * (1.0 - _BOUND_MARGIN)
        else:
            finf = f_inf[idx]
    denom = finf + min(0.0, e_over_g) / (mt * zeta0)
    if denom <= 0.0:
        return np.inf
    zsup = v / denom
    if zsup >= 1.0:
        return np.inf
    log_r = 2.0 * kapteyn_log(zsup)
    if kind == KIND_UNIT:
        return _geom_poly_tail(t0, v / mt, log_r, m)
    if idx >= grid.size - 1:
        wsup = max(w_sup_far, 2.0 * zeta0 * zeta0 / h_kernel(kind, r0, a, zeta0))
    else:
        wsup = w_sup[idx]
    r = math.exp(log_r)
    return wsup * math.exp((m + 1) * log_r) / (1.0 - r)


@njit
def mode_sum_nb(kind, r0, a, mt, et, v, gamma, rel_tol, m_start, max_terms,
                bounds, rising, folds, t_fold_max, grid, f_inf, w_sup, w_sup_far):
    e_over_g = et / gamma
    roots = np.empty((bounds.size + 1, 2))
    s = 0.0
    quiet = 0
    multi = False
    near = False
    guess = -1.0
    tail = np.inf
    m = m_start
    status = STATUS_TRUNCATED
    while m - m_start <= max_terms:
        t = (m * v - e_over_g) / mt
        if kind == KIND_UNIT:
            n = 1
            roots[0, 0] = t
            roots[0, 1] = t * t
            nr = False
        else:
            n, nr = _roots_nb(kind, r0, a, t, bounds, rising, folds, guess, roots)
        near = near or nr
        if n > 1:
            multi = True
        term = 0.0
        for j in range(n):
            x = mt * roots[j, 0]
            if x > MAX_ARG or abs(m) > MAX_ORDER:
                return s, m, tail, multi, near, STATUS_RANGE
            jv = jn_scalar(m, x)
            term += roots[j, 1] * jv * jv
        if n > 0:
            guess = roots[n - 1, 0]
        s += term
        quiet = quiet + 1 if term <= rel_tol * s else 0
        if quiet >= QUIET_TERMS and m >= 1 and t > t_fold_max and n == 1:
            tail = _tail_bound(kind, r0, a, m, roots[0, 0], t, e_over_g, mt, v,
                               grid, f_inf, w_sup, w_sup_far)
            if tail <= rel_tol * s or tail <= _TAIL_FLOOR:
                status = STATUS_OK
                break
        m += 1
    return s, m, tail, multi, near, status


# ---------------------------------------------------------------------------
# numpy twin

def _roots_np(kind, r0, a, t, tab, guess):
    """Vectorised roots for an array of targets.

    Returns a list of (mask, zeta, weight) per monotone piece, plus a
    near-singular mask."""
    p = UnitDispersion() if kind == KIND_UNIT else CondensateParams(r0, a)
    out = []
    near = np.zeros(t.shape, dtype=bool)
    npieces = tab.bounds.size
    for i in range(npieces):
        lo = np.full_like(t, tab.bounds[i])
        hi = np.full_like(t, tab.bounds[i + 1]) if i + 1 < npieces else lo + 2.0 * np.sqrt(t) + 2.0
        glo = lo * np.sqrt(np.maximum(f_squared(p, lo), 0.0)) - t
        ghi = hi * np.sqrt(np.maximum(f_squared(p, hi), 0.0)) - t
        has = (glo == 0.0) | (ghi == 0.0) | ((glo > 0.0) != (ghi > 0.0))
        if not has.any():
            continue
        rising = tab.rising[i] == 1
        lo, hi, tt = lo[has], hi[has], t[has]
        z = np.where((guess[has] > lo) & (guess[has] < hi), guess[has], 0.5 * (lo + hi)) \
            if i == npieces - 1 else 0.5 * (lo + hi)
        z = np.where(glo[has] == 0.0, lo, np.where(ghi[has] == 0.0, hi, z))
        done = (glo[has] == 0.0) | (ghi[has] == 0.0)
        for _ in range(300):
            act = ~done
            if not act.any():
                break
            f2 = f_squared(p, z)
            g = z * np.sqrt(f2) - tt
            upper = (g > 0.0) == rising
            hi = np.where(act & upper, z, hi)
            lo = np.where(act & ~upper, z, lo)
            d = (2.0 * f2 + z * f_squared_prime(p, z)) / (2.0 * np.sqrt(f2))
            with np.errstate(divide="ignore", invalid="ignore"):
                zn = np.where(d != 0.0, z - g / d, 0.5 * (lo + hi))
            zn = np.where((zn > lo) & (zn < hi), zn, 0.5 * (lo + hi))
            conv = (g == 0.0) | (np.abs(zn - z) <= 4e-16 * zn) | (hi - lo <= 4e-16 * hi)
            zn = np.where(g == 0.0, z, zn)
            z = np.where(act, zn, z)
            done = done | conv
        f2 = f_squared(p, z)
        h = 2.0 * f2 + z * f_squared_prime(p, z)
        slope = h / (2.0 * np.sqrt(f2))
        bad = np.abs(slope) < NEAR_SINGULAR_SLOPE
        for fz in tab.folds:
            bad |= np.abs(z - fz) < NEAR_SINGULAR_WINDOW
        bad |= z <= 0.0
        idx = np.flatnonzero(has)
        near[idx[bad]] = True
        keep = ~bad
        out.append((idx[keep], z[keep], 2.0 * z[keep] ** 2 / np.abs(h[keep])))
    return out, near


def _tail_bound_np(kind, r0, a, m, zeta0, t0, e_over_g, mt, v, tab):
    if kind == KIND_UNIT:
        finf = 1.0
        idx = -1
    else:
        idx = int(np.searchsorted(tab.grid, zeta0, side="right")) - 1
        if idx >= tab.grid.size - 1:
            finf = math.sqrt(float(f_squared(CondensateParams(r0, a), zeta0))) * (1.0 - _BOUND_MARGIN)
        else:
            finf = tab.f_inf[idx]
    denom = finf + min(0.0, e_over_g) / (mt * zeta0)
    if denom <= 0.0:
        return math.inf
    zsup = v / denom
    if zsup >= 1.0:
        return math.inf
    w = math.sqrt((1.0 - zsup) * (1.0 + zsup))
    log_r = 2.0 * (math.log(zsup) + w - math.log1p(w))
    r = math.exp(log_r)
    if kind == KIND_UNIT:
        b = v / mt
        s0 = r / (1.0 - r)
        s1 = r / (1.0 - r) ** 2
        s2 = r * (1.0 + r) / (1.0 - r) ** 3
        return math.exp(m * log_r) * (t0 * t0 * s0 + 2.0 * t0 * b * s1 + b * b * s2)
    if idx >= tab.grid.size - 1:
        p = CondensateParams(r0, a)
        h = 2.0 * float(f_squared(p, zeta0)) + zeta0 * float(f_squared_prime(p, zeta0))
        wsup = max(tab.w_sup_far, 2.0 * zeta0 * zeta0 / h)
    else:
        wsup = tab.w_sup[idx]
    return wsup * math.exp((m + 1) * log_r) / (1.0 - r)


def mode_sum_np(kind, r0, a, mt, et, v, gamma, rel_tol, m_start, max_terms, tab, block=512):
    e_over_g = et / gamma
    s = 0.0
    quiet = 0
    multi = False
    near = False
    tail = math.inf
    m0 = m_start
    while m0 - m_start <= max_terms:
        ms = np.arange(m0, m0 + block, dtype=np.int64)
        t = (ms * v - e_over_g) / mt
        if kind == KIND_UNIT:
            pieces = [(np.arange(block), t, t * t)]
            near_mask = np.zeros(block, dtype=bool)
        else:
            guess = np.sqrt(2.0 * (np.sqrt(1.0 + t * t) - 1.0))  # exact for r0 = 0
            pieces, near_mask = _roots_np(kind, r0, a, t, tab, guess)
        terms = np.zeros(block)
        count = np.zeros(block, dtype=np.int64)
        last_root = np.full(block, -1.0)
        for idx, z, w in pieces:
            x = mt * z
            if np.any(x > MAX_ARG) or np.any(np.abs(ms[idx]) > MAX_ORDER):
                bad = idx[(x > MAX_ARG) | (np.abs(ms[idx]) > MAX_ORDER)][0]
                return s, int(ms[bad]), tail, multi, near, STATUS_RANGE
            jv = jn_np(ms[idx], x)
            terms[idx] += w * jv * jv
            count[idx] += 1
            last_root[idx] = z
        for i in range(block):
            m = int(ms[i])
            near = near or bool(near_mask[i])
            if count[i] > 1:
                multi = True
            s += terms[i]
            quiet = quiet + 1 if terms[i] <= rel_tol * s else 0
            if quiet >= QUIET_TERMS and m >= 1 and t[i] > tab.t_fold_max and count[i] == 1:
                tail = _tail_bound_np(kind, r0, a, m, last_root[i], t[i], e_over_g, mt, v, tab)
                if tail <= rel_tol * s or tail <= _TAIL_FLOOR:
                    return s, m, tail, multi, near, STATUS_OK
            if m - m_start >= max_terms:
                return s, m, tail, multi, near, STATUS_TRUNCATED
        m0 += block
    return s, m0, tail, multi, near, STATUS_TRUNCATED


# ---------------------------------------------------------------------------
# public API

def _check_tol(rel_tol):
    if not (0.0 < rel_tol < 0.1):
        raise DomainError(f"rel_tol must lie in (0, 0.1), got {rel_tol}")


def transition_rate(p, orbit, rel_tol=1e-8, max_terms=MAX_HARMONICS):
    """Mode-sum rate in units g_-^2 rho0 m_B / (2 hbar^3).

    A negative ``orbit.e_tilde`` gives the de-excitation rate."""
    _check_tol(rel_tol)
    kind, r0, a = _kind_args(p)
    tab = _tables(kind, r0, a)
    gamma = orbit.gamma
    m_start = first_harmonic(orbit.e_tilde, orbit.v, gamma)
    args = (kind, r0, a, orbit.m_tilde, orbit.e_tilde, orbit.v, gamma, rel_tol, m_start, max_terms)
    if _backend.USE_NUMBA:
        s, m_used, tail, multi, near, status = mode_sum_nb(
            *args, tab.bounds, tab.rising, tab.folds, tab.t_fold_max,
            tab.grid, tab.f_inf, tab.w_sup, tab.w_sup_far)
    else:
        s, m_used, tail, multi, near, status = mode_sum_np(*args, tab)
    m_used = int(m_used)
    if status == STATUS_RANGE:
        raise DomainError(f"harmonic {m_used} needs a Bessel order/argument beyond "
                          f"|m| <= {MAX_ORDER}, x <= {MAX_ARG:g}")
    rel_tail = (tail / s) if s > 0.0 else (0.0 if tail <= _TAIL_FLOOR else math.inf)
    result = RateResult(value=float(s) / gamma, m_min=m_start, m_used=m_used, tail_bound=float(rel_tail),
                        multi_root=bool(multi), near_singular=bool(near))
    if status != STATUS_OK:
        raise TruncationError(f"mode sum not certified after {m_used - m_start + 1} harmonics",
                              partial=result)
    return result


def solve_delta_roots(p, target):
    """All zeta > 0 with zeta f(zeta) = target, ascending, with (zeta f)' there.

    Unlike the rate kernels this keeps roots that sit on a fold."""
    kind, r0, a = _kind_args(p)
    target = float(target)
    if not (math.isfinite(target) and target >= 0.0):
        raise DomainError("target must be finite and >= 0")
    tab = _tables(kind, r0, a)
    if target == 0.0:
        return []
    if kind == KIND_UNIT:
        return [(target, 1.0)]
    found = []
    for i in range(tab.bounds.size):
        lo = tab.bounds[i]
        hi = tab.bounds[i + 1] if i + 1 < tab.bounds.size else lo + 2.0 * math.sqrt(target) + 2.0
        z = _solve_piece(kind, r0, a, target, lo, hi, tab.rising[i], -1.0)
        if z > 0.0 and (not found or z != found[-1]):
            found.append(z)
    out = []
    for z in found:
        f2 = f2_kernel(kind, r0, a, z)
        out.append((float(z), float(h_kernel(kind, r0, a, z) / (2.0 * math.sqrt(f2)))))
    return out


def rate_pair(p, orbit, rel_tol=1e-8):
    """(excitation, de-excitation) results for |Et|."""
    up = DetectorOrbit(orbit.m_tilde, abs(orbit.e_tilde), orbit.v)
    return transition_rate(p, up, rel_tol), transition_rate(p, up.flipped(), rel_tol)


def detailed_balance_temperature(p, orbit, rel_tol=1e-8):
    """Detailed-balance temperature in units M*/k_B (may be negative)."""
    if not orbit.e_tilde > 0.0:
        raise DomainError("detailed-balance temperature needs a positive gap e_tilde")
    up, down = rate_pair(p, orbit, rel_tol)
    omega0 = orbit.omega0_mstar
    base = dict(v=orbit.v, omega0=omega0, rate_excite=up.value, rate_deexcite=down.value)
    if up.value < UNDERFLOW_FLOOR or down.value < UNDERFLOW_FLOOR:
        return TemperaturePoint(temperature=None, status="underflow", **base)
    log_ratio = math.log(down.value) - math.log(up.value)
    if abs(down.value - up.value) <= rel_tol * max(up.value, down.value):
        return TemperaturePoint(temperature=None, status="undefined", **base)
    return TemperaturePoint(temperature=omega0 / log_ratio, status="ok", **base)
