"""Laboratory parameters <-> dimensionless inputs.

Quasi-2D reduction: the axial ground state has width d_z = sqrt(hbar/(m_B w_z)),
the effective 2D contact coupling is g0 = (g_c + 2 g_d) / (sqrt(2 pi) d_z) with
g_c = 4 pi hbar^2 a_c / m_B and g_d = mu0 mu_m^2 / 3, and

    c0 = sqrt(g0 rho0 / m_B),   M* = m_B c0^2,   A = g0 rho0 / (hbar w_z),
    r0 = sqrt(pi/2) / (1 + g_c / (2 g_d)),
    Mt = R M* / (hbar c0),      Et = R w0 / c0,  v = R Omega / c0.

Dimensionless rates are in units of g_-^2 rho0 m_B / (2 hbar^3), temperatures
in units of M*/k_B.
"""
import hashlib
import math
from dataclasses import asdict, dataclass, fields

from .errors import CollapseError, PhysicalConstraintError, SuperluminalOrbitError

# CODATA 2018, 12 significant digits
CONSTANTS = {
    "hbar": 1.05457181765e-34,        # J s
    "k_B": 1.380649e-23,              # J / K
    "mu_0": 1.25663706212e-6,         # N / A^2
    "mu_B": 9.2740100783e-24,         # J / T
    "u": 1.66053906660e-27,           # kg
    "a_0": 5.29177210903e-11,         # m
}

HBAR = CONSTANTS["hbar"]
K_B = CONSTANTS["k_B"]
MU_0 = CONSTANTS["mu_0"]
MU_B = CONSTANTS["mu_B"]
AMU = CONSTANTS["u"]
BOHR = CONSTANTS["a_0"]

DY164_MASS_U = 163.9291819
KAPPA_WARN = 10.0  # omega_z / omega below this makes the 2D reduction doubtful


def constants_checksum():
    text = ";".join(f"{k}={CONSTANTS[k]!r}" for k in sorted(CONSTANTS))
    return hashlib.sha256(text.encode()).hexdigest()


def _default_g_minus(rho0, m_b):
    # makes the dimensionless rate unit equal to 1 / s
    return math.sqrt(2.0 * HBAR ** 3 / (rho0 * m_b))


@dataclass(frozen=True)
class PhysicalSetup:
    m_b: float = DY164_MASS_U * AMU          # kg
    rho0: float = 4.4e15                     # 1/m^2  (4.4e3 per um^2)
    omega_z: float = 2.0 * math.pi * 1.0e3   # rad/s
    a_c: float = 100.0 * BOHR                # m
    mu_m: float = 10.0 * MU_B                # J/T
    g_minus: float | None = None             # J m^2; None -> rate unit of 1/s
    radius: float = 1.0e-5                   # m
    omega_orbit: float = 800.0               # rad/s
    omega0: float | None = None              # rad/s; None -> M*/hbar

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if val is None:
                continue
            val = float(val)
            if not math.isfinite(val):
                raise PhysicalConstraintError(f"{f.name} must be finite", value=val)
            object.__setattr__(self, f.name, val)
        for name in ("m_b", "rho0", "omega_z", "mu_m", "radius", "omega_orbit"):
            if not getattr(self, name) > 0.0:
                raise PhysicalConstraintError(f"{name} must be positive", value=getattr(self, name))
        if self.a_c < 0.0:
            raise PhysicalConstraintError("scattering length must be >= 0 (r0 would exceed sqrt(pi/2))",
                                          value=self.a_c)
        if self.omega0 is not None and not self.omega0 > 0.0:
            raise PhysicalConstraintError("omega0 must be positive", value=self.omega0)
        if self.g_minus is not None and not self.g_minus > 0.0:
            raise PhysicalConstraintError("g_minus must be positive", value=self.g_minus)


@dataclass(frozen=True)
class DerivedScales:
    d_z: float          # m
    g_c: float          # J m^3
    g_d: float          # J m^3
    g0_eff: float       # J m^2
    c0: float           # m/s
    m_star: float       # J
    r0: float
    a_chem: float
    m_tilde: float
    e_tilde: float
    v: float
    rate_unit: float    # 1/s
    temp_unit: float    # K

    def as_dict(self):
        return asdict(self)


UNIT_LABELS = {
    "d_z": "m", "g_c": "J m^3", "g_d": "J m^3", "g0_eff": "J m^2", "c0": "m/s",
    "m_star": "J", "r0": "1", "a_chem": "1", "m_tilde": "1", "e_tilde": "1", "v": "1",
    "rate_unit": "1/s", "temp_unit": "K",
}

SETUP_LABELS = {
    "m_b": "kg", "rho0": "1/m^2", "omega_z": "rad/s", "a_c": "m", "mu_m": "J/T",
    "g_minus": "J m^2", "radius": "m", "omega_orbit": "rad/s", "omega0": "rad/s",
}


def derive_scales(s):
    d_z = math.sqrt(HBAR / (s.m_b * s.omega_z))
    g_c = 4.0 * math.pi * HBAR ** 2 * s.a_c / s.m_b
    g_d = MU_0 * s.mu_m ** 2 / 3.0
    g0 = (g_c + 2.0 * g_d) / (math.sqrt(2.0 * math.pi) * d_z)
    if not g0 > 0.0:
        raise CollapseError("effective contact coupling is not repulsive", value=g0)
    c0 = math.sqrt(g0 * s.rho0 / s.m_b)
    m_star = s.m_b * c0 * c0
    r0 = math.sqrt(math.pi / 2.0) / (1.0 + g_c / (2.0 * g_d))
    a_chem = g0 * s.rho0 / (HBAR * s.omega_z)
    v = s.radius * s.omega_orbit / c0
    if not v < 1.0:
        raise SuperluminalOrbitError("orbital speed reaches the sound speed", value=v)
    omega0 = m_star / HBAR if s.omega0 is None else s.omega0
    g_minus = _default_g_minus(s.rho0, s.m_b) if s.g_minus is None else s.g_minus
    return DerivedScales(
        d_z=d_z, g_c=g_c, g_d=g_d, g0_eff=g0, c0=c0, m_star=m_star, r0=r0, a_chem=a_chem,
        m_tilde=s.radius * m_star / (HBAR * c0),
        e_tilde=s.radius * omega0 / c0,
        v=v,
        rate_unit=g_minus ** 2 * s.rho0 * s.m_b / (2.0 * HBAR ** 3),
        temp_unit=m_star / K_B,
    )


def to_physical_rate(rate, scales):
    """Dimensionless rate -> 1/s."""
    return rate * scales.rate_unit


def from_physical_rate(rate, scales):
    return rate / scales.rate_unit


def to_physical_temperature(temperature, scales):
    """Temperature in M*/k_B -> kelvin."""
    return temperature * scales.temp_unit


def from_physical_temperature(temperature, scales):
    return temperature / scales.temp_unit


def trap_aspect_ok(omega_z, omega_radial):
    """True when omega_z / omega clears the 2D-reduction warning threshold."""
    return omega_z / omega_radial >= KAPPA_WARN
