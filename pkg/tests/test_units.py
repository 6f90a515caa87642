import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from unruh_fluid import units
from unruh_fluid.errors import CollapseError, PhysicalConstraintError, SuperluminalOrbitError

DY = units.PhysicalSetup()

# sha256 of the sorted constant table; changes only with a deliberate CODATA update
CONSTANTS_SHA256 = "52c99a8248de65a98dccd6e5e4b73c027e79f8aa7098a7dc93f20741aac61b3d"


def test_constants_checksum_frozen():
    assert units.constants_checksum() == CONSTANTS_SHA256
    assert units.CONSTANTS["hbar"] == 1.05457181765e-34
    assert units.CONSTANTS["k_B"] == 1.380649e-23
    assert units.CONSTANTS["mu_0"] == 1.25663706212e-6
    assert units.CONSTANTS["mu_B"] == 9.2740100783e-24
    assert units.CONSTANTS["u"] == 1.66053906660e-27


def test_axial_width_for_dysprosium():
    s = units.derive_scales(DY)
    assert s.d_z == pytest.approx(0.25e-6, rel=0.02)
    assert s.d_z == pytest.approx(math.sqrt(units.HBAR / (DY.m_b * DY.omega_z)), rel=1e-15)


def test_dipolar_coupling_by_hand():
    hand = 1.25663706212e-6 * (10 * 9.2740100783e-24) ** 2 / 3
    s = units.derive_scales(DY)
    assert s.g_d == pytest.approx(hand, rel=1e-14)
    assert s.g_d == pytest.approx(3.60e-51, rel=2e-3)


def test_dipole_dominated_limit():
    s = units.derive_scales(replace(DY, a_c=0.0))
    assert s.r0 == pytest.approx(math.sqrt(math.pi / 2.0), rel=1e-15)
    assert units.derive_scales(replace(DY, a_c=1e-12)).r0 < s.r0


def test_dimensional_audit():
    s = units.derive_scales(DY)
    assert s.a_chem * units.HBAR * DY.omega_z == pytest.approx(DY.m_b * s.c0 ** 2, rel=1e-12)
    assert s.m_star == pytest.approx(DY.m_b * s.c0 ** 2, rel=1e-15)
    assert s.m_tilde == pytest.approx(DY.radius * s.m_star / (units.HBAR * s.c0), rel=1e-15)
    assert s.temp_unit == pytest.approx(s.m_star / units.K_B, rel=1e-15)


def test_default_coupling_gives_unit_rate():
    assert units.derive_scales(DY).rate_unit == pytest.approx(1.0, rel=1e-14)
    s = units.derive_scales(replace(DY, g_minus=1e-50))
    assert s.rate_unit == pytest.approx(1e-100 * DY.rho0 * DY.m_b / (2 * units.HBAR ** 3), rel=1e-14)


def test_gap_default_is_lorentz_scale():
    s = units.derive_scales(DY)
    assert s.e_tilde == pytest.approx(s.m_tilde, rel=1e-14)


@given(st.floats(0.5, 50.0))
def test_density_monotonicity(factor):
    a = units.derive_scales(DY)
    b = units.derive_scales(replace(DY, rho0=DY.rho0 * (1 + factor)))
    assert b.c0 > a.c0 and b.m_star > a.m_star and b.a_chem > a.a_chem


@given(st.floats(-1e6, 1e6).filter(lambda x: x == 0.0 or abs(x) > 1e-200))
def test_rate_roundtrip(x):
    s = units.derive_scales(replace(DY, g_minus=3e-51))
    assert units.from_physical_rate(units.to_physical_rate(x, s), s) == pytest.approx(x, rel=1e-15, abs=0)
    assert units.from_physical_temperature(units.to_physical_temperature(x, s), s) == pytest.approx(
        x, rel=1e-15, abs=0)


def test_rate_conversion_trivia():
    s = units.derive_scales(replace(DY, g_minus=3e-51))
    assert units.to_physical_rate(0.0, s) == 0.0
    assert units.to_physical_rate(1.0, s) == s.rate_unit


def test_superluminal_orbit():
    s = units.derive_scales(DY)
    with pytest.raises(SuperluminalOrbitError) as info:
        units.derive_scales(replace(DY, omega_orbit=2.0 * s.c0 / DY.radius))
    assert info.value.code == "superluminal_orbit"
    assert info.value.to_dict()["value"] == pytest.approx(2.0)


def test_collapse_and_validation():
    with pytest.raises(PhysicalConstraintError):
        units.PhysicalSetup(a_c=-1e-9)
    with pytest.raises(PhysicalConstraintError):
        units.PhysicalSetup(rho0=0.0)
    with pytest.raises(PhysicalConstraintError):
        units.PhysicalSetup(radius=math.inf)
    assert issubclass(CollapseError, PhysicalConstraintError)


def test_trap_aspect_warning():
    assert units.trap_aspect_ok(2 * math.pi * 1e3, 2 * math.pi * 10)
    assert not units.trap_aspect_ok(2 * math.pi * 1e3, 2 * math.pi * 500)
