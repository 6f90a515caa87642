import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unruh_fluid.dispersion import (
    R0_MAX,
    R0_UNSTABLE_MIN,
    CondensateParams,
    UnitDispersion,
    analyze_roton,
    bogoliubov_uv,
    bogoliubov_weight,
    critical_a,
    f_of_zeta,
    f_squared,
    f_squared_prime,
    fold_function,
    zeta_f_prime,
)
from unruh_fluid.errors import DomainError, InstabilityError

ROTON = CondensateParams(R0_MAX, 3.0)

r0s = st.floats(0.0, R0_MAX)
a_vals = st.floats(1e-3, 1e3)
zetas = st.floats(1e-6, 40.0)


def test_contact_only_closed_form():
    p = CondensateParams(0.0, 1.0)
    assert f_of_zeta(p, 2.0) == pytest.approx(math.sqrt(2.0), rel=1e-15)
    z = np.linspace(0.0, 30.0, 1000)
    assert np.max(np.abs(f_of_zeta(p, z) - np.sqrt(1.0 + z * z / 4.0))) < 1e-14


@given(r0s, a_vals)
def test_f_at_origin_is_one(r0, a):
    assert f_squared(CondensateParams(r0, a), 0.0) == 1.0


@given(r0s, a_vals)
def test_slope_at_origin(r0, a):
    p = CondensateParams(r0, a)
    assert f_squared_prime(p, 0.0) == pytest.approx(-1.5 * r0 * math.sqrt(a), rel=1e-13, abs=1e-15)


@settings(max_examples=60)
@given(r0s, st.floats(0.05, 50.0), st.floats(0.01, 20.0))
def test_derivative_matches_finite_difference(r0, a, z):
    p = CondensateParams(r0, a)
    h = 1e-5 * max(1.0, z)
    fd = (f_squared(p, z + h) - f_squared(p, z - h)) / (2 * h)
    assert f_squared_prime(p, z) == pytest.approx(fd, rel=1e-6, abs=1e-7)


def test_zeta_f_prime_matches_finite_difference():
    z = np.linspace(0.05, 3.0, 40)
    h = 1e-6
    fd = ((z + h) * f_of_zeta(ROTON, z + h) - (z - h) * f_of_zeta(ROTON, z - h)) / (2 * h)
    assert np.allclose(zeta_f_prime(ROTON, z), fd, rtol=1e-6, atol=1e-8)


def test_fold_function_sign_matches_zf_slope():
    z = np.linspace(0.01, 3.0, 300)
    assert np.array_equal(np.sign(fold_function(ROTON, z)), np.sign(zeta_f_prime(ROTON, z)))


@given(r0s, st.floats(0.05, 3.0), zetas)
def test_bogoliubov_normalisation(r0, a, z):
    p = CondensateParams(r0, a)
    u, v = bogoliubov_uv(p, z)
    assert u * u - v * v == pytest.approx(1.0, rel=1e-9)
    assert (u + v) ** 2 == pytest.approx(bogoliubov_weight(p, z), rel=1e-7)


def test_large_zeta_free_particle():
    z = np.array([1e3, 1e4])
    assert np.allclose(f_of_zeta(ROTON, z), z / 2.0, rtol=1e-5)


def test_unit_dispersion():
    u = UnitDispersion()
    assert np.all(f_of_zeta(u, np.array([0.0, 1.0, 50.0])) == 1.0)
    assert f_squared_prime(u, 3.0) == 0.0


def test_domain_errors():
    with pytest.raises(DomainError):
        CondensateParams(-0.1, 1.0)
    with pytest.raises(DomainError):
        CondensateParams(1.3, 1.0)
    with pytest.raises(DomainError):
        CondensateParams(1.0, 0.0)
    with pytest.raises(DomainError):
        f_of_zeta(ROTON, -1.0)
    with pytest.raises(InstabilityError) as info:
        f_of_zeta(CondensateParams(R0_MAX, 5.0), np.linspace(0, 3, 50))
    assert 0.5 < info.value.zeta < 1.5


# -- roton analysis ----------------------------------------------------------

def test_roton_reference_point():
    info = analyze_roton(ROTON)
    assert info.stable and not info.zf_monotone
    assert info.zeta_c == pytest.approx(0.88507, abs=1e-5)
    assert info.f_c == pytest.approx(0.163325, abs=1e-6)
    assert info.folds == pytest.approx((0.444375, 0.835066), abs=1e-6)


def test_contact_only_is_monotone():
    info = analyze_roton(CondensateParams(0.0, 1.0))
    assert info.stable and info.zf_monotone
    assert info.zeta_c is None and info.f_c == 1.0


def test_weak_roton_has_no_folds():
    info = analyze_roton(CondensateParams(R0_MAX, 1.0))
    assert info.zf_monotone and info.folds == ()
    assert info.f_c == pytest.approx(0.5157, abs=1e-4)


def test_critical_a_values():
    assert critical_a(R0_MAX) == pytest.approx(3.4454, abs=1e-3)
    assert critical_a(1.0) == pytest.approx(23.911, abs=1e-3)
    assert critical_a(0.8) is None
    assert critical_a(R0_UNSTABLE_MIN) is None
    with pytest.raises(DomainError):
        critical_a(2.0)


@pytest.mark.parametrize("r0", [1.0, R0_MAX])
def test_stability_flips_at_critical_a(r0):
    ac = critical_a(r0)
    assert analyze_roton(CondensateParams(r0, ac * (1 - 1e-4))).stable
    assert not analyze_roton(CondensateParams(r0, ac * (1 + 1e-4))).stable


def test_no_threshold_below_r0_bound():
    for a in (1.0, 1e2, 1e4):
        assert analyze_roton(CondensateParams(0.8, a)).stable


@settings(max_examples=30, deadline=None)
@given(st.floats(0.85, R0_MAX), st.floats(0.05, 0.95))
def test_min_f_squared_positive_below_threshold(r0, frac):
    a = frac * critical_a(r0)
    info = analyze_roton(CondensateParams(r0, a))
    assert info.stable and info.min_f_squared > 0.0
