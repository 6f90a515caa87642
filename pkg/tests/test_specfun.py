import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mp_reference import besselj_mp, envelope, erfcx_mp
from unruh_fluid import specfun
from unruh_fluid.errors import DomainError
from unruh_fluid.specfun import Accuracy, bessel_j, bessel_j_sq, scaled_erfc


def test_reference_values(backend):
    assert bessel_j(1, 1.0) == pytest.approx(0.4400505857449335, rel=1e-13)
    assert scaled_erfc(1.0) == pytest.approx(0.4275835761558070, rel=1e-13)
    assert scaled_erfc(10.0) == pytest.approx(0.05614099274382259, rel=1e-13)
    assert scaled_erfc(0.0) == 1.0
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(3, 0.0) == 0.0


@pytest.mark.parametrize("x", [0.0, 1e-8, 0.3, 1.0, 1.4999, 1.5, 2.7, 5.0, 9.99, 31.0, 1e3, 1e8])
def test_erfcx_against_mpmath(backend, x):
    assert scaled_erfc(x) == pytest.approx(float(erfcx_mp(x)), rel=1e-14)


BESSEL_POINTS = [
    (0, 0.5), (1, 1.0), (5, 0.01), (40, 39.0), (80, 80.0), (81, 79.0), (112, 10.74),
    (111, 3606.4212653504087), (150, 149.7), (300, 300.3), (1000, 1000.5), (1000, 2000.0),
    (2524, 2489.97), (5000, 5000.5), (5000, 4999.5), (0, 10000.37), (-7, 123.4),
    (-8, 123.4), (20000, 19990.0), (40000, 40100.0), (3, 150.3), (500, 12.0),
]


@pytest.mark.parametrize("m,x", BESSEL_POINTS)
def test_bessel_against_mpmath(backend, m, x):
    ref = float(besselj_mp(m, x))
    scale = max(abs(ref), envelope(m, x)) if abs(m) < x else abs(ref)
    assert abs(bessel_j(m, x) - ref) <= 3e-12 * scale


def test_deep_evanescent_underflows_to_zero(backend):
    assert bessel_j(10**6, 1.0) == 0.0
    assert bessel_j(2000, 100.0) == 0.0


def test_array_input_and_broadcast(backend):
    x = np.linspace(0.0, 300.0, 101)
    vals = bessel_j(np.arange(101), x)
    assert vals.shape == (101,)
    grid = bessel_j(np.arange(4)[:, None], x[None, :])
    assert grid.shape == (4, 101)
    np.testing.assert_allclose(bessel_j_sq(2, x), bessel_j(2, x) ** 2)
    assert scaled_erfc(np.array([0.0, 2.0])).shape == (2,)


@given(m=st.integers(-3000, 3000), x=st.floats(0.0, 5000.0))
@settings(max_examples=300, deadline=None)
def test_parity(m, x):
    assert bessel_j(-m, x) == (-1) ** (m % 2) * bessel_j(m, x)


@given(x=st.floats(0.1, 3000.0))
@settings(max_examples=60, deadline=None)
def test_sum_rule(x):
    # J_0^2 + 2 sum_{k>=1} J_k^2 = 1
    kmax = int(x + 40 + 10 * x ** (1.0 / 3.0))
    j = bessel_j(np.arange(kmax + 1), np.full(kmax + 1, x))
    total = j[0] ** 2 + 2.0 * np.sum(j[1:] ** 2)
    assert total == pytest.approx(1.0, abs=1e-11)


@given(m=st.integers(1, 4000), x=st.floats(1.0, 4000.0))
@settings(max_examples=300, deadline=None)
def test_three_term_recurrence(m, x):
    jm1, j0, jp1 = bessel_j(np.array([m - 1, m, m + 1]), np.full(3, x))
    scale = envelope(m, x) if m < x else max(abs(jm1), abs(jp1), 1e-300)
    resid = jm1 + jp1 - 2.0 * m / x * j0
    # values near 1e-300 lose digits to subnormal arithmetic in the check itself
    assert abs(resid) <= 1e-11 * scale * max(1.0, 2.0 * m / x) + 1e-295


def test_backends_agree():
    if not specfun._backend.HAVE_NUMBA:
        pytest.skip("numba not installed")
    rng = np.random.default_rng(7)
    m = np.concatenate([rng.integers(-5000, 5000, 4000), rng.integers(0, 100, 2000)])
    x = np.concatenate([rng.uniform(0, 6000, 4000), rng.uniform(0, 100, 2000)])
    a = specfun.jn_array_nb(m, x)
    b = specfun.jn_np(m, x)
    scale = np.maximum(np.abs(a), np.where(np.abs(m) < x, 1.0 / np.sqrt(1.0 + x), 0.0))
    ok = scale > 1e-280
    assert np.all(np.abs(a - b)[ok] <= 1e-11 * scale[ok])
    xs = rng.uniform(0, 50, 2000)
    np.testing.assert_allclose(specfun.erfcx_array_nb(xs), specfun.erfcx_np(xs), rtol=1e-14)


@pytest.mark.parametrize("bad", [-1.0, float("nan"), float("inf")])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        scaled_erfc(bad)
    with pytest.raises(DomainError):
        bessel_j(1, bad)


def test_order_and_argument_limits():
    with pytest.raises(DomainError):
        bessel_j(10**6 + 1, 1.0)
    with pytest.raises(DomainError):
        bessel_j(1, 2e6)
    with pytest.raises(DomainError):
        bessel_j(1.5, 1.0)


def test_accuracy_validation():
    assert Accuracy().rel_tol == 1e-12
    for bad in (0.0, -1e-9, 1e-6, 0.1):
        with pytest.raises(DomainError):
            Accuracy(bad)
    assert math.isclose(Accuracy(1e-9).rel_tol, 1e-9)
