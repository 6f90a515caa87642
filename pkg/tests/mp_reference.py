"""High-precision reference values used by several test modules."""
import mpmath as mp


def besselj_mp(m, x, dps=40):
    """J_m(x) at high precision.

    mpmath's hypergeometric evaluation stalls for x in the thousands, so for
    large arguments a normalised Miller recurrence is run in mpmath arithmetic.
    """
    with mp.workdps(dps):
        m = int(m)
        sign = -1 if (m < 0 and m % 2 == 1) else 1
        m = abs(m)
        if x < 2000:
            return sign * mp.besselj(m, x)
        x = mp.mpf(x)
        top = max(m, float(x))
        n = int(top + 60 + 20 * top ** (1.0 / 3.0))
        fp1 = mp.mpf(0)
        f = mp.mpf("1e-30")
        sq = mp.mpf(0)
        lin = mp.mpf(0)
        fm = None
        for k in range(n, 0, -1):
            fn = 2 * k / x * f - fp1
            sq += 2 * f * f
            if k % 2 == 0:
                lin += 2 * f
            fp1, f = f, fn
            if k - 1 == m:
                fm = f
        sq += f * f
        lin += f
        val = fm / mp.sqrt(sq)
        return sign * (val if lin > 0 else -val)


def envelope(m, x):
    """Scale against which oscillatory J values are compared: sqrt(J^2 + Y^2)."""
    m = abs(int(m))
    if x == 0:
        return 1.0
    if x < 2000:
        with mp.workdps(30):
            return float(mp.sqrt(mp.besselj(m, x) ** 2 + mp.bessely(m, x) ** 2))
    # Nicholson-type asymptotic of the modulus, adequate as a scale factor
    return (2.0 / (3.141592653589793 * max(abs(x * x - m * m) ** 0.5, x ** (2.0 / 3.0)))) ** 0.5


def erfcx_mp(x, dps=40):
    with mp.workdps(dps):
        x = mp.mpf(x)
        return mp.exp(x * x) * mp.erfc(x)
