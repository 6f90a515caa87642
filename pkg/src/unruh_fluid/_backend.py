"""Kernel backend selection.

Hot loops are written twice: scalar kernels compiled with numba, and
vectorised numpy twins.  ``UNRUH_FLUID_NUMBA=0`` (or a missing numba)
routes the public API through the numpy path.  Both paths are always
importable so they can be checked against each other.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

ENV_FLAG = "UNRUH_FLUID_NUMBA"

HAVE_NUMBA = numba is not None


def _flag_enabled(value):
    return value.strip().lower() not in {"0", "false", "no", "off", "numpy"}


USE_NUMBA = HAVE_NUMBA and _flag_enabled(os.environ.get(ENV_FLAG, "1"))


def njit(func=None, **kwargs):
    """``numba.njit(cache=True, nogil=True)``, or a no-op without numba."""
    if numba is None:
        if callable(func):
            return func
        return lambda f: f
    opts = {"cache": True, "nogil": True}
    opts.update(kwargs)
    if callable(func):
        return numba.njit(**opts)(func)
    return numba.njit(**opts)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
