"""Backend switch for the hot loops.

Set ``DISCSCAT_DISABLE_NUMBA=1`` to force the vectorised numpy kernels even
when numba is importable.  The flag is read once at import time; use
:func:`set_backend` to flip it in-process (tests, benchmarks).
"""
import os

try:
    import numba  # noqa: F401
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_TRUTHY = {"1", "true", "yes", "on"}

USE_NUMBA = HAVE_NUMBA and os.environ.get("DISCSCAT_DISABLE_NUMBA", "").strip().lower() not in _TRUTHY


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend name."""
    global USE_NUMBA
    prev = backend()
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        USE_NUMBA = True
    elif name == "numpy":
        USE_NUMBA = False
    else:
        raise ValueError(f"unknown backend {name!r}")
    return prev


def backend():
    return "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        from numba import njit as _njit
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
