"""Optional numba acceleration.

Set ``KACLAB_DISABLE_NUMBA=1`` (or run without numba installed) to route every
hot kernel through its vectorized numpy twin instead.
"""
from __future__ import annotations

import os

_TRUTHY = {"1", "true", "yes", "on"}


def numba_disabled_by_env() -> bool:
    return os.environ.get("KACLAB_DISABLE_NUMBA", "").strip().lower() in _TRUTHY


try:
    if numba_disabled_by_env():
        raise ImportError("disabled by KACLAB_DISABLE_NUMBA")
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    _njit = None
    HAVE_NUMBA = False


def optional_njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    if HAVE_NUMBA:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
