"""
Optional numba acceleration.

Set ``GTREES_DISABLE_NUMBA=1`` to run every kernel as plain Python on numpy
arrays (slow; useful for debugging and for the benchmark comparison).
"""
from __future__ import annotations

import os

_DISABLED = os.environ.get("GTREES_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def njit(*args, **kw):
    """``numba.njit(cache=True)`` when available, identity otherwise."""
    if HAVE_NUMBA:
        kw.setdefault("cache", True)
        return _numba_njit(*args, **kw)
    if len(args) == 1 and callable(args[0]) and not kw:
        return args[0]
    return lambda f: f


def backend() -> str:
    return "numba" if HAVE_NUMBA else "python"
