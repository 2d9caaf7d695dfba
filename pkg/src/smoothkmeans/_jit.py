"""Numba switch.

Set ``SMOOTHKMEANS_DISABLE_NUMBA=1`` to force the pure-numpy kernels. The flag
is read once at import time.
"""
from __future__ import annotations

import os

_DISABLED = os.environ.get("SMOOTHKMEANS_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    import numba

    njit = numba.njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA and not _DISABLED
