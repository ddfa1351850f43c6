"""JIT compilation switch.

Hot kernels are written once in nopython-compatible style and compiled with
numba by default.  Setting the environment variable ``FLEETROUTE_PURE=1``
(or any of 1/true/yes) replaces ``njit`` with an identity decorator so the
same source runs as plain NumPy/Python -- slow, but bit-compatible.  The
flag must be set before the first import of :mod:`fleetroute.kernels`.
"""

import os

_PURE_FLAG = os.environ.get("FLEETROUTE_PURE", "").strip().lower()
USE_NUMBA = _PURE_FLAG not in {"1", "true", "yes"}

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

if not USE_NUMBA:
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def decorate(func):
            return func

        return decorate
