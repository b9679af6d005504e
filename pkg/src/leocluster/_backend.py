"""Kernel backend selection.

Hot numeric kernels are JIT compiled with numba by default.  Setting the
environment variable ``LEOCLUSTER_DISABLE_NUMBA=1`` (before import) switches
the package to a pure numpy path: scalar kernels run as plain Python and the
Monte Carlo / sampling loops dispatch to vectorised numpy twins.  Both
backends are deterministic given a seed; they are statistically equivalent
but not guaranteed bit-identical to each other (libm vs SIMD rounding).
"""

import os

DISABLE_ENV = "LEOCLUSTER_DISABLE_NUMBA"


def _numba_enabled() -> bool:
    flag = os.environ.get(DISABLE_ENV, "").strip().lower()
    if flag in ("1", "true", "yes", "on"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_enabled()
BACKEND = "numba" if NUMBA_ENABLED else "numpy"

if NUMBA_ENABLED:
    from numba import njit as _numba_njit

    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        return _numba_njit(*args, **kwargs)

else:

    def njit(*args, **kwargs):
        # identity decorator: kernels run as plain Python
        if args and callable(args[0]):
            return args[0]

        def deco(func):
            return func

        return deco
