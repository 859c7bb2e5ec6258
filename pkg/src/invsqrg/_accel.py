"""Numba acceleration toggle.

The hot numeric kernels (Riccati time stepping, Hamiltonian assembly) are
written once in scalar/loop form and compiled with numba when available.
Setting the environment variable ``INVSQRG_DISABLE_NUMBA=1`` (or numba being
absent) selects the pure-Python/numpy twins instead; results are identical up
to floating-point noise.  ``benchmarks/bench_kernels.py`` compares both paths.
"""

import os

_DISABLE = os.environ.get("INVSQRG_DISABLE_NUMBA", "").strip().lower() in (
    "1", "true", "yes", "on",
)

if not _DISABLE:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        """No-op stand-in for numba.njit when acceleration is off."""
        if args and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap


def maybe_jit(func):
    """Return a jitted version of ``func`` when numba is active, else ``func``."""
    if NUMBA_ENABLED:
        return njit(cache=True)(func)
    return func
