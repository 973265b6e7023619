"""Optional numba acceleration.

Set ``IQAE_DISABLE_NUMBA=1`` before import to run every kernel on the
pure Python / numpy path. The flag is read once, at import time.
"""

import os

_DISABLED = os.environ.get("IQAE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is enabled, otherwise a no-op decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def decorator(func):
        return func

    return decorator


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
