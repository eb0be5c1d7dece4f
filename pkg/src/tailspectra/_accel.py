"""JIT switch.

Kernels are compiled with numba when it is importable and the environment
variable ``TAILSPECTRA_DISABLE_JIT`` is unset (or ``0``).  Otherwise every
kernel dispatches to its pure-numpy twin.
"""
import os

_flag = os.environ.get("TAILSPECTRA_DISABLE_JIT", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _disabled


def njit(*args, **kwargs):
    """``numba.njit`` with ``cache=True``, or a no-op when numba is missing."""
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def thread_cap():
    """Worker cap from ``TAILSPECTRA_THREADS`` (default: CPU count)."""
    raw = os.environ.get("TAILSPECTRA_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1
