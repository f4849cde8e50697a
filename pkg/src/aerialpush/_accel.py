"""JIT selection for the numeric kernels.

Kernels are written once in a numba-compatible subset of Python/numpy.
When numba is importable and ``AERIALPUSH_DISABLE_NUMBA`` is unset (or "0"),
they are compiled with ``numba.njit``; otherwise the very same functions run
as plain Python on numpy arrays.  The flag is read once at import time.
"""

import os

_flag = os.environ.get("AERIALPUSH_DISABLE_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False

BACKEND = "numba" if HAS_NUMBA else "numpy"


def jit(fn=None, **kwargs):
    """``numba.njit`` with ``cache`` and ``nogil`` on, or a no-op."""
    if not HAS_NUMBA:
        return fn if fn is not None else (lambda f: f)
    opts = {"cache": True, "nogil": True}
    opts.update(kwargs)
    if fn is None:
        return lambda f: numba.njit(**opts)(f)
    return numba.njit(**opts)(fn)
