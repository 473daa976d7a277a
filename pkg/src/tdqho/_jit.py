"""JIT switch.

Hot kernels are written once as plain Python over numpy arrays and
compiled with numba when it is importable.  Setting ``TDQHO_DISABLE_JIT=1``
in the environment keeps the interpreted path, which is what the benchmark
compares against and what to use when debugging a kernel.
"""

import os

_DISABLED = os.environ.get("TDQHO_DISABLE_JIT", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    import numba as _numba
except ImportError:  # pragma: no cover - exercised via the env flag
    _numba = None

JIT_ENABLED = _numba is not None


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if _numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)


def backend_name():
    return "numba" if JIT_ENABLED else "python"
