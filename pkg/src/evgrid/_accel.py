"""Optional numba acceleration.

Kernels are written once as plain numpy/python functions and wrapped with
:func:`kernel`. When numba is importable and ``EVGRID_DISABLE_NUMBA`` is not
set, the compiled version is used; otherwise the python original runs.
Both are always reachable through :func:`pick` so tests can compare them.
"""

import os

try:
    import numba
    import numba.extending
except ImportError:  # pragma: no cover - numba is optional
    numba = None

ENV_FLAG = "EVGRID_DISABLE_NUMBA"


def _flag_set():
    return os.environ.get(ENV_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _flag_set()


class Kernel:
    """A python function with a lazily compiled numba twin."""

    def __init__(self, fn):
        self.py_func = fn
        self.__name__ = fn.__name__
        self.__doc__ = fn.__doc__
        self._jit = None

    @property
    def jit(self):
        if self._jit is None:
            if not HAVE_NUMBA:
                return self.py_func
            self._jit = numba.njit(cache=True, nogil=True)(self.py_func)
        return self._jit

    def __call__(self, *args):
        return (self.jit if USE_NUMBA else self.py_func)(*args)


def kernel(fn):
    return Kernel(fn)


def helper(fn):
    """Mark a scalar helper as callable from both python and compiled kernels."""
    if HAVE_NUMBA:
        return numba.extending.register_jitable(fn)
    return fn


def pick(k, use_numba=None):
    """Return the concrete callable for ``k`` on the requested backend."""
    if use_numba is None:
        use_numba = USE_NUMBA
    return k.jit if (use_numba and HAVE_NUMBA) else k.py_func
