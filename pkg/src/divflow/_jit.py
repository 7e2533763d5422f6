"""Numba shim.

Hot kernels are decorated with :func:`njit` from this module. When numba is
missing, or ``DIVFLOW_DISABLE_NUMBA`` is set to a truthy value, the decorator
returns the plain Python function instead. Either way the undecorated
function stays reachable as ``kernel.py_func`` so tests and benchmarks can
drive both paths in one process.
"""

import os
import types
import warnings

_FLAG = os.environ.get("DIVFLOW_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - exercised only without numba
    _numba = None
    if not DISABLED:
        warnings.warn("numba not found; falling back to pure Python kernels")

USE_NUMBA = _numba is not None and not DISABLED


def njit(*args, **kwargs):
    """Drop-in for ``numba.njit`` honouring the env switch."""
    if USE_NUMBA:
        return _numba.njit(*args, **kwargs)

    def wrap(func):
        func.py_func = func
        return func

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return wrap(args[0])
    return wrap


def backend_name():
    return "numba" if USE_NUMBA else "python"


_PURE = {}


def pure(kernel):
    """Plain-Python version of ``kernel`` whose calls to other kernels are
    plain Python too (``py_func`` alone would still call compiled helpers)."""
    func = kernel.py_func
    if func not in _PURE:
        scope = dict(func.__globals__)
        for name, value in func.__globals__.items():
            inner = getattr(value, "py_func", None)
            if inner is not None and inner is not func:
                scope[name] = inner
        _PURE[func] = types.FunctionType(func.__code__, scope, func.__name__, func.__defaults__)
    return _PURE[func]
