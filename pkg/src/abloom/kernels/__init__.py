"""Backend selection for the hot loops (hashing, digests, counter updates).

Two interchangeable implementations exist: a numba njit backend and a pure
numpy one.  They produce bit-identical results; the numpy path exists for
environments where numba is unavailable or JIT warmup is unwanted.

Selection order:

* ``ABLOOM_BACKEND=numba`` or ``ABLOOM_BACKEND=numpy`` forces a backend
  (forcing numba when it cannot be imported is an error);
* otherwise numba is used when importable, with a silent fall back to numpy.

``set_backend`` overrides the choice at runtime (used by tests and the
benchmark script).
"""

from __future__ import annotations

import os
import types

_ENV_VAR = "ABLOOM_BACKEND"
_BACKENDS = ("numba", "numpy")

_active: types.ModuleType | None = None


def _load(name: str) -> types.ModuleType:
    if name == "numpy":
        from . import numpy_impl
        return numpy_impl
    if name == "numba":
        from . import numba_impl
        return numba_impl
    raise ValueError(f"unknown backend {name!r}; expected one of {_BACKENDS}")


def _resolve() -> types.ModuleType:
    forced = os.environ.get(_ENV_VAR)
    if forced is not None:
        forced = forced.strip().lower()
        if forced not in _BACKENDS:
            raise ValueError(
                f"{_ENV_VAR}={forced!r} not recognized; expected one of {_BACKENDS}")
        return _load(forced)
    try:
        return _load("numba")
    except ImportError:
        return _load("numpy")


def get_kernels() -> types.ModuleType:
    """Return the active backend module, resolving it on first use."""
    global _active
    if _active is None:
        _active = _resolve()
    return _active


def set_backend(name: str) -> types.ModuleType:
    """Force a backend by name ("numba" or "numpy") and return it."""
    global _active
    _active = _load(name)
    return _active


def backend_name() -> str:
    return get_kernels().name
