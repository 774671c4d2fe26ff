"""Boosting kernel backends.

The compiled Cython kernel is preferred when its extension module built;
otherwise the pure-numpy fallback is used. ``XLABEL_KERNEL=numpy|cython``
forces a backend at import time, and :func:`select` switches at runtime
(used by the benchmark to compare both in one process).
"""
import os

from xlabel.kernels import numpy_backend

_BACKENDS = {"numpy": numpy_backend}
try:
    from xlabel.kernels import _cython_backend
    _BACKENDS["cython"] = _cython_backend
except ImportError:
    _cython_backend = None

_forced = os.environ.get("XLABEL_KERNEL", "").strip().lower()
if _forced and _forced not in _BACKENDS:
    raise ImportError(f"XLABEL_KERNEL={_forced!r} requested but that backend "
                      f"is unavailable (have: {sorted(_BACKENDS)})")

_active = _BACKENDS[_forced] if _forced else _BACKENDS.get("cython", numpy_backend)


def available_backends():
    return sorted(_BACKENDS)


def active_backend():
    """Name of the backend currently serving boost_cycle calls."""
    return _active.NAME


def select(name):
    """Switch the active backend; returns the previously active name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r} (have: {sorted(_BACKENDS)})")
    previous = _active.NAME
    _active = _BACKENDS[name]
    return previous


def boost_cycle(*args, **kwargs):
    return _active.boost_cycle(*args, **kwargs)
