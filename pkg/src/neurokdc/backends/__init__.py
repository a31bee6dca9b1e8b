"""Hot-loop backend selection.

Two interchangeable implementations of the session loops exist: a numba
JIT backend and a pure-numpy fallback. They are bit-identical in output;
tests enforce it. Selection is controlled by the NEUROKDC_BACKEND
environment variable:

    auto   (default) use the JIT backend if numba imports, else numpy
    numba  require the JIT backend, fail loudly if unavailable
    numpy  force the pure-numpy fallback

The variable is read once, at first use.
"""

from __future__ import annotations

import os
import warnings

BACKEND_ENV = "NEUROKDC_BACKEND"

_active = None


def _load(name: str):
    if name == "numpy":
        from . import _numpy as mod
    else:
        from . import _numba as mod
    return mod


def active_backend():
    """The selected backend module (resolved lazily, cached)."""
    global _active
    if _active is None:
        choice = os.environ.get(BACKEND_ENV, "auto").strip().lower()
        if choice not in ("auto", "numba", "numpy"):
            raise ValueError(
                f"{BACKEND_ENV} must be auto, numba or numpy, got {choice!r}"
            )
        if choice == "numpy":
            _active = _load("numpy")
        elif choice == "numba":
            _active = _load("numba")
        else:
            try:
                _active = _load("numba")
            except ImportError:
                warnings.warn(
                    "numba unavailable, falling back to the pure-numpy "
                    "session loops (slower)"
                )
                _active = _load("numpy")
    return _active


def backend_name() -> str:
    mod = active_backend()
    return "numpy" if mod.__name__.endswith("_numpy") else "numba"


def session_loop(*args):
    return active_backend().session_loop(*args)


def attack_loop(*args):
    return active_backend().attack_loop(*args)
