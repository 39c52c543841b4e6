"""Backend selection for the sweep kernels.

The compiled numba backend is used unless ``LFTM_DISABLE_NUMBA`` is set to a
truthy value (or numba cannot be imported), in which case the pure-numpy
kernels run instead. Both backends expose the same functions.
"""

import os
from types import ModuleType

from . import _numpy as numpy_backend

try:
    from . import _numba as numba_backend
except ImportError:  # pragma: no cover - numba missing
    numba_backend = None

_FALSY = {"", "0", "false", "no", "off"}


def _env_disabled() -> bool:
    return os.environ.get("LFTM_DISABLE_NUMBA", "").strip().lower() not in _FALSY


_active: ModuleType = numpy_backend if (numba_backend is None or _env_disabled()) else numba_backend


def active() -> ModuleType:
    return _active


def backend_name() -> str:
    return "numba" if _active is numba_backend else "numpy"


def set_backend(name: str) -> None:
    """Switch backends at runtime ("numba" or "numpy")."""
    global _active
    if name == "numba":
        if numba_backend is None:
            raise RuntimeError("numba is not available")
        _active = numba_backend
    elif name == "numpy":
        _active = numpy_backend
    else:
        raise ValueError(f"unknown backend {name!r}")
