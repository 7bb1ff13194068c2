"""Sweep kernel selection.

The compiled extension is preferred when importable; the numpy module is
the fallback. FEDSVM_BACKEND=python|compiled|auto overrides, and
set_backend() switches at runtime (used by the backend benchmark).
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _sweeps_py
from .errors import InvalidInputError

BACKEND_ENV = "FEDSVM_BACKEND"

_active: ModuleType | None = None


def _load_compiled() -> ModuleType | None:
    try:
        from . import _sweeps  # type: ignore[attr-defined]
        return _sweeps
    except ImportError:
        return None


def _resolve(name: str) -> ModuleType:
    if name == "python":
        return _sweeps_py
    if name == "compiled":
        compiled = _load_compiled()
        if compiled is None:
            raise InvalidInputError(
                "compiled kernels requested but the extension is not built"
            )
        return compiled
    if name == "auto":
        return _load_compiled() or _sweeps_py
    raise InvalidInputError(f"unknown backend {name!r} (use auto, compiled, or python)")


def kernels() -> ModuleType:
    """Active kernel module, resolving it on first use."""
    global _active
    if _active is None:
        _active = _resolve(os.environ.get(BACKEND_ENV, "auto"))
    return _active


def backend_name() -> str:
    return kernels().BACKEND_NAME


def set_backend(name: str) -> str:
    """Force a backend; returns the resulting backend name."""
    global _active
    _active = _resolve(name)
    return _active.BACKEND_NAME


def compiled_available() -> bool:
    return _load_compiled() is not None
