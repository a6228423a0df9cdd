"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise (or when the
environment variable ``RASHOMON_DETECT_PURE`` is set to a non-empty value
other than ``0``) the numpy fallback is used. Both are bit-identical.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py


def _load() -> tuple[ModuleType, str]:
    if os.environ.get("RASHOMON_DETECT_PURE", "") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return _kernels_py, "python"
    return _kernels, "cython"


_impl, BACKEND = _load()


def use_backend(name: str) -> None:
    """Switch backend at runtime (``"cython"`` or ``"python"``); used by benchmarks and tests."""
    global _impl, BACKEND
    if name == "python":
        _impl, BACKEND = _kernels_py, "python"
    elif name == "cython":
        from . import _kernels  # type: ignore[attr-defined]

        _impl, BACKEND = _kernels, "cython"
    else:
        raise ValueError(f"unknown backend {name!r}")


def compiled_available() -> bool:
    try:
        from . import _kernels  # type: ignore[attr-defined]  # noqa: F401
    except ImportError:
        return False
    return True


def ensemble_sum(feature, threshold, is_cat, cat_mask, left, right, value, roots, X, scale, init):
    return _impl.ensemble_sum(feature, threshold, is_cat, cat_mask, left, right, value, roots, X, scale, init)


def best_split(Xn, y, w, min_leaf):
    return _impl.best_split(Xn, y, w, min_leaf)
