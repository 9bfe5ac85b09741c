"""Numerical core: Lindblad right-hand side on block-packed density matrices.

The compiled extension ``_rhs_cy`` is used when it was built; otherwise the
numpy implementation in ``_rhs_py`` is selected. Set ``TMSV_PURE_PYTHON=1``
to force the fallback.
"""
import os

from . import _rhs_py
from .layout import BlockLayout

python_backend = _rhs_py

try:
    from . import _rhs_cy as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if os.environ.get("TMSV_PURE_PYTHON", "") not in ("", "0") or compiled_backend is None:
    default_backend = _rhs_py
else:
    default_backend = compiled_backend

BACKEND = "cython" if default_backend is compiled_backend else "python"


def get_backend(name: str | None = None):
    """``None`` for the import-time default, else ``"python"`` or ``"cython"``."""
    if name is None:
        return default_backend
    if name == "python":
        return _rhs_py
    if name == "cython":
        if compiled_backend is None:
            raise RuntimeError("compiled extension tmsv._core._rhs_cy is not built")
        return compiled_backend
    raise ValueError(f"unknown backend {name!r}")


__all__ = ["BACKEND", "BlockLayout", "compiled_backend", "default_backend", "get_backend", "python_backend"]
