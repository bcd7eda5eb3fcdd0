"""Backend selection for the hot loops.

The compiled extension is preferred; set ``PURSUITLAB_PURE_PYTHON=1`` to
force the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py

try:
    from . import _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def get_backend(name: str | None = None) -> ModuleType:
    """Return the kernel module for ``"c"`` or ``"python"`` (None = active)."""
    if name is None:
        return _active
    if name == "python":
        return _kernels_py
    if name == "c":
        if _kernels_c is None:
            raise ImportError("pursuitlab._kernels_c is not built")
        return _kernels_c
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    return ["python"] + (["c"] if _kernels_c is not None else [])


if _kernels_c is not None and os.environ.get("PURSUITLAB_PURE_PYTHON", "") not in ("1", "true"):
    _active = _kernels_c
    BACKEND = "c"
else:
    _active = _kernels_py
    BACKEND = "python"


def ar1_filter(innov, rho, x0):
    return _active.ar1_filter(innov, rho, x0)


def dcd_epoch(X, y, alpha, w, qdiag, order, C):
    return _active.dcd_epoch(X, y, alpha, w, qdiag, order, C)
