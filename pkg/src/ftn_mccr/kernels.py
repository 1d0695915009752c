"""Backend selection for the batch rate kernel.

The compiled extension is used when it was built and ``FTN_MCCR_PURE`` is not
set; otherwise the numpy implementation is used. Both expose
``batch_rates(sh2, sp2, N, P, s0, delta, T, mode)``.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py
from ._kernels_py import MODE_CODES

__all__ = ["BACKEND", "MODE_CODES", "batch_rates", "get_backend"]

_python_impl = _kernels_py.batch_rates
_compiled_impl = None
if not os.environ.get("FTN_MCCR_PURE"):
    try:
        from ._kernels import batch_rates as _compiled_impl
    except ImportError:
        _compiled_impl = None

BACKEND = "cython" if _compiled_impl is not None else "python"


def get_backend(name: str | None = None):
    """Return the kernel function for ``name`` (``"cython"``, ``"python"`` or the default)."""
    if name is None:
        name = BACKEND
    if name == "python":
        return _python_impl
    if name == "cython":
        if _compiled_impl is None:
            raise ImportError("the compiled kernel is not available; reinstall with Cython present")
        return _compiled_impl
    raise ValueError(f"unknown backend {name!r}")


def batch_rates(sh2, sp2, N, P, s0, delta, T, mode, backend: str | None = None):
    """Per-trial ``(C_DN, V_DN)``; ``mode`` is an allocation mode name or code."""
    code = MODE_CODES[mode] if isinstance(mode, str) else int(mode)
    fn = get_backend(backend)
    sh2 = np.ascontiguousarray(sh2, dtype=np.float64)
    if sh2.ndim == 1:
        sh2 = sh2[None, :]
    sp2 = np.ascontiguousarray(sp2, dtype=np.float64)
    return fn(sh2, sp2, int(N), float(P), float(s0), float(delta), float(T), code)
