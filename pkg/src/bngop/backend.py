"""Kernel backend selection: compiled extension if available, numpy otherwise.

Set the environment variable ``BNGOP_FORCE_NUMPY=1`` before import to force
the pure-Python kernels (useful for the backend benchmark and for debugging).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("BNGOP_FORCE_NUMPY"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

HAVE_COMPILED = bool(getattr(_impl, "COMPILED", False))

euler_chunk = _impl.euler_chunk
exact_chunk = _impl.exact_chunk


def get_backend(name: str):
    """Return a kernel module by name ('compiled' or 'numpy')."""
    if name == "numpy":
        return _kernels_py
    if name == "compiled":
        from . import _kernels  # raises ImportError if not built

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
