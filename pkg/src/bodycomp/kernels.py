"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting
``BODYCOMP_PURE_PYTHON=1`` forces the numpy fallback.  Both backends are
bit-identical, so the choice only affects speed.
"""

import os

from . import _kernels_py

_NAMES = (
    "im2col",
    "col2im",
    "maxpool2_forward",
    "maxpool2_backward",
    "resize_bilinear",
    "rotate_bilinear",
    "split_scan",
)


def _load():
    if os.environ.get("BODYCOMP_PURE_PYTHON", "") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from . import _kernels
    except ImportError:
        return _kernels_py, "python"
    return _kernels, "cython"


_impl, BACKEND = _load()


def backend_module(name):
    """Return the kernel module for ``name`` ('cython' or 'python')."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


im2col = _impl.im2col
col2im = _impl.col2im
maxpool2_forward = _impl.maxpool2_forward
maxpool2_backward = _impl.maxpool2_backward
resize_bilinear = _impl.resize_bilinear
rotate_bilinear = _impl.rotate_bilinear
split_scan = _impl.split_scan

__all__ = ["BACKEND", "backend_module", *_NAMES]
