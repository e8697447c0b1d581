"""Pick the compiled kernels when available, the numpy ones otherwise.

Set ``FRACTHRESH_PURE_PYTHON=1`` to force the numpy implementations.
"""
import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("FRACTHRESH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

marching_squares = _impl.marching_squares
directed_hausdorff = _impl.directed_hausdorff

__all__ = ["BACKEND", "marching_squares", "directed_hausdorff"]
