"""Kernel backend selection.

The compiled extension is used when it imports; set ``TRANSFERLIN_PURE_PYTHON=1``
to force the numpy fallback.
"""
import os

from . import _pykernels

if os.environ.get("TRANSFERLIN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

sgd_epoch = _impl.sgd_epoch
smd_epoch = _impl.smd_epoch
QUADRATIC = 0
HYPERBOLIC = 1

__all__ = ["BACKEND", "sgd_epoch", "smd_epoch", "QUADRATIC", "HYPERBOLIC", "_pykernels"]
