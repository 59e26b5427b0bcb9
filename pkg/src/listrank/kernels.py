"""Backend selection for the SGD kernels.

The compiled ``_core`` extension is used when it imports; otherwise, or when
``LISTRANK_PURE_PYTHON`` is set to a non-empty value, the pure-Python
versions in ``_pykernels`` are used. Both take float64 C-contiguous factor
matrices (updated in place) and int64 index arrays, and return the index of
the first step that produced a non-finite value, or -1.
"""

import os

from . import _pykernels

if os.environ.get("LISTRANK_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

listwise_steps = _impl.listwise_steps
mf_steps = _impl.mf_steps
bpr_steps = _impl.bpr_steps

__all__ = ["BACKEND", "listwise_steps", "mf_steps", "bpr_steps"]
