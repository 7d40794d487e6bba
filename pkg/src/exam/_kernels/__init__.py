"""Kernel backend selection.

The compiled Cython extension covers the loop-bound hot spots (region
window max-pool and embedding-row scatter-add). When it is missing, or
``EXAM_PURE_PYTHON`` is set to a non-empty value, the pure-numpy fallback
is used instead. Both expose the identical function contracts.
"""

import os

from . import _numpy_ops

BACKEND = "numpy"
_impl = _numpy_ops

if not os.environ.get("EXAM_PURE_PYTHON"):
    try:
        from . import _fastops as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

scatter_add_rows = _impl.scatter_add_rows
region_pool_forward = _impl.region_pool_forward
region_pool_backward = _impl.region_pool_backward
