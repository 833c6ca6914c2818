"""Hot kernels with a compiled implementation and a pure-Python fallback.

The compiled extension is used when it was built at install time; set
``RXNAUG_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _refine_py

if os.environ.get("RXNAUG_PURE_PYTHON"):
    refine_partition = _refine_py.refine_partition
    BACKEND = "python"
else:
    try:
        from ._refine import refine_partition
        BACKEND = "cython"
    except ImportError:
        refine_partition = _refine_py.refine_partition
        BACKEND = "python"

__all__ = ["refine_partition", "BACKEND"]
