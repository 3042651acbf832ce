"""Hot kernels: a compiled Cython core with a numpy fallback.

``symext._ext.BACKEND`` names the implementation picked at import time.
Set ``SYMEXT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py as fallback

compiled = None
if os.environ.get("SYMEXT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        compiled = None

if compiled is not None:
    schur_sparse = compiled.schur_sparse
    net_max = compiled.net_max
    BACKEND = "cython"
else:
    schur_sparse = fallback.schur_sparse
    net_max = fallback.net_max
    BACKEND = "python"

__all__ = ["schur_sparse", "net_max", "BACKEND", "compiled", "fallback"]
