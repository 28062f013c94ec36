"""Backend selection for the hot evaluation loops.

The numba backend is used when numba imports cleanly; setting
PRODGAP_DISABLE_NUMBA=1 (or numba being absent) selects the pure-numpy
fallback.  Both backends expose the same functions with identical
semantics; ``benchmarks/bench_backends.py`` compares them.
"""

from __future__ import annotations

import os

_flag = os.environ.get("PRODGAP_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag in {"1", "true", "yes", "on"}

if not _disabled:
    try:
        from . import _kernels_numba as kernels

        BACKEND = "numba"
    except ImportError:
        from . import _kernels_numpy as kernels

        BACKEND = "numpy"
else:
    from . import _kernels_numpy as kernels

    BACKEND = "numpy"

__all__ = ["kernels", "BACKEND"]
