"""Kernel backend selection.

The compiled ``spga._core`` extension is used when it imports; otherwise the
pure-Python ``spga._core_py`` twin is used. Setting ``SPGA_PURE_PYTHON=1``
forces the fallback.
"""

import os

if os.environ.get("SPGA_PURE_PYTHON", "") not in ("", "0"):
    from . import _core_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        from . import _core_py as _impl
        BACKEND = "python"

window_counts = _impl.window_counts
beta_cf = _impl.beta_cf

__all__ = ["BACKEND", "window_counts", "beta_cf"]
