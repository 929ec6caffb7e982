"""Select the compiled kernels when available, else the pure-Python fallback.

Set MULOCAL_PURE=1 to force the fallback (used by the benchmark and tests).
"""

from __future__ import annotations

import os

if os.environ.get("MULOCAL_PURE"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

COMPILED = _impl.COMPILED
build_value_table = _impl.build_value_table
accumulate_affine = _impl.accumulate_affine
