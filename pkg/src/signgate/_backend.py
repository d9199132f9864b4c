"""Kernel backend selection.

The compiled extension is preferred when importable; the pure numpy
kernels are a drop-in replacement.  Set SIGNGATE_PURE_PYTHON=1 to force
the fallback (used by the benchmark and the parity tests).
"""
import os

if os.environ.get("SIGNGATE_PURE_PYTHON"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels_c as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]


def backend_name() -> str:
    """Which kernel implementation is active: 'c' or 'python'."""
    return kernels.BACKEND_NAME
