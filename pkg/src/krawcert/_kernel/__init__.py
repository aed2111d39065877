"""Float64 kernel selection.

The compiled kernel is used when its extension module built; the pure-Python
reference implementation is the fallback. Setting KRAWCERT_PURE=1 forces the
pure kernel (useful for debugging and for the parity tests). Both expose the
same functions and are bit-for-bit interchangeable.
"""

import os

if os.environ.get("KRAWCERT_PURE") == "1":
    from . import _pykernel as kernel
else:
    try:
        from . import _cykernel as kernel  # type: ignore[attr-defined]
    except ImportError:
        from . import _pykernel as kernel

from . import _pykernel as pykernel

try:
    from . import _cykernel as cykernel  # type: ignore[attr-defined]
except ImportError:
    cykernel = None

IMPL = kernel.IMPL

__all__ = ["kernel", "pykernel", "cykernel", "IMPL"]
