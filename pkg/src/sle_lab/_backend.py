"""Select the compiled kernels, falling back to the numpy port."""
import os

BACKEND = "python"
if os.environ.get("SLE_LAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _kernels_py as kernels
else:
    from . import _kernels_py as kernels

from . import _kernels_py as py_kernels  # noqa: E402

__all__ = ["kernels", "py_kernels", "BACKEND"]
