"""Hot-loop kernels with a compiled backend and a pure-Python fallback.

The compiled extension ``largesol._ckernels`` is preferred. Setting the
environment variable ``LARGESOL_PURE_PYTHON=1`` before import forces the
fallback, which is also used automatically when the extension was not built.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("LARGESOL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

thomas = _impl.thomas
sturm_count = _impl.sturm_count
wm1_scalar = _impl.wm1_scalar
wm1_array = _impl.wm1_array

__all__ = ["BACKEND", "thomas", "sturm_count", "wm1_scalar", "wm1_array"]
