"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``DFSKIT_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("DFSKIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

kron_sum = _impl.kron_sum
expand_traces = _impl.expand_traces
