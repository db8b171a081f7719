"""Kernel backend selection.

The compiled extension is used when importable; otherwise the numpy
fallback. ``BACKEND`` names the active implementation.
"""
from . import _kernels_py

try:
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:  # extension not built
    _impl = _kernels_py
    BACKEND = "python"

unimodular_update = _impl.unimodular_update
block_sum = _impl.block_sum
block_repeat = _impl.block_repeat
ar1_recursion = _impl.ar1_recursion
separable_mm = _impl.separable_mm


def available_backends():
    """Map of backend name to kernel module, for tests and benchmarks."""
    out = {"python": _kernels_py}
    if BACKEND == "cython":
        out["cython"] = _impl
    return out
