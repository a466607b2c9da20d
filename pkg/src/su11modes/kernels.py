"""Backend selection for the binning and covariance kernels.

The compiled Cython core is used when it was built; setting
``SU11MODES_PURE_PYTHON=1`` forces the NumPy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("SU11MODES_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py

bin_profiles = _impl.bin_profiles
comoment_update = _impl.comoment_update
binned_comoment_update = _impl.binned_comoment_update


def get_backend(name):
    """Kernel module by name, for benchmarks and cross-checks."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
