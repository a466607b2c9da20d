"""Schmidt-mode reconstruction of bright twin beams from an SU(1,1) interferometer.

Modules: ``model`` (grids, spectra, Laguerre-Gauss basis), ``su11`` (gain
algebra), ``synth`` (thermal frame synthesis), ``stats`` (slice covariances),
``recon`` (mode spectra and counts), ``fileio``/``config``/``cli`` (I/O).
"""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
