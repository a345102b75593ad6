"""Multi-sensor fusion gesture detection toolkit.

Fuses 14-channel wearable-sensor records, encodes them as invertible
4x4 images, classifies with Chisini-Jensen-Shannon divergence kernels
in an SMO-based SVM, and flags novel observations with one-class
detectors -- all behind a seeded, reproducible evaluation harness.
"""

from .errors import ConfigError, DataError, FusegramError, NumericError

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "FusegramError",
    "NumericError",
    "__version__",
]
