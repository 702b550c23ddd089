"""Backend selection for the hot kernels.

The compiled extension ``ofdmwin._core`` is used when it imports; otherwise
the numpy fallback in ``ofdmwin._core_py`` is used. Setting the environment
variable ``OFDMWIN_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _core_py

if os.environ.get("OFDMWIN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _core_py
else:
    try:
        from . import _core as _impl
    except ImportError:  # extension not built
        _impl = _core_py

BACKEND = "python" if _impl is _core_py else "cython"

tap_correlation = _impl.tap_correlation
jacobi_eigh = _impl.jacobi_eigh
sos_process = _impl.sos_process
tap_correlation_batch = _impl.tap_correlation_batch
ewma = _impl.ewma
oja_run = _impl.oja_run

__all__ = [
    "BACKEND",
    "tap_correlation",
    "tap_correlation_batch",
    "jacobi_eigh",
    "sos_process",
    "ewma",
    "oja_run",
]
