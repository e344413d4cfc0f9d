"""Kernel backend selection.

The compiled extension is used when importable; set ``QGDSIM_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from . import _pykernels

if os.environ.get("QGDSIM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "numpy"

apply_pauli_sum = _impl.apply_pauli_sum
expectation_pauli_sum = _impl.expectation_pauli_sum

__all__ = ["BACKEND", "apply_pauli_sum", "expectation_pauli_sum"]
