"""Numeric backend: compiled core when importable, numpy fallback otherwise.

The compiled extension is optional. Setting NPI_PURE_PYTHON=1 in the
environment forces the numpy path even when the extension is built.
"""

from __future__ import annotations

import os

import numpy as np

_core = None
if not os.environ.get("NPI_PURE_PYTHON"):
    try:
        from . import _core as _core  # type: ignore[no-redef]
    except ImportError:
        _core = None


def backend_name() -> str:
    return "compiled" if _core is not None else "python"


def power_diff_sum_py(w: np.ndarray, ua: np.ndarray, ub: np.ndarray, p: float) -> float:
    """sum_i w_i |ub_i - ua_i|^p, numpy reference implementation."""
    return float(np.sum(w * np.abs(ub - ua) ** p))


def power_sum_py(w: np.ndarray, ua: np.ndarray, p: float) -> float:
    """sum_i w_i |ua_i|^p, numpy reference implementation."""
    return float(np.sum(w * np.abs(ua) ** p))


# integer exponents have typed fast paths; for fractional p the numpy
# vectorized pow is faster than a scalar libm loop (see the benchmark)
_TYPED_EXPONENTS = (1.0, 2.0, 3.0)


def power_diff_sum(w: np.ndarray, ua: np.ndarray, ub: np.ndarray, p: float) -> float:
    if _core is not None and p in _TYPED_EXPONENTS:
        return _core.power_diff_sum(
            np.ascontiguousarray(w, dtype=np.float64),
            np.ascontiguousarray(ua, dtype=np.float64),
            np.ascontiguousarray(ub, dtype=np.float64),
            float(p),
        )
    return power_diff_sum_py(w, ua, ub, p)


def power_sum(w: np.ndarray, ua: np.ndarray, p: float) -> float:
    if _core is not None and p in _TYPED_EXPONENTS:
        return _core.power_sum(
            np.ascontiguousarray(w, dtype=np.float64),
            np.ascontiguousarray(ua, dtype=np.float64),
            float(p),
        )
    return power_sum_py(w, ua, p)
