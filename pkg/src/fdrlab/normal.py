"""Standard-normal primitives shared by every other module.

Only the standard normal is needed: one-sided p-values are Phi(-Z), the
mixture CDF in the tuning module composes Phi with its inverse, and the
simulation harness draws normal variates by inverse-CDF so that runs are
reproducible from the uniform generator alone.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr, ndtri

_SQRT2 = math.sqrt(2.0)


def std_normal_cdf(z: float) -> float:
    """Phi(z) for a scalar z, via the complementary error function.

    erfc keeps full relative precision in the lower tail, where naive
    1 - Phi(-z) style evaluations lose all significant digits.
    """
    z = float(z)
    if not math.isfinite(z):
        raise ValueError(f"std_normal_cdf requires a finite argument, got {z!r}")
    return 0.5 * math.erfc(-z / _SQRT2)


def std_normal_quantile(u: float) -> float:
    """Inverse of Phi on (0, 1)."""
    u = float(u)
    if not (0.0 < u < 1.0):
        raise ValueError(f"std_normal_quantile requires u in (0, 1), got {u!r}")
    return float(ndtri(u))


def normal_cdf_array(z: np.ndarray) -> np.ndarray:
    """Vectorized Phi for internal hot paths (no finiteness policing)."""
    return ndtr(z)


def normal_quantile_array(u: np.ndarray) -> np.ndarray:
    """Vectorized inverse Phi; maps 0 and 1 to -inf/+inf like ndtri does."""
    return ndtri(u)
