"""Batch procedures: step-up, its adaptive variant, and adaptive + discarding.

All three are pure functions of the p-value multiset: permuting the input
permutes the rejected index set identically. Returned indices are 1-based
positions in the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BatchResult:
    """Rejections of a batch procedure: the set {i : p_i <= s_hat}."""

    rejected: frozenset[int]
    s_hat: float
    pi0_hat: float | None = None


def _check_pvalues(pvalues) -> np.ndarray:
    p = np.asarray(pvalues, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("p-values must be a flat sequence")
    if p.size and not (np.isfinite(p).all() and p.min() >= 0.0 and p.max() <= 1.0):
        raise ValueError("p-values must lie in [0, 1]")
    return p


def _rejected_at(p: np.ndarray, s: float) -> frozenset[int]:
    return frozenset(int(i) + 1 for i in np.flatnonzero(p <= s))


def bh(pvalues, alpha: float) -> BatchResult:
    """Classic step-up: s_hat = largest p_(k) with p_(k) <= alpha * k / n."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    p = _check_pvalues(pvalues)
    n = p.size
    if n == 0:
        return BatchResult(frozenset(), 0.0)
    p_sorted = np.sort(p)
    ks = np.arange(1, n + 1)
    ok = np.flatnonzero(p_sorted <= alpha * ks / n)
    if ok.size == 0:
        return BatchResult(frozenset(), 0.0)
    s_hat = float(p_sorted[ok[-1]])
    return BatchResult(_rejected_at(p, s_hat), s_hat)


def d_stbh(pvalues, alpha: float, lam: float, tau: float) -> BatchResult:
    """Adaptive step-up with discarding.

    pi0_hat = (1 + #{lambda < p_i <= tau}) / (n (tau - lambda));
    the threshold is the largest s <= lambda among observed p-values (or 0)
    with n * s * pi0_hat / (#{p_j <= s} v 1) <= alpha. The estimated-FDP map
    is linear in s between observed p-values with a fixed denominator, so
    scanning observed values is exact; the search stops at lambda because the
    guarantee is proved only on that range.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not (0.0 <= lam < tau <= 1.0):
        raise ValueError(f"need 0 <= lambda < tau <= 1, got lambda={lam!r}, tau={tau!r}")
    p = _check_pvalues(pvalues)
    n = p.size
    if n == 0:
        return BatchResult(frozenset(), 0.0, None)
    pi0_hat = (1.0 + int(np.count_nonzero((lam < p) & (p <= tau)))) / (n * (tau - lam))
    grid = np.unique(p[p <= lam])
    s_hat = 0.0
    if grid.size:
        n_at = np.searchsorted(np.sort(p), grid, side="right")
        fdp_hat = n * grid * pi0_hat / np.maximum(n_at, 1)
        ok = np.flatnonzero(fdp_hat <= alpha)
        if ok.size:
            s_hat = float(grid[ok[-1]])
    return BatchResult(_rejected_at(p, s_hat), s_hat, pi0_hat)


def storey_bh(pvalues, alpha: float, lam: float) -> BatchResult:
    """Adaptive step-up without discarding: the tau = 1 case of d_stbh."""
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lambda must lie in [0, 1), got {lam!r}")
    return d_stbh(pvalues, alpha, lam, 1.0)


def d_stbh_fdp_hat(pvalues, s: float, lam: float, tau: float) -> float:
    """The estimated-FDP map the threshold search minimizes over."""
    p = _check_pvalues(pvalues)
    n = p.size
    if n == 0:
        return 0.0
    pi0_hat = (1.0 + int(np.count_nonzero((lam < p) & (p <= tau)))) / (n * (tau - lam))
    return n * s * pi0_hat / max(int(np.count_nonzero(p <= s)), 1)
