"""Spending-weight sequences: nonnegative, nonincreasing, unit sum.

Two families are supported:

* ``power(s)``:   gamma_j  proportional to  (j+1)^-s,  s > 1
* ``lord_gaussian``: gamma_j  proportional to  log(max(j+1, 2)) / ((j+1) * exp(sqrt(log(j+1))))

Weights are normalized analytically (partial sum plus a closed-form tail),
not by truncating at some horizon, so the infinite sum is 1 to ~1e-12 no
matter how many terms a stream ends up consuming.
"""

from __future__ import annotations

import math
import threading

import numpy as np

_NORMALIZER_TERMS = 1_000_000


def _power_terms(start: int, stop: int, s: float) -> np.ndarray:
    n = np.arange(start + 1, stop + 1, dtype=np.float64)
    return n ** (-s)


def _lord_terms(start: int, stop: int) -> np.ndarray:
    n = np.arange(start + 1, stop + 1, dtype=np.float64)
    return np.log(np.maximum(n, 2.0)) / (n * np.exp(np.sqrt(np.log(n))))


def _power_tail(k: int, s: float) -> float:
    # Euler-Maclaurin for sum_{n > k} n^-s: integral + half endpoint - s/12 slope.
    # Remainder is O(k^-(s+3)), far below 1e-12 for k ~ 1e6 and any s > 1.
    x = float(k) + 1.0
    return x ** (1.0 - s) / (s - 1.0) + 0.5 * x ** (-s) - (s / 12.0) * x ** (-s - 1.0)


def _lord_tail_integral(x: float) -> float:
    # int_x^inf log(t)/(t e^sqrt(log t)) dt = 2 e^-v (v^3 + 3v^2 + 6v + 6), v = sqrt(log x)
    v = math.sqrt(math.log(x))
    return 2.0 * math.exp(-v) * (v**3 + 3.0 * v**2 + 6.0 * v + 6.0)


def _lord_tail(k: int) -> float:
    # Midpoint-rule tail for sum_{n > k}; remainder ~ |f'(k)|/24, ~1e-14 at k = 1e6.
    return _lord_tail_integral(float(k) + 0.5)


class GammaSequence:
    """Lazily extended weight sequence gamma_0, gamma_1, ...

    Instances may be shared across threads: the value cache only ever grows,
    guarded by a lock, and previously returned values never change.
    """

    def __init__(self, kind: str, exponent: float | None = None):
        if kind == "power":
            if exponent is None or not exponent > 1.0:
                raise ValueError(f"power weights need an exponent > 1, got {exponent!r}")
            self.kind = kind
            self.exponent = float(exponent)
            self._terms = lambda a, b: _power_terms(a, b, self.exponent)
            tail = _power_tail(_NORMALIZER_TERMS, self.exponent)
        elif kind == "lord_gaussian":
            if exponent is not None:
                raise ValueError("lord_gaussian weights take no exponent")
            self.kind = kind
            self.exponent = None
            self._terms = _lord_terms
            tail = _lord_tail(_NORMALIZER_TERMS)
        else:
            raise ValueError(f"unknown gamma kind {kind!r}")
        head = self._terms(0, _NORMALIZER_TERMS)
        self.normalizer = float(math.fsum([head[i : i + 100_000].sum() for i in range(0, head.size, 100_000)]) + tail)
        self._cache = head[:4096] / self.normalizer
        self._lock = threading.Lock()

    def _grow(self, n: int) -> None:
        with self._lock:
            have = self._cache.size
            if have >= n:
                return
            want = max(n, 2 * have)
            extra = self._terms(have, want) / self.normalizer
            self._cache = np.concatenate([self._cache, extra])

    def value(self, j: int) -> float:
        """gamma_j (j >= 0)."""
        if j < 0:
            raise ValueError(f"gamma index must be >= 0, got {j}")
        if j >= self._cache.size:
            self._grow(j + 1)
        return float(self._cache[j])

    def values(self, n: int) -> np.ndarray:
        """Read-only array of gamma_0 .. gamma_{n-1}."""
        if n > self._cache.size:
            self._grow(n)
        out = self._cache[:n]
        out.flags.writeable = False
        return out

    def tail_sum_bracket(self, n: int) -> tuple[float, float]:
        """Riemann bounds [lo, hi] on sum_{j >= n} gamma_j (for sum audits)."""
        if self.kind == "power":
            s = self.exponent
            lo = (n + 1.0) ** (1.0 - s) / (s - 1.0)
            hi = float(n) ** (1.0 - s) / (s - 1.0)
        else:
            lo = _lord_tail_integral(n + 1.0)
            hi = _lord_tail_integral(float(n))
        return lo / self.normalizer, hi / self.normalizer

    def describe(self) -> str:
        return f"power:{self.exponent:g}" if self.kind == "power" else "lord"

    def __repr__(self) -> str:
        return f"GammaSequence({self.describe()!r})"


def make_power_gamma(s: float) -> GammaSequence:
    """Weights gamma_j = (j+1)^-s / Z, requiring s > 1 for convergence."""
    return GammaSequence("power", exponent=s)


def make_lord_gamma() -> GammaSequence:
    """The log-over-exp-sqrt-log schedule tuned for Gaussian alternatives."""
    return GammaSequence("lord_gaussian")


def parse_gamma(text: str) -> GammaSequence:
    """Parse a CLI-style descriptor: ``power:1.6`` or ``lord``."""
    if text == "lord":
        return make_lord_gamma()
    if text.startswith("power:"):
        try:
            s = float(text.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad gamma exponent in {text!r}") from None
        return make_power_gamma(s)
    raise ValueError(f"unknown gamma descriptor {text!r} (expected 'power:<s>' or 'lord')")
