"""Value types shared across the package.

Everything here is an immutable record; stream positions are 1-based
throughout. p = 0 and p = 1 are legal (ties resolve through the <=
comparisons in the decision rules).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .gamma import GammaSequence


@dataclass(frozen=True)
class PValueRecord:
    """One hypothesis in a stream: position, p-value, optional extras."""

    index: int
    p: float
    finish_time: int | None = None
    is_null: bool | None = None

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"index must be a positive integer, got {self.index}")
        if not (isinstance(self.p, (int, float)) and math.isfinite(self.p) and 0.0 <= self.p <= 1.0):
            raise ValueError(f"p must lie in [0, 1], got {self.p!r} (index {self.index})")
        if self.finish_time is not None and self.finish_time < self.index:
            raise ValueError(
                f"finish_time {self.finish_time} precedes start index {self.index}"
            )


@dataclass(frozen=True)
class DecisionRecord:
    """Per-hypothesis outcome: the level used and the three indicators.

    rejected <=> p <= alpha_t, candidate <=> p <= lambda_t,
    selected <=> p <= tau_t; alpha_t <= lambda_t < tau_t forces
    rejected => candidate => selected.
    """

    index: int
    alpha_t: float
    rejected: bool
    candidate: bool
    selected: bool
    lambda_t: float
    tau_t: float

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"index must be a positive integer, got {self.index}")
        if not 0.0 <= self.alpha_t <= 1.0:
            raise ValueError(f"alpha_t must lie in [0, 1], got {self.alpha_t!r}")
        if self.rejected and not self.candidate:
            raise ValueError(f"record {self.index}: rejected implies candidate")
        if self.candidate and not self.selected:
            raise ValueError(f"record {self.index}: candidate implies selected")


@dataclass(frozen=True)
class AlgorithmConfig:
    """Validated parameter point for the online rules.

    alpha is the target FDR; w0 the initial wealth; lambda the candidate
    threshold; tau the discarding threshold. The valid region is
    0 <= lambda < tau <= 1 and 0 < w0 <= alpha.
    """

    alpha: float
    w0: float
    lam: float
    tau: float
    gamma: GammaSequence

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not 0.0 < self.w0 <= self.alpha:
            raise ValueError(f"w0 must lie in (0, alpha], got {self.w0!r}")
        if not 0.0 <= self.lam < 1.0:
            raise ValueError(f"lambda must lie in [0, 1), got {self.lam!r}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau!r}")
        if not self.lam < self.tau:
            raise ValueError(f"need lambda < tau, got lambda={self.lam!r}, tau={self.tau!r}")

    def with_tau_one(self) -> "AlgorithmConfig":
        return self if self.tau == 1.0 else replace(self, tau=1.0)


@dataclass(frozen=True)
class StreamTruth:
    """Ground-truth partition of stream indices (simulation only)."""

    null_set: frozenset[int]
    nonnull_set: frozenset[int]

    def __post_init__(self):
        if self.null_set & self.nonnull_set:
            raise ValueError("null_set and nonnull_set overlap")
        m = len(self.null_set) + len(self.nonnull_set)
        if m and self.null_set | self.nonnull_set != frozenset(range(1, m + 1)):
            raise ValueError("null_set and nonnull_set must partition 1..M")

    @classmethod
    def from_records(cls, records) -> "StreamTruth":
        nulls, nonnulls = set(), set()
        for r in records:
            if r.is_null is None:
                raise ValueError(f"record {r.index} carries no ground-truth label")
            (nulls if r.is_null else nonnulls).add(r.index)
        return cls(frozenset(nulls), frozenset(nonnulls))

    @property
    def size(self) -> int:
        return len(self.null_set) + len(self.nonnull_set)
