"""Gaussian-means Monte-Carlo harness.

Streams of one-sided p-values Phi(-Z), Z ~ N(mu, 1), where each index is
non-null (mu = mu_alt > 0) with probability pi_alt and null (mu = mu_null
<= 0) otherwise. Normal variates are drawn by inverse-CDF from the seeded
uniform generator, so a run is pinned down by the generator contract plus
the quantile function. Per-trial substreams derive from (master seed, trial
index); results are therefore identical under any execution parallelism,
and extending n_trials never changes earlier trials.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .async_online import fdp_hat_addis_async_series
from .gamma import make_lord_gamma, make_power_gamma
from .normal import normal_cdf_array, normal_quantile_array
from .online import KINDS
from .types import AlgorithmConfig, PValueRecord, StreamTruth

ASYNC_KIND = "addis_async"


class InvariantViolation(RuntimeError):
    """A maintained estimator exceeded the target level during a run."""


@dataclass(frozen=True)
class GaussianModelConfig:
    m: int
    pi_alt: float
    mu_null: float
    mu_alt: float
    seed: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"stream length must be >= 1, got {self.m}")
        if not 0.0 <= self.pi_alt <= 1.0:
            raise ValueError(f"pi_alt must lie in [0, 1], got {self.pi_alt!r}")
        if self.mu_null > 0.0:
            raise ValueError(f"mu_null must be <= 0, got {self.mu_null!r}")
        if self.mu_alt <= 0.0:
            raise ValueError(f"mu_alt must be > 0, got {self.mu_alt!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class AlgorithmSpec:
    """A named (kind, parameter point) entry in a campaign."""

    name: str
    kind: str
    config: AlgorithmConfig

    def __post_init__(self):
        if self.kind not in KINDS and self.kind != ASYNC_KIND:
            raise ValueError(f"unknown algorithm kind {self.kind!r}")


@dataclass(frozen=True)
class MetricRow:
    algorithm: str
    model: GaussianModelConfig
    fdr: float
    fdr_se: float
    power: float | None
    power_se: float | None
    n_trials: int
    power_trials: int
    runtime_s: float


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple[MetricRow, ...] = field(default_factory=tuple)

    def merged(self, other: "ExperimentReport") -> "ExperimentReport":
        return ExperimentReport(self.rows + other.rows)


def trial_generator(master_seed: int, trial: int) -> np.random.Generator:
    """The substream for one trial; independent across trial indices."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, trial])))


def _sample_arrays(model: GaussianModelConfig, trial: int) -> tuple[np.ndarray, np.ndarray]:
    """(p, is_alt) for one trial. Labels first, then z, from one substream."""
    rng = trial_generator(model.seed, trial)
    is_alt = rng.random(model.m) < model.pi_alt
    mu = np.where(is_alt, model.mu_alt, model.mu_null)
    z = mu + normal_quantile_array(rng.random(model.m))
    return normal_cdf_array(-z), is_alt


def _sample_durations(rng: np.random.Generator, m: int) -> np.ndarray:
    return rng.geometric(0.5, m)


def sample_gaussian_stream(model: GaussianModelConfig, trial: int = 0) -> tuple[list[PValueRecord], StreamTruth]:
    """Labelled records for one trial, fully determined by (seed, trial)."""
    p, is_alt = _sample_arrays(model, trial)
    records = [
        PValueRecord(index=i + 1, p=float(p[i]), is_null=not bool(is_alt[i]))
        for i in range(model.m)
    ]
    return records, StreamTruth.from_records(records)


def sample_async_schedule(m: int, seed: int) -> np.ndarray:
    """Finish times E_j = j - 1 + G_j, G_j iid geometric on {1, 2, ...}, P(1) = 0.5."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed])))
    return np.arange(1, m + 1, dtype=np.int64) - 1 + _sample_durations(rng, m)


@dataclass(frozen=True)
class TrialResult:
    fdp: float
    power: float | None
    records: tuple


def run_trial(algorithm, stream: list[PValueRecord], truth: StreamTruth) -> TrialResult:
    """Feed one labelled stream to a fresh state machine and score it."""
    if algorithm.history.t != 1:
        raise ValueError("run_trial needs a fresh algorithm (empty history)")
    if len(stream) != truth.size:
        raise ValueError(f"stream length {len(stream)} != truth size {truth.size}")
    records = algorithm.run([r.p for r in stream])
    rejected = {r.index for r in records if r.rejected}
    false_rej = len(rejected & truth.null_set)
    fdp = false_rej / max(len(rejected), 1)
    n_alt = len(truth.nonnull_set)
    power = len(rejected & truth.nonnull_set) / n_alt if n_alt else None
    return TrialResult(fdp=fdp, power=power, records=tuple(records))


def _invariant_series(kind: str, config: AlgorithmConfig, levels, rej, cand, sel) -> np.ndarray | None:
    denom = np.maximum(np.cumsum(rej.astype(np.int64)), 1)
    if kind in ("addis", "addis_discard_form"):
        terms = levels * (sel & ~cand) / (config.tau - config.lam)
    elif kind == "saffron":
        terms = levels * (1 - cand) / (1.0 - config.lam)
    elif kind == "dlord":
        terms = levels * sel / config.tau
    elif kind == "lordpp":
        terms = levels
    else:
        return None
    return np.cumsum(terms) / denom


def _schedule_generator(master_seed: int, trial: int) -> np.random.Generator:
    """Substream for the finish-time schedule, independent of the p draws."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, trial, 1])))


def _run_spec_arrays(spec: AlgorithmSpec, p: np.ndarray, e: np.ndarray | None, assert_invariant: bool):
    """Rejection indicators for one trial of one algorithm."""
    if spec.kind == ASYNC_KIND:
        if e is None:
            raise ValueError("asynchronous runs need a finish-time schedule")
        levels, rej, cand, sel = _kernels.async_stream_decisions(spec.config, p, e)
        if assert_invariant:
            series = fdp_hat_addis_async_series(levels, p, e, spec.config.lam, spec.config.tau)
            if series.size and series.max() > spec.config.alpha:
                raise InvariantViolation(
                    f"{spec.name}: async estimator reached {series.max():.6g} > {spec.config.alpha}"
                )
    else:
        levels, rej, cand, sel = _kernels.stream_decisions(spec.kind, spec.config, p)
        if assert_invariant:
            series = _invariant_series(spec.kind, spec.config, levels, rej, cand, sel)
            if series is not None and series.size and series.max() > spec.config.alpha:
                raise InvariantViolation(
                    f"{spec.name}: estimator reached {series.max():.6g} > {spec.config.alpha}"
                )
    return rej.astype(bool)


def estimate_metrics(
    model: GaussianModelConfig,
    specs: list[AlgorithmSpec],
    n_trials: int,
    assert_invariant: bool = True,
) -> ExperimentReport:
    """Empirical FDR and power over seeded independent trials.

    All algorithms see the same per-trial stream (paired comparisons). Trials
    where no non-null was drawn contribute no power observation rather than a
    0 or 1, since the power ratio is undefined there.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    for spec in specs:
        if spec.kind in ("addis", "addis_discard_form", "saffron", ASYNC_KIND) and spec.config.lam == 0.0:
            raise ValueError(f"{spec.name}: candidate threshold 0 rejects nothing; refusing to simulate")
    needs_schedule = any(s.kind == ASYNC_KIND for s in specs)
    fdps = {s.name: [] for s in specs}
    powers = {s.name: [] for s in specs}
    t0 = {s.name: 0.0 for s in specs}
    for trial in range(n_trials):
        p, is_alt = _sample_arrays(model, trial)
        e = None
        if needs_schedule:
            idx = np.arange(1, model.m + 1, dtype=np.int64)
            e = idx - 1 + _sample_durations(_schedule_generator(model.seed, trial), model.m)
        n_alt = int(is_alt.sum())
        for spec in specs:
            tic = time.perf_counter()
            rej = _run_spec_arrays(spec, p, e, assert_invariant)
            false_rej = int((rej & ~is_alt).sum())
            fdps[spec.name].append(false_rej / max(int(rej.sum()), 1))
            if n_alt:
                powers[spec.name].append(int((rej & is_alt).sum()) / n_alt)
            t0[spec.name] += time.perf_counter() - tic
    rows = []
    for spec in specs:
        f = np.asarray(fdps[spec.name])
        w = np.asarray(powers[spec.name])
        rows.append(
            MetricRow(
                algorithm=spec.name,
                model=model,
                fdr=float(f.mean()),
                fdr_se=float(f.std(ddof=1) / math.sqrt(f.size)) if f.size > 1 else 0.0,
                power=float(w.mean()) if w.size else None,
                power_se=float(w.std(ddof=1) / math.sqrt(w.size)) if w.size > 1 else None,
                n_trials=n_trials,
                power_trials=int(w.size),
                runtime_s=t0[spec.name],
            )
        )
    return ExperimentReport(tuple(rows))


# ---------------------------------------------------------------------------
# Stopping rules and the stopped-mFDR experiment.
# ---------------------------------------------------------------------------

def stop_at_rejection(k: int):
    """Stop when the k-th rejection lands, else at the end of the stream."""

    def rule(rej: np.ndarray) -> int:
        times = np.flatnonzero(rej) + 1
        return int(times[k - 1]) if times.size >= k else rej.size

    return rule


def stop_at_time(t: int):
    def rule(rej: np.ndarray) -> int:
        return min(t, rej.size)

    return rule


@dataclass(frozen=True)
class StoppingTimeResult:
    mfdr: float
    se: float
    mean_stop_time: float
    n_trials: int


def run_stopping_time_experiment(
    spec: AlgorithmSpec,
    model: GaussianModelConfig,
    rule,
    n_trials: int,
) -> StoppingTimeResult:
    """Estimate mFDR(T_stop) = E V(T) / E (R(T) v 1) over seeded trials.

    The rule maps the rejection indicator sequence to a stopping step; it may
    look only at decisions, so applying it to the completed log is the same
    as stopping the stream live. The standard error is the delta-method SE of
    the ratio of means.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    v_cnt = np.empty(n_trials)
    r_cnt = np.empty(n_trials)
    stops = np.empty(n_trials)
    for trial in range(n_trials):
        p, is_alt = _sample_arrays(model, trial)
        e = None
        if spec.kind == ASYNC_KIND:
            idx = np.arange(1, model.m + 1, dtype=np.int64)
            e = idx - 1 + _sample_durations(_schedule_generator(model.seed, trial), model.m)
        rej = _run_spec_arrays(spec, p, e, assert_invariant=True)
        t_stop = rule(rej)
        head = rej[:t_stop]
        v_cnt[trial] = int((head & ~is_alt[:t_stop]).sum())
        r_cnt[trial] = max(int(head.sum()), 1)
        stops[trial] = t_stop
    v_bar, r_bar = v_cnt.mean(), r_cnt.mean()
    ratio = v_bar / r_bar
    if n_trials > 1:
        cov = np.cov(v_cnt, r_cnt, ddof=1)
        var = (cov[0, 0] - 2 * ratio * cov[0, 1] + ratio**2 * cov[1, 1]) / (r_bar**2 * n_trials)
        se = math.sqrt(max(var, 0.0))
    else:
        se = 0.0
    return StoppingTimeResult(mfdr=float(ratio), se=se, mean_stop_time=float(stops.mean()), n_trials=n_trials)


# ---------------------------------------------------------------------------
# Default parameter points used by the harness and the CLI.
# ---------------------------------------------------------------------------

DEFAULT_PI_GRID = tuple(i / 100 for i in range(1, 10)) + tuple(i / 10 for i in range(1, 10))


def default_spec(name: str, alpha: float = 0.05) -> AlgorithmSpec:
    """The stock parameter point for each rule at target level alpha.

    Adaptive rules spend over the power-1.6 schedule; the non-adaptive pair
    uses the log schedule tuned for Gaussian alternatives. w0 = alpha/2.
    """
    w0 = alpha / 2
    power = make_power_gamma(1.6)
    lord = make_lord_gamma()
    table = {
        "addis": AlgorithmSpec("addis", "addis", AlgorithmConfig(alpha, w0, 0.25, 0.5, power)),
        "addis_discard_form": AlgorithmSpec(
            "addis_discard_form", "addis_discard_form", AlgorithmConfig(alpha, w0, 0.25, 0.5, power)
        ),
        "saffron": AlgorithmSpec("saffron", "saffron", AlgorithmConfig(alpha, w0, 0.5, 1.0, power)),
        "lordpp": AlgorithmSpec("lordpp", "lordpp", AlgorithmConfig(alpha, w0, 0.5, 1.0, lord)),
        "dlord": AlgorithmSpec("dlord", "dlord", AlgorithmConfig(alpha, w0, 0.25, 0.5, lord)),
        "lond": AlgorithmSpec("lond", "lond", AlgorithmConfig(alpha, w0, 0.5, 1.0, lord)),
        "alpha_investing": AlgorithmSpec(
            "alpha_investing", "alpha_investing", AlgorithmConfig(alpha, w0, 0.5, 1.0, power)
        ),
        "addis_async": AlgorithmSpec("addis_async", ASYNC_KIND, AlgorithmConfig(alpha, w0, 0.25, 0.5, power)),
    }
    try:
        return table[name]
    except KeyError:
        raise ValueError(f"unknown algorithm name {name!r}; valid: {', '.join(sorted(table))}") from None


DEFAULT_ALGORITHM_NAMES = ("addis", "saffron", "lordpp", "lond", "alpha_investing")
