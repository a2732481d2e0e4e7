"""Asynchronous adaptive discarding: levels assigned at start times.

Tests start at times 1, 2, 3, ... and finish at integer times E_i >= i. The
level for the test starting at t may use only tests that finished strictly
before t; every test still in flight is counted as if it were selected
("pessimism"), so pending mass can only release budget once it resolves.

The state machine is logically single-threaded: callers serialize start and
finish events. Determinism depends only on (start order, finish times,
p-values), not on how the calls are batched, because every counter is
recomputed from the recorded data.
"""

from __future__ import annotations

import math

import numpy as np

from .types import AlgorithmConfig, DecisionRecord, PValueRecord


class AsyncAddis:
    """Asynchronous adaptive-discarding state machine for one stream."""

    def __init__(self, config: AlgorithmConfig):
        self.config = config
        self.levels: list[float] = []          # alpha_i assigned at start, index i-1
        self.pvalues: dict[int, float] = {}    # finished tests only
        self.finish_times: dict[int, int] = {}

    @property
    def started_count(self) -> int:
        return len(self.levels)

    def start_test(self, t: int) -> float:
        """Assign and record the level for the test starting at time t."""
        if t != self.started_count + 1:
            raise ValueError(f"out-of-order start: expected {self.started_count + 1}, got {t}")
        alpha_t = self._level_at(t)
        self.levels.append(alpha_t)
        return alpha_t

    def finish_test(self, index: int, p: float, finish_time: int) -> DecisionRecord:
        """Record the p-value of a started test at its finish time."""
        if not (1 <= index <= self.started_count):
            raise RuntimeError(f"test {index} was never started")
        if index in self.pvalues:
            raise RuntimeError(f"test {index} already finished")
        if not (isinstance(p, (int, float)) and math.isfinite(p) and 0.0 <= p <= 1.0):
            raise ValueError(f"p must lie in [0, 1], got {p!r}")
        if finish_time < index:
            raise ValueError(f"finish_time {finish_time} precedes start time {index}")
        if finish_time < self.started_count:
            raise RuntimeError(
                f"test {index} reports finish_time {finish_time}, but levels through "
                f"{self.started_count} were already assigned without it"
            )
        self.pvalues[index] = float(p)
        self.finish_times[index] = int(finish_time)
        cfg = self.config
        alpha_i = self.levels[index - 1]
        return DecisionRecord(
            index=index,
            alpha_t=alpha_i,
            rejected=p <= alpha_i,
            candidate=p <= cfg.lam,
            selected=p <= cfg.tau,
            lambda_t=cfg.lam,
            tau_t=cfg.tau,
        )

    def _level_at(self, t: int) -> float:
        cfg = self.config
        gam = cfg.gamma
        pending = 0
        fin_e, fin_p, fin_lev = [], [], []
        for i in range(1, t):
            e = self.finish_times.get(i)
            if e is None or e >= t:
                pending += 1
            else:
                fin_e.append(e)
                fin_p.append(self.pvalues[i])
                fin_lev.append(self.levels[i - 1])
        e = np.asarray(fin_e, dtype=np.int64)
        p = np.asarray(fin_p, dtype=np.float64)
        lev = np.asarray(fin_lev, dtype=np.float64)
        sel_e = np.sort(e[p <= cfg.tau])
        cand_e = np.sort(e[p <= cfg.lam])
        kappas = np.sort(e[p <= lev])  # j-th rejection's finish time; ties share a value
        s_t = pending + sel_e.size
        fin_cand = cand_e.size

        def deficit(kappa: int) -> int:
            sel_by = int(np.searchsorted(sel_e, kappa, side="right"))
            cand_after = fin_cand - int(np.searchsorted(cand_e, kappa, side="right"))
            return s_t - sel_by - cand_after

        total = cfg.w0 * gam.value(s_t - fin_cand)
        if kappas.size:
            total += (cfg.alpha - cfg.w0) * gam.value(deficit(int(kappas[0])))
            acc = 0.0
            for kappa in kappas[1:]:
                acc += gam.value(deficit(int(kappa)))
            total += cfg.alpha * acc
        return min(cfg.lam, (cfg.tau - cfg.lam) * total)

    def fdp_hat(self, t: int) -> float:
        """Estimator at time t from the data recorded so far.

        Tests without a recorded finish are treated as pending at every t;
        evaluate after the schedule has fully resolved for exact values.
        """
        cfg = self.config
        numer = 0.0
        denom = 0
        for j in range(1, min(t, self.started_count) + 1):
            e = self.finish_times.get(j)
            alpha_j = self.levels[j - 1]
            if e is None or e >= t:
                numer += alpha_j / (cfg.tau - cfg.lam)
            else:
                p = self.pvalues[j]
                if cfg.lam < p <= cfg.tau:
                    numer += alpha_j / (cfg.tau - cfg.lam)
                if p <= alpha_j:
                    denom += 1
        return numer / max(denom, 1)


def fdp_hat_addis_async(state: AsyncAddis, t: int) -> float:
    return state.fdp_hat(t)


def run_schedule(config: AlgorithmConfig, records: list[PValueRecord]) -> tuple[list[DecisionRecord], AsyncAddis]:
    """Drive a full schedule: start in index order, finish at the recorded times.

    Records must carry finish_time; indices must be contiguous from 1.
    Finish ties at one time step resolve in ascending test index. Returns the
    decisions sorted by test index plus the resolved state machine.
    """
    for pos, r in enumerate(records, start=1):
        if r.index != pos:
            raise ValueError(f"stream indices must be contiguous from 1; found {r.index} at position {pos}")
        if r.finish_time is None:
            raise ValueError(f"record {r.index} has no finish_time")
    machine = AsyncAddis(config)
    finish_order = sorted(records, key=lambda r: (r.finish_time, r.index))
    decisions: list[DecisionRecord] = []
    k = 0
    for t in range(1, len(records) + 1):
        machine.start_test(t)
        while k < len(finish_order) and finish_order[k].finish_time == t:
            r = finish_order[k]
            decisions.append(machine.finish_test(r.index, r.p, r.finish_time))
            k += 1
    while k < len(finish_order):
        r = finish_order[k]
        decisions.append(machine.finish_test(r.index, r.p, r.finish_time))
        k += 1
    decisions.sort(key=lambda d: d.index)
    return decisions, machine


def fdp_hat_addis_async_series(levels, pvalues, finish_times, lam: float, tau: float) -> np.ndarray:
    """Exact estimator series over t = 1 .. max(E)+1 for a resolved schedule.

    Contributions switch at known times, so the series is two prefix sums
    over difference arrays: test j is pending for t in [j, E_j] and resolved
    after that.
    """
    alpha = np.asarray(levels, dtype=np.float64)
    p = np.asarray(pvalues, dtype=np.float64)
    e = np.asarray(finish_times, dtype=np.int64)
    m = alpha.size
    if m == 0:
        return np.zeros(0)
    t_max = int(e.max()) + 1
    d_num = np.zeros(t_max + 2)
    d_den = np.zeros(t_max + 2, dtype=np.int64)
    pend = alpha / (tau - lam)
    resolved = np.where((lam < p) & (p <= tau), pend, 0.0)
    rej = p <= alpha
    idx = np.arange(1, m + 1)
    np.add.at(d_num, idx, pend)
    np.add.at(d_num, e + 1, resolved - pend)
    np.add.at(d_den, e[rej] + 1, 1)
    numer = np.cumsum(d_num)[1 : t_max + 1]
    denom = np.maximum(np.cumsum(d_den)[1 : t_max + 1], 1)
    return numer / denom
