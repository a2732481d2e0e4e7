"""Compiled whole-stream kernels for the Monte-Carlo harness.

Each kernel replays the corresponding state machine in online.py /
async_online.py over a full p-value array. Accumulation order matches the
incremental implementations exactly, so a kernel and its state machine
produce bit-identical levels and decisions on the same stream (enforced by
tests). The per-step work is O(#rejections), which is the hot loop at
campaign scale.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .types import AlgorithmConfig


@njit(cache=True)
def addis_stream(p, alpha, w0, lam, tau, gamma):
    m = p.shape[0]
    levels = np.empty(m, np.float64)
    rej = np.zeros(m, np.uint8)
    cand = np.zeros(m, np.uint8)
    sel = np.zeros(m, np.uint8)
    n_now = 0  # selected non-candidates so far
    base = np.empty(m + 1, np.int64)  # n_now frozen at each rejection
    nrej = 0
    for t in range(m):
        total = w0 * gamma[n_now]
        if nrej >= 1:
            total += (alpha - w0) * gamma[n_now - base[0]]
            acc = 0.0
            for j in range(1, nrej):
                acc += gamma[n_now - base[j]]
            total += alpha * acc
        a_t = min(lam, (tau - lam) * total)
        levels[t] = a_t
        pt = p[t]
        s = pt <= tau
        c = pt <= lam
        r = pt <= a_t
        if s:
            sel[t] = 1
            if not c:
                n_now += 1
        if c:
            cand[t] = 1
        if r:
            rej[t] = 1
            base[nrej] = n_now
            nrej += 1
    return levels, rej, cand, sel


@njit(cache=True)
def addis_discard_stream(p, alpha, w0, lam, tau, gamma):
    # Explicit-discard form: identical bookkeeping, rejection tested on p/tau.
    m = p.shape[0]
    levels = np.empty(m, np.float64)
    rej = np.zeros(m, np.uint8)
    cand = np.zeros(m, np.uint8)
    sel = np.zeros(m, np.uint8)
    theta = lam / tau
    n_now = 0
    base = np.empty(m + 1, np.int64)
    nrej = 0
    for t in range(m):
        total = w0 * gamma[n_now]
        if nrej >= 1:
            total += (alpha - w0) * gamma[n_now - base[0]]
            acc = 0.0
            for j in range(1, nrej):
                acc += gamma[n_now - base[j]]
            total += alpha * acc
        levels[t] = min(lam, (tau - lam) * total)
        scaled = min(theta, (1.0 - theta) * total)
        pt = p[t]
        s = pt <= tau
        c = pt <= lam
        r = s and pt / tau <= scaled
        if s:
            sel[t] = 1
            if not c:
                n_now += 1
        if c:
            cand[t] = 1
        if r:
            rej[t] = 1
            base[nrej] = n_now
            nrej += 1
    return levels, rej, cand, sel


@njit(cache=True)
def dlord_stream(p, alpha, w0, tau, gamma):
    m = p.shape[0]
    levels = np.empty(m, np.float64)
    rej = np.zeros(m, np.uint8)
    sel = np.zeros(m, np.uint8)
    s_now = 0
    base = np.empty(m + 1, np.int64)
    nrej = 0
    for t in range(m):
        total = w0 * gamma[s_now]
        if nrej >= 1:
            total += (alpha - w0) * gamma[s_now - base[0]]
            acc = 0.0
            for j in range(1, nrej):
                acc += gamma[s_now - base[j]]
            total += alpha * acc
        a_t = min(tau, tau * total)
        levels[t] = a_t
        pt = p[t]
        if pt <= tau:
            sel[t] = 1
            s_now += 1
        if pt <= a_t:
            rej[t] = 1
            base[nrej] = s_now
            nrej += 1
    return levels, rej, rej, sel


@njit(cache=True)
def lond_stream(p, alpha, gamma):
    m = p.shape[0]
    levels = np.empty(m, np.float64)
    rej = np.zeros(m, np.uint8)
    nrej = 0
    for t in range(m):
        a_t = alpha * gamma[t] * (nrej + 1)
        levels[t] = a_t
        if p[t] <= a_t:
            rej[t] = 1
            nrej += 1
    ones = np.ones(m, np.uint8)
    return levels, rej, rej, ones


@njit(cache=True)
def alpha_investing_stream(p, alpha, w0, gamma):
    m = p.shape[0]
    levels = np.empty(m, np.float64)
    rej = np.zeros(m, np.uint8)
    wealth = w0
    w_at_rej = w0
    k_last = 0  # 1-based time of last rejection, 0 if none
    for t in range(m):
        phi = gamma[t - k_last] * w_at_rej
        a_t = phi / (1.0 + phi)
        levels[t] = a_t
        if p[t] <= a_t:
            rej[t] = 1
            wealth += alpha
            w_at_rej = wealth
            k_last = t + 1
        else:
            wealth -= phi
    ones = np.ones(m, np.uint8)
    return levels, rej, rej, ones


@njit(cache=True)
def async_addis_stream(p, e, alpha, w0, lam, tau, gamma):
    """Levels for the asynchronous rule; e[i] is the finish time of test i+1.

    Finishes at one time step are folded in together after that step's start,
    matching the tie rule (ascending index within a step changes nothing the
    level can see).
    """
    m = p.shape[0]
    levels = np.empty(m, np.float64)
    order = np.argsort(e, kind="mergesort")  # stable: ties resolve by index
    pending = 0
    fin_sel = 0
    fin_cand = 0
    fin_sel_at = np.empty(m, np.int64)
    fin_cand_at = np.empty(m, np.int64)
    nrej = 0
    k = 0
    for t1 in range(1, m + 1):
        s_t = pending + fin_sel
        total = w0 * gamma[s_t - fin_cand]
        if nrej >= 1:
            total += (alpha - w0) * gamma[s_t - fin_sel_at[0] - (fin_cand - fin_cand_at[0])]
            acc = 0.0
            for j in range(1, nrej):
                acc += gamma[s_t - fin_sel_at[j] - (fin_cand - fin_cand_at[j])]
            total += alpha * acc
        levels[t1 - 1] = min(lam, (tau - lam) * total)
        pending += 1
        new_rej = 0
        while k < m and e[order[k]] == t1:
            i = order[k]
            pending -= 1
            if p[i] <= tau:
                fin_sel += 1
            if p[i] <= lam:
                fin_cand += 1
            if p[i] <= levels[i]:
                new_rej += 1
            k += 1
        for _ in range(new_rej):
            fin_sel_at[nrej] = fin_sel
            fin_cand_at[nrej] = fin_cand
            nrej += 1
    return levels


def stream_decisions(kind: str, config: AlgorithmConfig, pvalues: np.ndarray):
    """Run one stream through the named rule; returns (levels, rej, cand, sel)."""
    p = np.ascontiguousarray(pvalues, dtype=np.float64)
    g = config.gamma.values(p.size + 2)
    a, w0 = config.alpha, config.w0
    if kind == "addis":
        return addis_stream(p, a, w0, config.lam, config.tau, g)
    if kind == "addis_discard_form":
        return addis_discard_stream(p, a, w0, config.lam, config.tau, g)
    if kind == "saffron":
        return addis_stream(p, a, w0, config.lam, 1.0, g)
    if kind == "dlord":
        return dlord_stream(p, a, w0, config.tau, g)
    if kind == "lordpp":
        return dlord_stream(p, a, w0, 1.0, g)
    if kind == "lond":
        return lond_stream(p, a, g)
    if kind == "alpha_investing":
        return alpha_investing_stream(p, a, w0, g)
    raise ValueError(f"unknown algorithm kind {kind!r}")


def async_stream_decisions(config: AlgorithmConfig, pvalues: np.ndarray, finish_times: np.ndarray):
    """Asynchronous rule over a resolved schedule; returns (levels, rej, cand, sel)."""
    p = np.ascontiguousarray(pvalues, dtype=np.float64)
    e = np.ascontiguousarray(finish_times, dtype=np.int64)
    g = config.gamma.values(p.size + 2)
    levels = async_addis_stream(p, e, config.alpha, config.w0, config.lam, config.tau, g)
    rej = (p <= levels).astype(np.uint8)
    cand = (p <= config.lam).astype(np.uint8)
    sel = (p <= config.tau).astype(np.uint8)
    return levels, rej, cand, sel
