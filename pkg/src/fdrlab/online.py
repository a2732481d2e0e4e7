"""Online FDR state machines and the serial FDP estimators they maintain.

Seven rules share one observe() loop:

* ``addis``              adaptive + discarding, direct form
* ``addis_discard_form`` the same rule with an explicit discard branch and a
                         rescaled rejection test (identical decision logs)
* ``dlord``              discarding without adaptivity
* ``saffron``            addis with tau forced to 1 (no discarding)
* ``lordpp``             dlord with tau forced to 1
* ``lond``               rejection-count-scaled spending baseline
* ``alpha_investing``    wealth-spending baseline

All levels are deterministic functions of (kind, config, history): replaying
a decision log reproduces the same levels bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .normal import normal_cdf_array, normal_quantile_array
from .types import AlgorithmConfig, DecisionRecord

KINDS = (
    "addis",
    "addis_discard_form",
    "dlord",
    "saffron",
    "lordpp",
    "lond",
    "alpha_investing",
)


class OnlineHistory:
    """Decision records for steps 1..t-1 plus the running counters.

    Counters carried incrementally (O(1) per step):

    * ``selected_count``   S^t   = #{i < t : selected}
    * ``candidate_count``          #{i < t : candidate}
    * ``rejection_times``  kappa_1 < kappa_2 < ...  (kappa_0 := 0)
    * per rejection j: selected/candidate counts up to and including kappa_j,
      from which kappa_j^* and C_{j+} are derived.
    """

    def __init__(self):
        self.records: list[DecisionRecord] = []
        self.rejection_times: list[int] = []
        self.selected_count = 0
        self.candidate_count = 0
        self._sel_at_rej: list[int] = []
        self._cand_at_rej: list[int] = []

    @property
    def t(self) -> int:
        """Index of the next step (1-based)."""
        return len(self.records) + 1

    @property
    def rejection_count(self) -> int:
        return len(self.rejection_times)

    def kappa_star(self, j: int) -> int:
        """kappa_j^* = #{i <= kappa_j : selected}, j >= 1."""
        return self._sel_at_rej[j - 1]

    def c_plus(self, j: int) -> int:
        """C_{j+} = #{kappa_j < i <= t-1 : candidate}; kappa_0 = 0."""
        if j == 0:
            return self.candidate_count
        return self.candidate_count - self._cand_at_rej[j - 1]

    def append(self, rec: DecisionRecord) -> None:
        if rec.index != self.t:
            raise ValueError(f"expected record for step {self.t}, got {rec.index}")
        self.records.append(rec)
        if rec.selected:
            self.selected_count += 1
        if rec.candidate:
            self.candidate_count += 1
        if rec.rejected:
            self.rejection_times.append(rec.index)
            self._sel_at_rej.append(self.selected_count)
            self._cand_at_rej.append(self.candidate_count)

    @classmethod
    def from_indicators(cls, triples) -> "OnlineHistory":
        """Build a history from raw (rejected, candidate, selected) triples."""
        h = cls()
        for i, (r, c, s) in enumerate(triples, start=1):
            h.append(
                DecisionRecord(
                    index=i, alpha_t=0.0, rejected=bool(r), candidate=bool(c),
                    selected=bool(s), lambda_t=0.0, tau_t=1.0,
                )
            )
        return h

    def verify_counters(self) -> None:
        """Recompute every counter from the raw records; raise on mismatch."""
        sel = [r.selected for r in self.records]
        cand = [r.candidate for r in self.records]
        rej_times = [r.index for r in self.records if r.rejected]
        ok = (
            self.selected_count == sum(sel)
            and self.candidate_count == sum(cand)
            and self.rejection_times == rej_times
            and self._sel_at_rej == [sum(sel[:k]) for k in rej_times]
            and self._cand_at_rej == [sum(cand[:k]) for k in rej_times]
        )
        if not ok:
            raise RuntimeError("online history counters diverged from the record log")


def _weighted_gamma_sum(history: OnlineHistory, config: AlgorithmConfig, discounted: bool) -> float:
    """W0 g[d0] + (alpha-W0) g[d1] + alpha * sum_{j>=2} g[dj].

    With ``discounted`` the subscripts count selected non-candidates since
    each rejection (the adaptive rules); otherwise they count all selected
    steps (the non-adaptive discarding rule). Terms for rejections that have
    not happened are absent. Accumulation order is fixed so that the batch
    kernels can reproduce these floats exactly.
    """
    g = config.gamma
    if discounted:
        now = history.selected_count - history.candidate_count
        at_rej = [s - c for s, c in zip(history._sel_at_rej, history._cand_at_rej)]
    else:
        now = history.selected_count
        at_rej = history._sel_at_rej
    total = config.w0 * g.value(now)
    if at_rej:
        total += (config.alpha - config.w0) * g.value(now - at_rej[0])
        acc = 0.0
        for base in at_rej[1:]:
            acc += g.value(now - base)
        total += config.alpha * acc
    return total


def addis_next_level(history: OnlineHistory, config: AlgorithmConfig) -> float:
    """alpha_t = min(lambda, (tau - lambda) * weighted gamma sum)."""
    return min(config.lam, (config.tau - config.lam) * _weighted_gamma_sum(history, config, discounted=True))


def addis_discard_form_next(history: OnlineHistory, config: AlgorithmConfig, p: float) -> tuple[bool, float]:
    """Explicit-discarding form: (discarded, level for the rescaled p).

    p > tau is discarded outright. Otherwise the rejection test is
    p/tau <= min(theta, (1-theta) * K_t) with theta = lambda/tau and K_t the
    same weighted gamma sum as the direct form. The candidate test stays on
    the raw scale (p <= lambda).
    """
    theta = config.lam / config.tau
    level = min(theta, (1.0 - theta) * _weighted_gamma_sum(history, config, discounted=True))
    return p > config.tau, level


def dlord_next_level(history: OnlineHistory, config: AlgorithmConfig) -> float:
    """alpha_t = min(tau, tau * weighted gamma sum); no candidacy."""
    return min(config.tau, config.tau * _weighted_gamma_sum(history, config, discounted=False))


def saffron_next_level(history: OnlineHistory, config: AlgorithmConfig) -> float:
    return addis_next_level(history, config.with_tau_one())


def lordpp_next_level(history: OnlineHistory, config: AlgorithmConfig) -> float:
    return dlord_next_level(history, config.with_tau_one())


def lond_next_level(history: OnlineHistory, config: AlgorithmConfig) -> float:
    """alpha_t = alpha * gamma_{t-1} * (D(t-1) + 1)."""
    return config.alpha * config.gamma.value(history.t - 1) * (history.rejection_count + 1)


def _alpha_investing_wealth(history: OnlineHistory, config: AlgorithmConfig) -> tuple[float, int]:
    """Replay the wealth process; returns (wealth at last rejection, kappa_last)."""
    wealth = config.w0
    w_at_rej, k_last = config.w0, 0
    for rec in history.records:
        phi = config.gamma.value(rec.index - 1 - k_last) * w_at_rej
        if rec.rejected:
            wealth += config.alpha
            w_at_rej, k_last = wealth, rec.index
        else:
            wealth -= phi
    return w_at_rej, k_last


def alpha_investing_next_level(history: OnlineHistory, config: AlgorithmConfig) -> float:
    """Spend phi_t = gamma_{t-1-kappa_last} * W(kappa_last); alpha_t = phi/(1+phi)."""
    w_at_rej, k_last = _alpha_investing_wealth(history, config)
    phi = config.gamma.value(history.t - 1 - k_last) * w_at_rej
    return phi / (1.0 + phi)


class OnlineAlgorithm:
    """Mutable single-stream state machine; one instance per stream."""

    kind = "?"

    def __init__(self, config: AlgorithmConfig):
        self.config = config
        self.history = OnlineHistory()

    def next_level(self) -> float:
        raise NotImplementedError

    def _thresholds(self, alpha_t: float) -> tuple[float, float]:
        raise NotImplementedError

    def _decide(self, p: float, alpha_t: float) -> bool:
        return p <= alpha_t

    def _after(self, rec: DecisionRecord) -> None:
        pass

    def observe(self, p: float) -> DecisionRecord:
        if not (isinstance(p, (int, float)) and math.isfinite(p) and 0.0 <= p <= 1.0):
            raise ValueError(f"p must lie in [0, 1], got {p!r}")
        p = float(p)
        alpha_t = self.next_level()
        lam_t, tau_t = self._thresholds(alpha_t)
        rec = DecisionRecord(
            index=self.history.t,
            alpha_t=alpha_t,
            rejected=self._decide(p, alpha_t),
            candidate=p <= lam_t,
            selected=p <= tau_t,
            lambda_t=lam_t,
            tau_t=tau_t,
        )
        self.history.append(rec)
        self._after(rec)
        return rec

    def run(self, pvalues) -> list[DecisionRecord]:
        return [self.observe(p) for p in pvalues]


class Addis(OnlineAlgorithm):
    kind = "addis"

    def next_level(self):
        return addis_next_level(self.history, self.config)

    def _thresholds(self, alpha_t):
        return self.config.lam, self.config.tau


class AddisDiscardForm(Addis):
    """Same rule, explicit discard branch, rejection tested on p/tau."""

    kind = "addis_discard_form"

    def _decide(self, p, alpha_t):
        discarded, scaled_level = addis_discard_form_next(self.history, self.config, p)
        return not discarded and p / self.config.tau <= scaled_level


class DLord(OnlineAlgorithm):
    kind = "dlord"

    def next_level(self):
        return dlord_next_level(self.history, self.config)

    def _thresholds(self, alpha_t):
        # no candidacy: the candidate indicator degenerates to the rejection one
        return alpha_t, self.config.tau


class Saffron(Addis):
    kind = "saffron"

    def __init__(self, config):
        super().__init__(config.with_tau_one())


class LordPP(DLord):
    kind = "lordpp"

    def __init__(self, config):
        super().__init__(config.with_tau_one())


class Lond(OnlineAlgorithm):
    kind = "lond"

    def next_level(self):
        return lond_next_level(self.history, self.config)

    def _thresholds(self, alpha_t):
        return alpha_t, 1.0


class AlphaInvesting(OnlineAlgorithm):
    kind = "alpha_investing"

    def __init__(self, config):
        super().__init__(config)
        self.wealth = config.w0
        self._w_at_rej = config.w0
        self._k_last = 0

    def next_level(self):
        phi = self.config.gamma.value(self.history.t - 1 - self._k_last) * self._w_at_rej
        return phi / (1.0 + phi)

    def _thresholds(self, alpha_t):
        return alpha_t, 1.0

    def _after(self, rec):
        phi = self.config.gamma.value(rec.index - 1 - self._k_last) * self._w_at_rej
        if rec.rejected:
            self.wealth += self.config.alpha
            self._w_at_rej, self._k_last = self.wealth, rec.index
        else:
            self.wealth -= phi


_ALGORITHMS = {
    "addis": Addis,
    "addis_discard_form": AddisDiscardForm,
    "dlord": DLord,
    "saffron": Saffron,
    "lordpp": LordPP,
    "lond": Lond,
    "alpha_investing": AlphaInvesting,
}


def make_algorithm(kind: str, config: AlgorithmConfig) -> OnlineAlgorithm:
    try:
        cls = _ALGORITHMS[kind]
    except KeyError:
        raise ValueError(f"unknown algorithm kind {kind!r}; valid: {', '.join(KINDS)}") from None
    return cls(config)


# ---------------------------------------------------------------------------
# Serial FDP estimators. Each takes a decision log; indicators involving the
# p-value are recovered from the stored candidate/selected flags, so the raw
# p-values are not needed. ``alpha_levels`` overrides the recorded levels.
# ---------------------------------------------------------------------------

def _log_arrays(records, alpha_levels):
    alpha = np.array([r.alpha_t for r in records] if alpha_levels is None else alpha_levels, dtype=np.float64)
    if alpha.size != len(records):
        raise ValueError("alpha_levels length must match the record log")
    rej = np.array([r.rejected for r in records], dtype=bool)
    cand = np.array([r.candidate for r in records], dtype=bool)
    sel = np.array([r.selected for r in records], dtype=bool)
    lam = np.array([r.lambda_t for r in records], dtype=np.float64)
    tau = np.array([r.tau_t for r in records], dtype=np.float64)
    return alpha, rej, cand, sel, lam, tau


def _series(numer_terms: np.ndarray, rej: np.ndarray) -> np.ndarray:
    return np.cumsum(numer_terms) / np.maximum(np.cumsum(rej), 1)


def fdp_hat_addis_series(records, alpha_levels=None) -> np.ndarray:
    """Running sum alpha_j 1{lambda_j < P_j <= tau_j}/(tau_j - lambda_j) over (|R| v 1)."""
    if not len(records):
        return np.zeros(0)
    alpha, rej, cand, sel, lam, tau = _log_arrays(records, alpha_levels)
    terms = alpha * (sel & ~cand) / (tau - lam)
    return _series(terms, rej)


def fdp_hat_saffron_series(records, alpha_levels=None) -> np.ndarray:
    if not len(records):
        return np.zeros(0)
    alpha, rej, cand, _, lam, _ = _log_arrays(records, alpha_levels)
    return _series(alpha * ~cand / (1.0 - lam), rej)


def fdp_hat_lordpp_series(records, alpha_levels=None) -> np.ndarray:
    if not len(records):
        return np.zeros(0)
    alpha, rej, *_ = _log_arrays(records, alpha_levels)
    return _series(alpha, rej)


def fdp_hat_dlord_series(records, alpha_levels=None) -> np.ndarray:
    if not len(records):
        return np.zeros(0)
    alpha, rej, _, sel, _, tau = _log_arrays(records, alpha_levels)
    return _series(alpha / tau * sel, rej)


def fdp_hat_addis(records, alpha_levels=None) -> float:
    s = fdp_hat_addis_series(records, alpha_levels)
    return float(s[-1]) if s.size else 0.0


def fdp_hat_saffron(records, alpha_levels=None) -> float:
    s = fdp_hat_saffron_series(records, alpha_levels)
    return float(s[-1]) if s.size else 0.0


def fdp_hat_lordpp(records, alpha_levels=None) -> float:
    s = fdp_hat_lordpp_series(records, alpha_levels)
    return float(s[-1]) if s.size else 0.0


def fdp_hat_dlord(records, alpha_levels=None) -> float:
    s = fdp_hat_dlord_series(records, alpha_levels)
    return float(s[-1]) if s.size else 0.0


ESTIMATOR_SERIES = {
    "addis": fdp_hat_addis_series,
    "addis_discard_form": fdp_hat_addis_series,
    "dlord": fdp_hat_dlord_series,
    "saffron": fdp_hat_saffron_series,
    "lordpp": fdp_hat_lordpp_series,
}


# ---------------------------------------------------------------------------
# Monotonicity relation on histories: h2 dominates h1 when every step is one
# of the five allowed coordinatewise transitions. Levels of the adaptive
# discarding rule are then ordered: alpha_t(h2) >= alpha_t(h1).
# ---------------------------------------------------------------------------

_PRECEDES_CASES = frozenset(
    {
        ((0, 0, 1), (0, 1, 1)),
        ((0, 0, 1), (1, 1, 1)),
        ((0, 1, 1), (1, 1, 1)),
        ((0, 0, 1), (0, 0, 0)),
    }
)


def _indicator_triples(h) -> list[tuple[int, int, int]]:
    records = h.records if isinstance(h, OnlineHistory) else h
    out = []
    for r in records:
        if isinstance(r, DecisionRecord):
            out.append((int(r.rejected), int(r.candidate), int(r.selected)))
        else:
            out.append((int(r[0]), int(r[1]), int(r[2])))
    return out


def history_precedes(h1, h2) -> bool:
    """True iff h2 step-wise dominates h1 under the five allowed transitions."""
    t1, t2 = _indicator_triples(h1), _indicator_triples(h2)
    if len(t1) != len(t2):
        raise ValueError(f"histories differ in length: {len(t1)} vs {len(t2)}")
    for a, b in zip(t1, t2):
        if a != b and (a, b) not in _PRECEDES_CASES:
            return False
    return True


# ---------------------------------------------------------------------------
# Monte-Carlo check of the two-sided estimator inequality for convex null
# CDFs: P(ab < P <= b)/(b(1-a)) <= P(P > a)/(1-a) for the Gaussian-mean null.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LemmaCheck:
    lhs: float
    rhs: float
    se_lhs: float
    se_rhs: float
    se_diff: float
    n_samples: int


def check_lemma_estimates(a: float, b: float, mu_null: float, n_samples: int, seed: int = 0) -> LemmaCheck:
    """Estimate both sides of the inequality for P = Phi(-Z), Z ~ N(mu_null, 1).

    ``se_diff`` is the standard error of the per-sample difference
    lhs_i - rhs_i, the right scale for testing lhs <= rhs.
    """
    if not (0.0 < a < 1.0 and 0.0 < b < 1.0):
        raise ValueError(f"a, b must lie in (0, 1), got a={a!r}, b={b!r}")
    if mu_null > 0.0:
        raise ValueError(f"mu_null must be <= 0 for a convex null CDF, got {mu_null!r}")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    u = rng.random(n_samples)
    p = normal_cdf_array(-(mu_null + normal_quantile_array(u)))
    mid = ((a * b < p) & (p <= b)).astype(np.float64) / (b * (1.0 - a))
    hi = (p > a).astype(np.float64) / (1.0 - a)
    lhs, rhs = float(mid.mean()), float(hi.mean())
    root_n = math.sqrt(n_samples)
    return LemmaCheck(
        lhs=lhs,
        rhs=rhs,
        se_lhs=float(mid.std(ddof=1)) / root_n,
        se_rhs=float(hi.std(ddof=1)) / root_n,
        se_diff=float((mid - hi).std(ddof=1)) / root_n,
        n_samples=n_samples,
    )
