import dataclasses
import math

import numpy as np
import pytest

from fdrlab.online import (
    OnlineHistory,
    addis_next_level,
    alpha_investing_next_level,
    check_lemma_estimates,
    dlord_next_level,
    fdp_hat_addis,
    fdp_hat_addis_series,
    fdp_hat_dlord,
    fdp_hat_lordpp,
    fdp_hat_saffron,
    history_precedes,
    lond_next_level,
    lordpp_next_level,
    make_algorithm,
    saffron_next_level,
)
from fdrlab.types import DecisionRecord

import oracles


def _record(i, alpha_t, p, lam, tau):
    return DecisionRecord(
        index=i, alpha_t=alpha_t, rejected=p <= alpha_t, candidate=p <= lam,
        selected=p <= tau, lambda_t=lam, tau_t=tau,
    )


def _random_stream(rng, n):
    lab = rng.random(n) < rng.uniform(0.0, 0.6)
    z = np.where(lab, rng.uniform(1, 4), rng.uniform(-1.5, 0)) + rng.standard_normal(n)
    from fdrlab.normal import normal_cdf_array

    return normal_cdf_array(-z)


# -- level rules ---------------------------------------------------------------

def test_addis_first_level(base_config):
    h = OnlineHistory()
    assert addis_next_level(h, base_config) == pytest.approx(0.0027343, abs=1e-6)
    assert addis_next_level(h, base_config) == pytest.approx(0.0027343135360904606, rel=1e-12)


def test_addis_full_wealth_single_term(power_gamma, base_config):
    # with w0 = alpha and no rejections yet the level is (tau-lambda) alpha gamma_n
    cfg = dataclasses.replace(base_config, w0=base_config.alpha)
    alg = make_algorithm("addis", cfg)
    for p in [0.6, 0.3, 0.45, 0.9, 0.05, 0.26]:
        alg.observe(p)
    h = alg.history
    assert h.rejection_count == 0
    n = h.selected_count - h.candidate_count
    expect = min(cfg.lam, (cfg.tau - cfg.lam) * cfg.alpha * power_gamma.value(n))
    assert addis_next_level(h, cfg) == pytest.approx(expect, rel=1e-12)


def test_addis_levels_decay_without_candidates(power_gamma):
    from fdrlab.types import AlgorithmConfig

    cfg = AlgorithmConfig(alpha=0.05, w0=0.025, lam=0.5, tau=1.0, gamma=power_gamma)
    alg = make_algorithm("addis", cfg)
    levels = [alg.observe(0.9).alpha_t for _ in range(40)]
    expect = [0.5 * 0.025 * power_gamma.value(t) for t in range(40)]
    assert levels == pytest.approx(expect, rel=1e-12)
    assert all(a > b for a, b in zip(levels, levels[1:]))


def test_addis_against_direct_transcription(base_config):
    rng = np.random.default_rng(5)
    for _ in range(20):
        p = _random_stream(rng, 80)
        alg = make_algorithm("addis", base_config)
        got = [alg.observe(x).alpha_t for x in p]
        expect = oracles.addis_levels_direct(
            list(p), base_config.alpha, base_config.w0, base_config.lam, base_config.tau,
            base_config.gamma.value,
        )
        assert got == pytest.approx(expect, rel=1e-12)


def test_dlord_first_level(base_config):
    h = OnlineHistory()
    assert dlord_next_level(h, base_config) == pytest.approx(0.0054686, abs=1e-6)
    assert dlord_next_level(h, base_config) == pytest.approx(0.005468627072180921, rel=1e-12)
    assert dlord_next_level(h, base_config) == min(
        base_config.tau, base_config.tau * base_config.w0 * base_config.gamma.value(0)
    )


def test_dlord_against_direct_transcription(base_config):
    rng = np.random.default_rng(6)
    for _ in range(20):
        p = _random_stream(rng, 80)
        alg = make_algorithm("dlord", base_config)
        got = [alg.observe(x).alpha_t for x in p]
        expect = oracles.dlord_levels_direct(
            list(p), base_config.alpha, base_config.w0, base_config.tau, base_config.gamma.value
        )
        assert got == pytest.approx(expect, rel=1e-12)


def test_lordpp_first_level(base_config):
    h = OnlineHistory()
    assert lordpp_next_level(h, base_config) == pytest.approx(0.0109373, abs=1e-6)
    assert lordpp_next_level(h, base_config) == pytest.approx(0.010937254144361842, rel=1e-12)


def test_saffron_is_addis_tau_one(base_config):
    h = OnlineHistory.from_indicators([(0, 0, 1), (0, 1, 1), (1, 1, 1), (0, 0, 1)])
    assert saffron_next_level(h, base_config) == addis_next_level(h, base_config.with_tau_one())


def test_lond_levels(base_config, power_gamma):
    h = OnlineHistory()
    assert lond_next_level(h, base_config) == base_config.alpha * power_gamma.value(0)
    alg = make_algorithm("lond", base_config)
    for p in [0.0, 0.0, 0.0] + [1.0] * 6:
        alg.observe(p)
    # three rejections happened; the tenth level is alpha * gamma_9 * 4
    assert alg.history.rejection_count == 3
    assert alg.next_level() == base_config.alpha * power_gamma.value(9) * 4


def test_lond_level_nondecreasing_in_rejections(base_config):
    quiet = OnlineHistory.from_indicators([(0, 0, 1)] * 12)
    busy = OnlineHistory.from_indicators([(1, 1, 1)] * 12)
    assert lond_next_level(busy, base_config) >= lond_next_level(quiet, base_config)


def test_alpha_investing_first_level(base_config, power_gamma):
    h = OnlineHistory()
    phi = power_gamma.value(0) * base_config.w0
    assert alpha_investing_next_level(h, base_config) == phi / (1 + phi)


def test_alpha_investing_rejection_pays_alpha(base_config):
    alg = make_algorithm("alpha_investing", base_config)
    before = alg.wealth
    rec = alg.observe(0.0)
    assert rec.rejected
    assert alg.wealth == before + base_config.alpha


def test_alpha_investing_wealth_never_negative(base_config):
    rng = np.random.default_rng(11)
    for _ in range(1000):
        alg = make_algorithm("alpha_investing", base_config)
        for x in _random_stream(rng, 50):
            alg.observe(x)
            assert alg.wealth >= 0.0


def test_alpha_investing_free_function_matches_machine(base_config):
    rng = np.random.default_rng(12)
    p = _random_stream(rng, 60)
    alg = make_algorithm("alpha_investing", base_config)
    for x in p:
        expect = alpha_investing_next_level(alg.history, base_config)
        assert alg.observe(x).alpha_t == expect


# -- the observe contract ------------------------------------------------------

def test_observe_boundary_pvalues(base_config):
    alg = make_algorithm("addis", base_config)
    rec = alg.observe(1.0)
    assert not rec.selected and not rec.candidate and not rec.rejected
    alg2 = make_algorithm("addis", base_config)
    rec2 = alg2.observe(0.0)
    assert rec2.rejected  # alpha_1 > 0


@pytest.mark.parametrize("bad", [-0.1, 1.5, float("nan")])
def test_observe_rejects_bad_p(base_config, bad):
    with pytest.raises(ValueError):
        make_algorithm("addis", base_config).observe(bad)


def test_replay_determinism(base_config):
    rng = np.random.default_rng(13)
    p = _random_stream(rng, 120)
    logs = [make_algorithm("addis", base_config).run(p) for _ in range(2)]
    assert logs[0] == logs[1]


def test_indicator_chain_on_all_kinds(base_config):
    rng = np.random.default_rng(14)
    p = _random_stream(rng, 150)
    for kind in ("addis", "addis_discard_form", "dlord", "saffron", "lordpp", "lond", "alpha_investing"):
        for rec in make_algorithm(kind, base_config).run(p):
            assert rec.rejected <= rec.candidate <= rec.selected
            assert rec.alpha_t <= rec.lambda_t < rec.tau_t or (rec.lambda_t == rec.alpha_t <= rec.tau_t)


def test_level_constraint_chain(base_config):
    # every emitted adaptive-discarding level satisfies alpha_t <= lambda < tau;
    # the non-adaptive rule satisfies alpha_t <= tau
    rng = np.random.default_rng(140)
    p = _random_stream(rng, 200)
    for rec in make_algorithm("addis", base_config).run(p):
        assert rec.alpha_t <= base_config.lam < base_config.tau
    for rec in make_algorithm("dlord", base_config).run(p):
        assert rec.alpha_t <= base_config.tau


def test_make_algorithm_rejects_unknown(base_config):
    with pytest.raises(ValueError):
        make_algorithm("bonferroni", base_config)


# -- history counters ----------------------------------------------------------

def test_counters_match_brute_force(base_config):
    rng = np.random.default_rng(15)
    p = _random_stream(rng, 200)
    alg = make_algorithm("addis", base_config)
    for x in p:
        alg.observe(x)
        h = alg.history
        h.verify_counters()
        sel = [r.selected for r in h.records]
        cand = [r.candidate for r in h.records]
        assert h.selected_count == sum(sel)
        assert all(a < b for a, b in zip(h.rejection_times, h.rejection_times[1:]))
        for j, kappa in enumerate(h.rejection_times, start=1):
            assert h.kappa_star(j) == sum(sel[:kappa])
            assert h.kappa_star(j) <= kappa
            assert h.c_plus(j) == sum(cand[kappa:])
            assert h.c_plus(j) <= len(h.records) - kappa
        assert h.c_plus(0) == sum(cand)


def test_verify_counters_detects_corruption(base_config):
    alg = make_algorithm("addis", base_config)
    for x in (0.01, 0.6, 0.3):
        alg.observe(x)
    alg.history.selected_count += 1
    with pytest.raises(RuntimeError):
        alg.history.verify_counters()


def test_history_rejects_out_of_order_record(base_config):
    h = OnlineHistory()
    with pytest.raises(ValueError):
        h.append(_record(5, 0.01, 0.5, 0.25, 0.5))


# -- estimators ------------------------------------------------------------------

def test_estimators_empty_log():
    assert fdp_hat_addis([]) == 0.0
    assert fdp_hat_saffron([]) == 0.0
    assert fdp_hat_lordpp([]) == 0.0
    assert fdp_hat_dlord([]) == 0.0


def test_fdp_hat_addis_hand_example():
    lam, tau = 0.25, 0.5
    a1, a2, a3 = 0.02, 0.005, 0.003
    recs = [
        _record(1, a1, 0.01, lam, tau),
        _record(2, a2, 0.30, lam, tau),
        _record(3, a3, 0.60, lam, tau),
    ]
    assert recs[0].rejected and not recs[1].rejected
    assert fdp_hat_addis(recs) == pytest.approx(4 * a2, rel=1e-12)


def test_fdp_hat_addis_reduces_to_saffron_at_lambda_zero():
    rng = np.random.default_rng(16)
    recs = [_record(i + 1, 0.01, float(p), 0.0, 1.0) for i, p in enumerate(rng.uniform(0.02, 1.0, 50))]
    assert fdp_hat_addis(recs) == pytest.approx(fdp_hat_saffron(recs), rel=1e-12)


def test_fdp_hat_dlord_single_step():
    rec = _record(1, 0.01, 0.4, 0.01, 0.5)
    assert not rec.rejected and rec.selected
    assert fdp_hat_dlord([rec]) == pytest.approx(0.02, rel=1e-12)


def test_fdp_hat_saffron_all_candidates():
    recs = [_record(i, 0.01, 0.1, 0.5, 1.0) for i in range(1, 6)]
    assert fdp_hat_saffron(recs) == 0.0


def test_estimators_match_direct_formulas(base_config):
    rng = np.random.default_rng(17)
    p = _random_stream(rng, 150)
    alg = make_algorithm("addis", base_config)
    recs = alg.run(p)
    levels = [r.alpha_t for r in recs]
    assert fdp_hat_addis(recs) == pytest.approx(
        oracles.fdp_hat_addis_direct(p, levels, base_config.lam, base_config.tau), rel=1e-12
    )
    dl = make_algorithm("dlord", base_config).run(p)
    assert fdp_hat_dlord(dl) == pytest.approx(
        oracles.fdp_hat_dlord_direct(p, [r.alpha_t for r in dl], base_config.tau), rel=1e-12
    )
    cfg_s = dataclasses.replace(base_config, lam=0.5, tau=1.0)
    sf = make_algorithm("saffron", cfg_s).run(p)
    assert fdp_hat_saffron(sf) == pytest.approx(
        oracles.fdp_hat_saffron_direct(p, [r.alpha_t for r in sf], 0.5), rel=1e-12
    )


def test_alpha_levels_override():
    recs = [_record(1, 0.2, 0.3, 0.25, 0.5)]
    assert fdp_hat_lordpp(recs, alpha_levels=[0.07]) == pytest.approx(0.07)
    with pytest.raises(ValueError):
        fdp_hat_lordpp(recs, alpha_levels=[0.07, 0.01])


def test_estimator_series_monotone_denominator(base_config):
    rng = np.random.default_rng(18)
    p = _random_stream(rng, 100)
    recs = make_algorithm("addis", base_config).run(p)
    series = fdp_hat_addis_series(recs)
    assert series.shape == (100,)
    assert np.all(series <= base_config.alpha)


# -- history domination ---------------------------------------------------------

def test_history_precedes_cases():
    same = [(1, 1, 1), (0, 0, 0), (0, 1, 1)]
    assert history_precedes(same, same)
    assert history_precedes([(0, 0, 1)], [(0, 1, 1)])
    assert history_precedes([(0, 0, 1)], [(1, 1, 1)])
    assert history_precedes([(0, 1, 1)], [(1, 1, 1)])
    assert history_precedes([(0, 0, 1)], [(0, 0, 0)])
    assert not history_precedes([(1, 1, 1)], [(0, 0, 1)])
    assert not history_precedes([(0, 0, 0)], [(0, 0, 1)])
    assert not history_precedes([(0, 1, 1)], [(0, 0, 1)])
    with pytest.raises(ValueError):
        history_precedes([(0, 0, 1)], [(0, 0, 1), (0, 0, 1)])


def test_history_precedes_accepts_histories(base_config):
    h1 = OnlineHistory.from_indicators([(0, 0, 1), (0, 1, 1)])
    h2 = OnlineHistory.from_indicators([(0, 1, 1), (0, 1, 1)])
    assert history_precedes(h1, h2)
    assert not history_precedes(h2, h1)


def test_monotonicity_of_levels_quick(base_config):
    rng = np.random.default_rng(19)
    states = [(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)]
    moves = {(0, 0, 1): [(0, 1, 1), (1, 1, 1), (0, 0, 0)], (0, 1, 1): [(1, 1, 1)]}
    for _ in range(500):
        n = int(rng.integers(1, 60))
        h1 = [states[i] for i in rng.integers(0, 4, n)]
        h2 = [
            moves[s][rng.integers(0, len(moves[s]))] if s in moves and rng.random() < 0.4 else s
            for s in h1
        ]
        assert history_precedes(h1, h2)
        a1 = addis_next_level(OnlineHistory.from_indicators(h1), base_config)
        a2 = addis_next_level(OnlineHistory.from_indicators(h2), base_config)
        assert a2 >= a1


# -- the estimator-tightness Monte-Carlo check -----------------------------------

def test_lemma_uniform_boundary():
    r = check_lemma_estimates(0.5, 0.5, 0.0, 200_000, seed=3)
    assert abs(r.lhs - 1.0) < 4 * r.se_lhs + 1e-9
    assert abs(r.rhs - 1.0) < 4 * r.se_rhs + 1e-9


def test_lemma_strict_for_conservative_null():
    r = check_lemma_estimates(0.5, 0.5, -1.0, 1_000_000, seed=3)
    assert r.lhs >= 0.0 and r.rhs >= 0.0
    assert r.rhs - r.lhs > 2 * r.se_diff


def test_lemma_validation():
    with pytest.raises(ValueError):
        check_lemma_estimates(0.0, 0.5, -1.0, 100)
    with pytest.raises(ValueError):
        check_lemma_estimates(0.5, 1.0, -1.0, 100)
    with pytest.raises(ValueError):
        check_lemma_estimates(0.5, 0.5, 0.1, 100)
    with pytest.raises(ValueError):
        check_lemma_estimates(0.5, 0.5, -1.0, 1)
