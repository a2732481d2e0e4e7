"""Online and offline FDR control with adaptive discarding.

The online rules are mutable per-stream state machines (make_algorithm /
observe); the offline procedures are pure functions; the simulate module is
a seeded Monte-Carlo harness whose results are reproducible bit-for-bit.
"""

from .async_online import AsyncAddis, fdp_hat_addis_async, run_schedule
from .gamma import GammaSequence, make_lord_gamma, make_power_gamma, parse_gamma
from .normal import std_normal_cdf, std_normal_quantile
from .offline import BatchResult, bh, d_stbh, storey_bh
from .online import (
    KINDS,
    OnlineAlgorithm,
    OnlineHistory,
    addis_next_level,
    alpha_investing_next_level,
    check_lemma_estimates,
    dlord_next_level,
    fdp_hat_addis,
    fdp_hat_dlord,
    fdp_hat_lordpp,
    fdp_hat_saffron,
    history_precedes,
    lond_next_level,
    lordpp_next_level,
    make_algorithm,
    saffron_next_level,
)
from .simulate import (
    AlgorithmSpec,
    ExperimentReport,
    GaussianModelConfig,
    InvariantViolation,
    default_spec,
    estimate_metrics,
    run_stopping_time_experiment,
    run_trial,
    sample_async_schedule,
    sample_gaussian_stream,
)
from .tuning import MixtureCdf, TuneSurface, g_of_F, mixture_cdf_eval, tune_surface
from .types import AlgorithmConfig, DecisionRecord, PValueRecord, StreamTruth

__version__ = "0.1.0"
