"""Hyperparameter guidance: where should (lambda, tau) sit for a given model?

The indicator mass the discarding estimator accumulates per test has
expectation (F(tau) - F(lambda)) / (tau - lambda) under p-value CDF F; a
tighter estimator means more budget, so good (lambda, tau) minimize it. In
the decoupled coordinates theta = lambda/tau the objective is

    (F(tau) - F(theta tau)) / (tau (1 - theta))          theta, tau in (0,1)

evaluated here on a uniform grid, together with an optional empirical power
surface of the adaptive discarding rule over the same grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gamma import make_power_gamma
from .normal import normal_cdf_array, normal_quantile_array, std_normal_cdf, std_normal_quantile
from .simulate import AlgorithmSpec, GaussianModelConfig, estimate_metrics
from .types import AlgorithmConfig

_TIE_TOL = 1e-12


@dataclass(frozen=True)
class MixtureCdf:
    """CDF of the p-values in the two-point Gaussian-mean mixture.

    P(p <= x) = (1-pi_alt) Phi(Phi^-1(x) + mu_null) + pi_alt Phi(Phi^-1(x) + mu_alt),
    with F(0) = 0 and F(1) = 1 by continuity.
    """

    pi_alt: float
    mu_null: float
    mu_alt: float

    def __post_init__(self):
        if not 0.0 <= self.pi_alt <= 1.0:
            raise ValueError(f"pi_alt must lie in [0, 1], got {self.pi_alt!r}")
        if self.mu_null > 0.0:
            raise ValueError(f"mu_null must be <= 0, got {self.mu_null!r}")
        if self.mu_alt <= 0.0:
            raise ValueError(f"mu_alt must be > 0, got {self.mu_alt!r}")

    def __call__(self, x: float) -> float:
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"x must lie in [0, 1], got {x!r}")
        if x == 0.0 or x == 1.0:
            return float(x)
        q = std_normal_quantile(x)
        return (1.0 - self.pi_alt) * std_normal_cdf(q + self.mu_null) + self.pi_alt * std_normal_cdf(
            q + self.mu_alt
        )

    def values(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        if xs.size and (xs.min() < 0.0 or xs.max() > 1.0):
            raise ValueError("x values must lie in [0, 1]")
        q = normal_quantile_array(xs)  # +-inf at the endpoints is fine under ndtr
        out = (1.0 - self.pi_alt) * normal_cdf_array(q + self.mu_null) + self.pi_alt * normal_cdf_array(
            q + self.mu_alt
        )
        return out


def mixture_cdf_eval(cdf: MixtureCdf, x: float) -> float:
    return cdf(x)


def g_of_F(cdf, theta: float, tau: float) -> float:
    """(F(tau) - F(theta tau)) / (tau (1 - theta)) on the open square."""
    if not (0.0 < theta < 1.0 and 0.0 < tau < 1.0):
        raise ValueError(f"theta and tau must lie strictly inside (0, 1), got ({theta!r}, {tau!r})")
    return (cdf(tau) - cdf(theta * tau)) / (tau * (1.0 - theta))


@dataclass(frozen=True)
class TuneSurface:
    thetas: tuple[float, ...]
    taus: tuple[float, ...]
    values: np.ndarray  # values[i, j] = objective at (thetas[i], taus[j])
    theta_star: float
    tau_star: float

    @property
    def lambda_star(self) -> float:
        return self.theta_star * self.tau_star


def tune_surface(cdf, grid_size: int = 50) -> TuneSurface:
    """Objective on the grid {k/(grid_size+1)}^2; argmin with deterministic ties.

    Ties (values within 1e-12 of the minimum, e.g. the exactly flat uniform
    surface) break toward the smallest tau, then the smallest theta.
    """
    if grid_size < 2:
        raise ValueError(f"grid_size must be >= 2, got {grid_size}")
    pts = np.arange(1, grid_size + 1, dtype=np.float64) / (grid_size + 1)
    f_tau = cdf.values(pts)
    prod = np.outer(pts, pts)  # prod[i, j] = theta_i * tau_j
    f_prod = cdf.values(prod.ravel()).reshape(prod.shape)
    values = (f_tau[None, :] - f_prod) / (pts[None, :] * (1.0 - pts[:, None]))
    tol = _TIE_TOL * max(1.0, abs(float(values.min())))
    near = np.argwhere(values <= values.min() + tol)
    j_i = min((int(j), int(i)) for i, j in near)  # smallest tau, then theta
    return TuneSurface(
        thetas=tuple(pts),
        taus=tuple(pts),
        values=values,
        theta_star=float(pts[j_i[1]]),
        tau_star=float(pts[j_i[0]]),
    )


def empirical_power_surface(
    model: GaussianModelConfig,
    thetas,
    taus,
    alpha: float = 0.05,
    n_trials: int = 100,
    gamma_exponent: float = 1.6,
) -> np.ndarray:
    """Empirical power of the adaptive discarding rule per (theta, tau) cell.

    Every cell sees the same per-trial streams, so cell-to-cell contrasts are
    paired. Returns a matrix aligned with (thetas, taus).
    """
    gam = make_power_gamma(gamma_exponent)
    out = np.empty((len(thetas), len(taus)))
    for i, theta in enumerate(thetas):
        for j, tau in enumerate(taus):
            cfg = AlgorithmConfig(alpha, alpha / 2, theta * tau, tau, gam)
            spec = AlgorithmSpec("addis", "addis", cfg)
            row = estimate_metrics(model, [spec], n_trials).rows[0]
            out[i, j] = np.nan if row.power is None else row.power
    return out
