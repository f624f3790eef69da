"""Wind forecasting: mean-reverting AR(1) scenarios around a climatology,
mapped through the turbine power curve.

The forecast model is a truncated-Gaussian AR(1): cheap, closed-form and
seed-deterministic, with the same interface a learned regressor would have
(current wind in, power scenarios out). Quantiles are always computed in the
power domain, never by mapping wind quantiles through the curve, because the
curve is non-monotone at cut-out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .plant import TurbineParams, power_curve


class InsufficientHistory(Exception):
    pass


@dataclass(frozen=True)
class ClimatologyParams:
    mu: float  # m/s, long-run mean
    sigma_inf: float  # m/s, stationary std
    rho: float  # lag-1 autocorrelation per forecast step, in [0, 1]

    def __post_init__(self) -> None:
        if self.sigma_inf < 0:
            raise ValueError("sigma_inf must be >= 0")
        if not (0.0 <= self.rho <= 1.0):
            raise ValueError("rho must be in [0, 1]")

    def at_step(self, from_step_s: float, to_step_s: float) -> "ClimatologyParams":
        """Rescale the lag-1 autocorrelation to a different step length.

        AR(1) is closed under subsampling: rho_b = rho_a ** (b / a); the
        stationary mean and std are step-invariant.
        """
        if self.rho == 0.0:
            rho = 0.0
        else:
            rho = min(self.rho ** (to_step_s / from_step_s), 1.0)
        return ClimatologyParams(mu=self.mu, sigma_inf=self.sigma_inf, rho=rho)


@dataclass(frozen=True)
class ForecastEnsemble:
    issued_at: float  # s
    step: float  # s between forecast points
    horizon_steps: int
    scenarios: np.ndarray  # [n_scenarios, horizon_steps] wind m/s
    quantile_levels: tuple[float, ...]
    quantiles: np.ndarray  # [n_levels, horizon_steps] wind m/s

    @property
    def n_scenarios(self) -> int:
        return int(self.scenarios.shape[0])


@dataclass(frozen=True)
class PowerForecast:
    issued_at: float
    step: float
    horizon_steps: int
    scenarios: np.ndarray  # [n_scenarios, horizon_steps] kW
    quantile_levels: tuple[float, ...]
    quantiles: np.ndarray  # [n_levels, horizon_steps] kW

    def quantile(self, level: float) -> np.ndarray:
        for i, q in enumerate(self.quantile_levels):
            if math.isclose(q, level):
                return self.quantiles[i]
        raise KeyError(f"quantile {level} not computed (have {self.quantile_levels})")


def fit_climatology(history) -> ClimatologyParams:
    """Closed-form moment fit of the AR(1) climatology from a wind series
    sampled at a fixed step; rho is clamped into [0, 1]."""
    x = np.asarray(history, dtype=float)
    if x.ndim != 1 or x.size < 10:
        raise InsufficientHistory(f"need at least 10 samples, got {x.size}")
    mu = float(np.mean(x))
    sigma = float(np.std(x))
    d = x - mu
    den = float(np.dot(d, d))
    rho = float(np.dot(d[:-1], d[1:]) / den) if den > 0.0 else 0.0
    return ClimatologyParams(mu=mu, sigma_inf=sigma, rho=min(max(rho, 0.0), 1.0))


DEFAULT_QUANTILE_LEVELS = (0.1, 0.5, 0.9)


def _empirical_quantiles(samples: np.ndarray, levels: tuple[float, ...]) -> np.ndarray:
    # Midpoint interpolation keeps quantiles inside the sample range and
    # nondecreasing across levels.
    return np.quantile(samples, list(levels), axis=0, method="midpoint")


def forecast_wind(
    v_now: float,
    p: ClimatologyParams,
    horizon_steps: int,
    n_scenarios: int,
    seed: int,
    issued_at: float = 0.0,
    step: float = 900.0,
    quantile_levels: tuple[float, ...] = DEFAULT_QUANTILE_LEVELS,
) -> ForecastEnsemble:
    """Sample wind scenarios k = 1..horizon ahead of v_now.

    Mean path mu + (v_now - mu) * rho^k; each scenario evolves recursively
    with innovation std sigma_inf * sqrt(1 - rho^2), which gives marginal
    std sigma_inf * sqrt(1 - rho^(2k)) exactly. Samples truncate at 0 m/s by
    clamping (small bias, documented and accepted).
    """
    if n_scenarios < 1:
        raise ValueError("n_scenarios must be >= 1")
    if horizon_steps < 1:
        raise ValueError("horizon_steps must be >= 1")
    rng = np.random.default_rng(seed)
    innov_std = p.sigma_inf * math.sqrt(max(1.0 - p.rho * p.rho, 0.0))
    scen = np.empty((n_scenarios, horizon_steps), dtype=float)
    prev = np.full(n_scenarios, float(v_now))
    for k in range(horizon_steps):
        mean = p.mu + p.rho * (prev - p.mu)
        if innov_std > 0.0:
            prev = mean + rng.normal(0.0, innov_std, size=n_scenarios)
        else:
            prev = mean
        np.clip(prev, 0.0, None, out=prev)
        scen[:, k] = prev
    return ForecastEnsemble(
        issued_at=issued_at,
        step=step,
        horizon_steps=horizon_steps,
        scenarios=scen,
        quantile_levels=tuple(quantile_levels),
        quantiles=_empirical_quantiles(scen, tuple(quantile_levels)),
    )


def wind_to_power(e: ForecastEnsemble, t: TurbineParams) -> PowerForecast:
    """Map every wind sample through the power curve, then take quantiles of
    the power values per step."""
    v = e.scenarios
    num = v**3 - t.cut_in**3
    den = t.rated_speed**3 - t.cut_in**3
    frac = np.clip(num / den, 0.0, 1.0)
    power = t.count * t.rated_power * frac
    power[(v < t.cut_in) | (v >= t.cut_out)] = 0.0
    return PowerForecast(
        issued_at=e.issued_at,
        step=e.step,
        horizon_steps=e.horizon_steps,
        scenarios=power,
        quantile_levels=e.quantile_levels,
        quantiles=_empirical_quantiles(power, e.quantile_levels),
    )


@dataclass
class Ar1WindGenerator:
    """Tick-level synthetic wind source sharing the forecast climatology.

    The per-tick autocorrelation is derived from the same climatology the
    forecaster uses (rescaled to dt), so forecasts and realized wind are
    statistically consistent by construction.
    """

    climatology: ClimatologyParams  # at the generator's own dt
    seed: int
    v0: float | None = None
    _rng: np.random.Generator = field(init=False, repr=False)
    _v: float = field(init=False)

    def __post_init__(self) -> None:
        self._rng = np.random.default_rng(self.seed)
        self._v = self.climatology.mu if self.v0 is None else self.v0

    @property
    def current(self) -> float:
        return self._v

    def sample(self) -> float:
        p = self.climatology
        innov_std = p.sigma_inf * math.sqrt(max(1.0 - p.rho * p.rho, 0.0))
        mean = p.mu + p.rho * (self._v - p.mu)
        v = mean + (self._rng.normal(0.0, innov_std) if innov_std > 0.0 else 0.0)
        self._v = max(v, 0.0)
        return self._v
