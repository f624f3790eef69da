"""Forecasting tests: climatology fit, AR(1) scenario generation, power
mapping, and the seed-determinism / monotonicity properties."""

import numpy as np
import pytest

from ptxsim.forecast import (
    Ar1WindGenerator,
    ClimatologyParams,
    InsufficientHistory,
    fit_climatology,
    forecast_wind,
    wind_to_power,
)
from ptxsim.plant import TurbineParams

TURBINE = TurbineParams(count=1, rated_power=15000.0, cut_in=3.0, rated_speed=12.0, cut_out=25.0)


class TestFitClimatology:
    def test_constant_series_degenerates_cleanly(self):
        p = fit_climatology([8.0] * 50)
        assert p.mu == pytest.approx(8.0)
        assert p.sigma_inf == pytest.approx(0.0)
        assert p.rho == 0.0  # 0/0 convention

    def test_alternating_series_clamps_negative_autocorrelation(self):
        series = [6.0, 10.0] * 20
        p = fit_climatology(series)
        assert p.mu == pytest.approx(8.0)
        assert p.rho == 0.0  # raw lag-1 autocorrelation is -1, clamped

    def test_generate_and_refit_recovers_rho(self):
        rng = np.random.default_rng(7)
        rho, sigma = 0.9, 2.0
        n = 100_000
        x = np.empty(n)
        x[0] = 8.0
        innov = sigma * np.sqrt(1 - rho**2)
        noise = rng.normal(0.0, innov, size=n)
        for i in range(1, n):
            x[i] = 8.0 + rho * (x[i - 1] - 8.0) + noise[i]
        p = fit_climatology(x)
        assert p.rho == pytest.approx(0.9, abs=0.02)
        assert p.mu == pytest.approx(8.0, abs=0.1)

    def test_short_history_rejected(self):
        with pytest.raises(InsufficientHistory):
            fit_climatology([8.0] * 9)


class TestForecastWind:
    def test_persistence_limit_rho_one(self):
        p = ClimatologyParams(mu=8.0, sigma_inf=2.0, rho=1.0)
        e = forecast_wind(11.0, p, horizon_steps=20, n_scenarios=5, seed=1)
        assert np.all(e.scenarios == 11.0)

    def test_memoryless_limit_rho_zero(self):
        p = ClimatologyParams(mu=8.0, sigma_inf=0.0, rho=0.0)
        e = forecast_wind(15.0, p, horizon_steps=10, n_scenarios=3, seed=1)
        assert np.all(e.scenarios == 8.0)

    def test_mean_path_hand_value(self):
        # v_now=10, mu=8, rho=0.5 -> step 2 mean = 8 + 2 * 0.25 = 8.5
        p = ClimatologyParams(mu=8.0, sigma_inf=0.0, rho=0.5)
        e = forecast_wind(10.0, p, horizon_steps=4, n_scenarios=2, seed=1)
        assert e.scenarios[0, 1] == pytest.approx(8.5)

    def test_seed_determinism_is_bit_exact(self):
        p = ClimatologyParams(mu=9.0, sigma_inf=2.5, rho=0.9)
        a = forecast_wind(10.0, p, 48, 32, seed=42)
        b = forecast_wind(10.0, p, 48, 32, seed=42)
        assert np.array_equal(a.scenarios, b.scenarios)
        assert np.array_equal(a.quantiles, b.quantiles)

    def test_mean_reversion_of_mean_path(self):
        p = ClimatologyParams(mu=8.0, sigma_inf=0.0, rho=0.8)
        e = forecast_wind(14.0, p, horizon_steps=30, n_scenarios=1, seed=0)
        gaps = np.abs(e.scenarios[0] - 8.0)
        assert np.all(np.diff(gaps) <= 1e-12)

    def test_quantiles_nondecreasing_across_levels(self):
        p = ClimatologyParams(mu=9.0, sigma_inf=3.0, rho=0.7)
        e = forecast_wind(9.0, p, horizon_steps=24, n_scenarios=64, seed=11)
        assert np.all(np.diff(e.quantiles, axis=0) >= -1e-12)

    def test_scenarios_never_negative(self):
        p = ClimatologyParams(mu=1.0, sigma_inf=4.0, rho=0.3)
        e = forecast_wind(0.5, p, horizon_steps=40, n_scenarios=100, seed=3)
        assert np.all(e.scenarios >= 0.0)

    def test_marginal_std_matches_closed_form(self):
        p = ClimatologyParams(mu=20.0, sigma_inf=2.0, rho=0.8)
        # keep far from the 0 m/s clamp so truncation bias is negligible
        e = forecast_wind(20.0, p, horizon_steps=5, n_scenarios=40_000, seed=5)
        for k in range(5):
            expected = 2.0 * np.sqrt(1 - 0.8 ** (2 * (k + 1)))
            assert np.std(e.scenarios[:, k]) == pytest.approx(expected, rel=0.05)


class TestWindToPower:
    def test_dead_calm_gives_zero_quantiles(self):
        p = ClimatologyParams(mu=1.0, sigma_inf=0.2, rho=0.5)
        e = forecast_wind(1.0, p, horizon_steps=10, n_scenarios=20, seed=2)
        pf = wind_to_power(e, TURBINE)
        assert np.all(pf.quantiles == 0.0)

    def test_point_mass_at_rated_speed(self):
        p = ClimatologyParams(mu=12.0, sigma_inf=0.0, rho=1.0)
        e = forecast_wind(12.0, p, horizon_steps=5, n_scenarios=1, seed=2)
        pf = wind_to_power(e, TURBINE)
        assert np.all(pf.quantiles == pytest.approx(15000.0))

    def test_two_scenario_median_is_midpoint_of_powers(self):
        p = ClimatologyParams(mu=8.0, sigma_inf=0.0, rho=1.0)
        a = forecast_wind(6.0, p, horizon_steps=3, n_scenarios=1, seed=0)
        b = forecast_wind(12.0, p, horizon_steps=3, n_scenarios=1, seed=0)
        e = a.__class__(
            issued_at=0.0,
            step=900.0,
            horizon_steps=3,
            scenarios=np.vstack([a.scenarios, b.scenarios]),
            quantile_levels=(0.5,),
            quantiles=np.zeros((1, 3)),
        )
        pf = wind_to_power(e, TURBINE)
        lo, hi = 15000.0 / 9.0, 15000.0
        assert pf.quantiles[0] == pytest.approx((lo + hi) / 2.0)

    def test_power_quantiles_not_wind_quantiles_through_curve(self):
        # Half the scenarios above cut-out: median wind maps to garbage, the
        # median of powers must be used instead.
        scen = np.array([[26.0], [26.0], [10.0], [11.0]])
        e = forecast_wind(
            10.0, ClimatologyParams(mu=10, sigma_inf=0, rho=1), 1, 1, seed=0
        ).__class__(
            issued_at=0.0, step=900.0, horizon_steps=1, scenarios=scen,
            quantile_levels=(0.5,), quantiles=np.zeros((1, 1)),
        )
        pf = wind_to_power(e, TURBINE)
        powers = sorted(
            [0.0, 0.0, 15000.0 * (10**3 - 27) / (12**3 - 27), 15000.0 * (11**3 - 27) / (12**3 - 27)]
        )
        assert pf.quantiles[0, 0] == pytest.approx((powers[1] + powers[2]) / 2.0)


class TestRescaling:
    def test_rho_rescaling_is_consistent(self):
        p = ClimatologyParams(mu=10.0, sigma_inf=2.5, rho=0.95)  # per hour
        q = p.at_step(3600.0, 900.0)
        assert q.rho == pytest.approx(0.95**0.25)
        assert q.mu == p.mu and q.sigma_inf == p.sigma_inf

    def test_generator_matches_climatology_statistics(self):
        clim = ClimatologyParams(mu=10.0, sigma_inf=2.0, rho=0.9)
        gen = Ar1WindGenerator(climatology=clim, seed=13)
        xs = np.array([gen.sample() for _ in range(60_000)])
        assert np.mean(xs) == pytest.approx(10.0, abs=0.15)
        assert np.std(xs) == pytest.approx(2.0, abs=0.15)

    def test_generator_is_seed_deterministic(self):
        clim = ClimatologyParams(mu=10.0, sigma_inf=2.0, rho=0.9)
        a = Ar1WindGenerator(climatology=clim, seed=5)
        b = Ar1WindGenerator(climatology=clim, seed=5)
        assert [a.sample() for _ in range(100)] == [b.sample() for _ in range(100)]
