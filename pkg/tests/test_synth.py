"""Tests for synthetic series and benchmark metrics."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st, settings

from kfino.bench.metrics import accuracy, mse
from kfino.bench.synth import corrupt, sample_times, simulate_ou, simulate_series
from kfino.models.wow import WowParams
from kfino.utils.exceptions import DimensionError, EmptySeries, TimeOrderError, ValidationError

PARAMS = WowParams()


class TestSampleTimes:
    """Poisson observation times."""

    def test_sorted_inside_horizon(self):
        times = sample_times(1.0, 100.0, seed=1)
        assert np.all(np.diff(times) > 0)
        assert np.all((times > 0) & (times <= 100.0))

    def test_count_matches_rate(self):
        counts = [sample_times(2.0, 50.0, seed).size for seed in range(200)]
        assert np.mean(counts) == pytest.approx(100.0, abs=3.0)

    @pytest.mark.parametrize("rate, horizon, field", [(0.0, 10.0, "rate"), (1.0, -1.0, "horizon")])
    def test_positive_settings_required(self, rate, horizon, field):
        with pytest.raises(ValidationError, match=field):
            sample_times(rate, horizon, seed=0)


class TestSimulateSeries:
    """Hidden paths and corruption."""

    def test_same_seed_same_series(self):
        first = simulate_series(PARAMS, 1.0, 50.0, seed=7)
        second = simulate_series(PARAMS, 1.0, 50.0, seed=7)
        np.testing.assert_array_equal(first.times, second.times)
        np.testing.assert_array_equal(first.x_hidden, second.x_hidden)
        np.testing.assert_array_equal(first.y_obs, second.y_obs)
        np.testing.assert_array_equal(first.z_true, second.z_true)
        assert len(first) == first.times.size

    def test_different_seeds_differ(self):
        first = simulate_series(PARAMS, 1.0, 50.0, seed=7)
        second = simulate_series(PARAMS, 1.0, 50.0, seed=8)
        assert not np.array_equal(first.times, second.times)

    def test_path_starts_near_prior(self):
        starts = [simulate_ou(PARAMS, [1.0, 2.0], seed)[0] for seed in range(400)]
        assert np.mean(starts) == pytest.approx(PARAMS.mu1, abs=0.2)
        assert np.var(starts) == pytest.approx(PARAMS.sigma1, abs=0.25)

    def test_stationary_start_stays_stationary(self):
        variance = PARAMS.sigma_m2 / (2 * PARAMS.a)
        params = WowParams(mu1=PARAMS.m, sigma1=variance)
        finals = [simulate_ou(params, [1.0, 40.0, 250.0], seed)[-1] for seed in range(10_000)]
        assert np.mean(finals) == pytest.approx(PARAMS.m, abs=0.25)
        assert np.var(finals) == pytest.approx(variance, rel=0.05)

    def test_empty_times(self):
        assert simulate_ou(PARAMS, [], seed=0).size == 0

    def test_unordered_times_rejected(self):
        with pytest.raises(TimeOrderError):
            simulate_ou(PARAMS, [2.0, 1.0], seed=0)

    def test_no_outliers(self):
        x = np.full(500, 50.0)
        y, z = corrupt(x, PARAMS.with_theta(40.0, 1.0, 60.0), seed=3)
        assert z.all()
        assert np.std(y - x) == pytest.approx(math.sqrt(PARAMS.sigma_p2), rel=0.1)

    def test_only_outliers_follow_trapezoid(self):
        x = np.full(20_000, 50.0)
        y, z = corrupt(x, PARAMS.with_theta(40.0, 0.0, 60.0), seed=3)
        assert not z.any()
        assert np.all((y >= 10.0) & (y <= 100.0))
        assert np.mean(y) == pytest.approx(65.0, abs=0.5)

    def test_exact_measurements(self):
        params = WowParams(sigma_p2=0.0)
        series = simulate_series(params, 1.0, 50.0, seed=5)
        np.testing.assert_array_equal(series.y_obs[series.z_true], series.x_hidden[series.z_true])

    def test_inlier_fraction(self):
        x = np.full(20_000, 50.0)
        _, z = corrupt(x, PARAMS, seed=11)
        assert z.mean() == pytest.approx(PARAMS.p, abs=0.02)


class TestMetrics:
    """Error and accuracy measures."""

    def test_mse_example(self):
        assert mse([0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]) == pytest.approx(math.sqrt(2) / 4)
        assert mse([1.0, 2.0], [1.0, 2.0]) == 0.0

    @given(scale=st.floats(min_value=0.01, max_value=100.0))
    @settings(max_examples=30)
    def test_mse_is_homogeneous(self, scale):
        x = np.array([1.0, -2.0, 0.5])
        x_hat = np.array([0.0, 1.0, 0.5])
        assert mse(scale * x, scale * x_hat) == pytest.approx(scale * mse(x, x_hat), rel=1e-12)

    def test_accuracy_example(self):
        assert accuracy([True, True, False, False], [True, False, False, False]) == 0.75
        assert accuracy([True, False], [False, True]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            mse([1.0, 2.0], [1.0])
        with pytest.raises(DimensionError):
            accuracy([True], [True, False])

    def test_empty_rejected(self):
        with pytest.raises(EmptySeries):
            mse([], [])
