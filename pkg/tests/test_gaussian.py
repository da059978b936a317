"""Tests for Gaussian beliefs, step models and the Kalman primitives."""
import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st, settings
from scipy.integrate import quad
from scipy.stats import norm

from kfino.core.gaussian import (
    kalman_propagate,
    kalman_update,
    log_gaussian_pdf,
    predictive_obs_params,
    update_stack,
)
from kfino.core.wow import TrapezoidDensity, UniformDensity
from kfino.models.gaussian import GaussianBelief, StepModel
from kfino.utils.exceptions import DimensionError, SingularCovariance, ValidationError

DENSITY = UniformDensity(0.0, 100.0)


def random_spd(rng, n):
    root = rng.normal(size=(n, n))
    return root @ root.T + n * np.eye(n)


class DoubleMass:
    """Log-density that integrates to 2 over its support."""
    support = (0.0, 1.0)

    def __call__(self, y):
        return math.log(2.0)


@dataclasses.dataclass
class MutableUniform:
    """Constant density 1/4 on [low, high]; mutable, hence unhashable."""
    low: float
    high: float

    @property
    def support(self):
        return self.low, self.high

    def __call__(self, y):
        return -math.log(4.0)


class TestLogGaussianPdf:
    """Log-density evaluation."""

    def test_standard_normal_at_mean(self):
        assert log_gaussian_pdf(0.0, 0.0, 1.0) == pytest.approx(-0.918938533, abs=1e-9)

    def test_variance_six_at_mean(self):
        value = log_gaussian_pdf(40.0, 40.0, 6.0)
        assert value == pytest.approx(-0.5 * math.log(12 * math.pi), abs=1e-12)
        assert value == pytest.approx(-1.8148, abs=1e-4)

    @given(
        mu=st.floats(min_value=-100, max_value=100),
        delta=st.floats(min_value=-50, max_value=50),
        var=st.floats(min_value=0.01, max_value=100),
    )
    @settings(max_examples=100)
    def test_symmetric_around_mean(self, mu, delta, var):
        """For any offset, the density is symmetric around the mean."""
        assert log_gaussian_pdf(mu + delta, mu, var) == pytest.approx(
            log_gaussian_pdf(mu - delta, mu, var), rel=1e-9, abs=1e-9
        )

    @given(y=st.floats(min_value=-20, max_value=20), var=st.floats(min_value=0.1, max_value=10))
    @settings(max_examples=50)
    def test_matches_scipy(self, y, var):
        assert log_gaussian_pdf(y, 1.0, var) == pytest.approx(
            norm.logpdf(y, loc=1.0, scale=math.sqrt(var)), abs=1e-10
        )

    def test_integrates_to_one(self):
        mass, _ = quad(lambda y: math.exp(log_gaussian_pdf(y, 3.0, 2.5)), -math.inf, math.inf)
        assert mass == pytest.approx(1.0, abs=1e-6)

    def test_far_tail_stays_finite(self):
        """Log space keeps values that would underflow as densities."""
        assert log_gaussian_pdf(1e4, 0.0, 1.0) == pytest.approx(-0.5 * 1e8 - 0.918938533, rel=1e-12)

    def test_multivariate_matches_scipy(self):
        from scipy.stats import multivariate_normal
        rng = np.random.default_rng(3)
        cov = random_spd(rng, 3)
        mean = rng.normal(size=3)
        y = rng.normal(size=3)
        assert log_gaussian_pdf(y, mean, cov) == pytest.approx(
            multivariate_normal(mean, cov).logpdf(y), abs=1e-10
        )

    def test_singular_covariance_rejected(self):
        with pytest.raises(SingularCovariance):
            log_gaussian_pdf([0.0, 0.0], [0.0, 0.0], [[1.0, 1.0], [1.0, 1.0]])

    def test_singular_covariance_names_step(self):
        with pytest.raises(SingularCovariance, match="step 7") as exc_info:
            log_gaussian_pdf(0.0, 0.0, 0.0, step_index=7)
        assert exc_info.value.step == 7

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            log_gaussian_pdf([0.0, 1.0], [0.0], [[1.0]])


class TestGaussianBelief:
    """Belief construction."""

    def test_scalar(self):
        belief = GaussianBelief.scalar(40.0, 1.0)
        assert belief.dim == 1
        assert belief.mean.tolist() == [40.0]
        assert belief.cov.tolist() == [[1.0]]
        assert belief.is_valid()

    def test_mismatched_shapes_rejected(self):
        with pytest.raises(DimensionError):
            GaussianBelief([0.0, 1.0], [[1.0]])

    def test_arrays_are_read_only(self):
        belief = GaussianBelief.scalar(0.0, 1.0)
        with pytest.raises(ValueError):
            belief.mean[0] = 1.0

    def test_asymmetric_cov_is_invalid(self):
        assert not GaussianBelief([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]]).is_valid()


class TestStepModel:
    """Step model validation."""

    def test_scalar_defaults(self):
        step = StepModel.scalar(outlier_logpdf=DENSITY)
        assert step.state_dim == 1
        assert step.obs_dim == 1
        assert step.p_inlier == 1.0

    def test_negative_q_rejected(self):
        with pytest.raises(ValidationError, match="Q"):
            StepModel.scalar(Q=-1.0, outlier_logpdf=DENSITY)

    def test_negative_r_rejected(self):
        with pytest.raises(ValidationError, match="R"):
            StepModel.scalar(R=-0.5, outlier_logpdf=DENSITY)

    @given(p=st.one_of(st.floats(max_value=-1e-9), st.floats(min_value=1.000001, max_value=10)))
    @settings(max_examples=30)
    def test_probability_out_of_range_rejected(self, p):
        with pytest.raises(ValidationError, match="p_inlier"):
            StepModel.scalar(p_inlier=p, outlier_logpdf=DENSITY)

    def test_unnormalized_density_rejected(self):
        with pytest.raises(ValidationError, match="integrate"):
            StepModel.scalar(outlier_logpdf=DoubleMass())

    def test_trapezoid_density_accepted(self):
        StepModel.scalar(outlier_logpdf=TrapezoidDensity(10.0, 100.0))

    def test_unhashable_density_accepted(self):
        density = MutableUniform(0.0, 4.0)
        step = StepModel.scalar(outlier_logpdf=density)
        assert step.outlier_logpdf is density
        density.high = 8.0
        with pytest.raises(ValidationError, match="integrate"):
            StepModel.scalar(outlier_logpdf=density)

    def test_inconsistent_shapes_rejected(self):
        with pytest.raises(DimensionError):
            StepModel(
                A=np.eye(2), b=[0.0], Q=np.zeros((2, 2)), C=[[1.0, 0.0]], d=[0.0], R=[[1.0]],
                p_inlier=1.0, outlier_logpdf=DENSITY,
            )


class TestKalmanPropagate:
    """Prediction step."""

    def test_identity_dynamics(self):
        belief = kalman_propagate(GaussianBelief.scalar(0.0, 1.0), StepModel.scalar(outlier_logpdf=DENSITY))
        assert belief.mean[0] == 0.0
        assert belief.cov[0, 0] == 1.0

    def test_ou_like_step(self):
        step = StepModel.scalar(A=0.999, b=0.06, Q=0.05, outlier_logpdf=DENSITY)
        belief = kalman_propagate(GaussianBelief.scalar(40.0, 1.0), step)
        assert belief.mean[0] == pytest.approx(40.02, abs=1e-12)
        assert belief.cov[0, 0] == pytest.approx(1.048001, abs=1e-12)

    @given(angle=st.floats(min_value=0, max_value=2 * math.pi), seed=st.integers(0, 1000))
    @settings(max_examples=50)
    def test_rotation_preserves_trace(self, angle, seed):
        """For any rotation without noise, the covariance trace is preserved."""
        rotation = [[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]]
        step = StepModel(
            A=rotation, b=[0.0, 0.0], Q=np.zeros((2, 2)), C=[[1.0, 0.0]], d=[0.0], R=[[1.0]],
            p_inlier=1.0, outlier_logpdf=DENSITY,
        )
        cov = random_spd(np.random.default_rng(seed), 2)
        belief = kalman_propagate(GaussianBelief([1.0, 2.0], cov), step)
        assert np.trace(belief.cov) == pytest.approx(np.trace(cov), rel=1e-12)
        assert belief.is_valid()

    def test_dimension_mismatch_rejected(self):
        step = StepModel.scalar(outlier_logpdf=DENSITY)
        with pytest.raises(DimensionError):
            kalman_propagate(GaussianBelief([0.0, 0.0], np.eye(2)), step)


class TestKalmanUpdate:
    """Correction step."""

    def test_conjugate_normal(self):
        belief = kalman_update(GaussianBelief.scalar(0.0, 1.0), 2.0, StepModel.scalar(outlier_logpdf=DENSITY))
        assert belief.mean[0] == pytest.approx(1.0, abs=1e-15)
        assert belief.cov[0, 0] == pytest.approx(0.5, abs=1e-15)

    @given(mean=st.floats(min_value=-100, max_value=100), var=st.floats(min_value=0.01, max_value=100))
    @settings(max_examples=50)
    def test_zero_innovation_keeps_mean(self, mean, var):
        step = StepModel.scalar(d=1.5, R=2.0, outlier_logpdf=DENSITY)
        belief = kalman_update(GaussianBelief.scalar(mean, var), mean + 1.5, step)
        assert belief.mean[0] == pytest.approx(mean, abs=1e-12)

    def test_uninformative_observation(self):
        step = StepModel.scalar(R=1e12, outlier_logpdf=DENSITY)
        belief = kalman_update(GaussianBelief.scalar(3.0, 2.0), 50.0, step)
        assert belief.mean[0] == pytest.approx(3.0, rel=1e-6)
        assert belief.cov[0, 0] == pytest.approx(2.0, rel=1e-6)

    def test_singular_innovation_rejected(self):
        step = StepModel.scalar(R=0.0, outlier_logpdf=DENSITY)
        with pytest.raises(SingularCovariance, match="step 4"):
            kalman_update(GaussianBelief.scalar(0.0, 0.0), 1.0, step, step_index=4)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=50)
    def test_joseph_form_and_shrinkage(self, seed):
        """For random PD inputs the update matches the Joseph form and never inflates."""
        rng = np.random.default_rng(seed)
        cov = random_spd(rng, 3)
        R = random_spd(rng, 2)
        C = rng.normal(size=(2, 3))
        step = StepModel(
            A=np.eye(3), b=np.zeros(3), Q=np.zeros((3, 3)), C=C, d=rng.normal(size=2), R=R,
            p_inlier=1.0, outlier_logpdf=lambda y: 0.0,
        )
        prior = GaussianBelief(rng.normal(size=3), cov)
        posterior = kalman_update(prior, rng.normal(size=2), step)

        gain = cov @ C.T @ np.linalg.inv(C @ cov @ C.T + R)
        shrink = np.eye(3) - gain @ C
        joseph = shrink @ cov @ shrink.T + gain @ R @ gain.T
        np.testing.assert_allclose(posterior.cov, joseph, rtol=1e-8, atol=1e-10)
        assert posterior.is_valid()
        assert np.all(np.linalg.eigvalsh(cov - posterior.cov) >= -1e-10)


class TestPredictiveObsParams:
    """Predictive distribution of an inlier observation."""

    def test_scalar(self):
        mean, cov = predictive_obs_params(
            GaussianBelief.scalar(40.0, 1.0), StepModel.scalar(R=5.0, outlier_logpdf=DENSITY)
        )
        assert mean[0] == 40.0
        assert cov[0, 0] == 6.0

    def test_zero_observation_matrix(self):
        step = StepModel.scalar(C=0.0, d=7.0, R=3.0, outlier_logpdf=DENSITY)
        mean, cov = predictive_obs_params(GaussianBelief.scalar(40.0, 1.0), step)
        assert mean[0] == 7.0
        assert cov[0, 0] == 3.0

    def test_noiseless_observation(self):
        step = StepModel.scalar(R=0.0, outlier_logpdf=DENSITY)
        mean, cov = predictive_obs_params(GaussianBelief.scalar(12.0, 1.0), step)
        assert mean[0] == 12.0
        assert cov[0, 0] == 1.0

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            predictive_obs_params(GaussianBelief([0.0, 0.0], np.eye(2)), StepModel.scalar(outlier_logpdf=DENSITY))


class TestUpdateStack:
    """Stacked correction with a scalar observation."""

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=30)
    def test_matches_closed_form(self, seed):
        rng = np.random.default_rng(seed)
        means = rng.normal(size=(4, 2))
        covs = np.stack([random_spd(rng, 2) for _ in range(4)])
        C = rng.normal(size=(1, 2))
        step = StepModel(
            A=np.eye(2), b=np.zeros(2), Q=np.zeros((2, 2)), C=C, d=[0.5], R=[[1.5]],
            p_inlier=1.0, outlier_logpdf=DENSITY,
        )
        y = np.array([rng.normal()])
        new_means, new_covs, log_lik = update_stack(means, covs, y, step)
        for h in range(4):
            variance = (C @ covs[h] @ C.T)[0, 0] + 1.5
            gain = (covs[h] @ C.T)[:, 0] / variance
            innovation = y[0] - (C @ means[h])[0] - 0.5
            np.testing.assert_allclose(new_means[h], means[h] + gain * innovation, rtol=1e-10, atol=1e-12)
            np.testing.assert_allclose(
                new_covs[h], covs[h] - np.outer(gain, C @ covs[h]), rtol=1e-10, atol=1e-12
            )
            assert log_lik[h] == pytest.approx(norm.logpdf(innovation, scale=math.sqrt(variance)), abs=1e-10)

    def test_zero_variance_in_stack_rejected(self):
        step = StepModel.scalar(R=0.0, outlier_logpdf=DENSITY)
        covs = np.array([[[1.0]], [[0.0]]])
        with pytest.raises(SingularCovariance, match="step 3"):
            update_stack(np.zeros((2, 1)), covs, np.array([1.0]), step, step_index=3)
