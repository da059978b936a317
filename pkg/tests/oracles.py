"""Dense joint-Gaussian reference computations for scalar models.

Conditionally on an indicator path the model is a joint Gaussian over
(X_1..X_N, Y_1..Y_N); these helpers compute its moments directly, without
any recursion, and enumerate every path for small N.
"""
import itertools
import math

import numpy as np
from scipy.special import logsumexp
from scipy.stats import multivariate_normal

from kfino.core.wow import TrapezoidDensity
from kfino.models.gaussian import GaussianBelief, StepModel


def random_scalar_steps(rng, n, p=0.5, density=TrapezoidDensity(10.0, 100.0)):
    """Random scalar steps with moderate dynamics and noise."""
    steps = []
    for k in range(n):
        steps.append(StepModel.scalar(
            A=1.0 if k == 0 else rng.uniform(0.8, 1.0),
            b=0.0 if k == 0 else rng.uniform(-1.0, 6.0),
            Q=0.0 if k == 0 else rng.uniform(0.05, 2.0),
            R=rng.uniform(1.0, 5.0),
            p_inlier=p,
            outlier_logpdf=density,
            index=k + 1,
        ))
    return steps


def random_series(rng, n, p=0.5):
    """Random steps, prior and observations inside the outlier support."""
    steps = random_scalar_steps(rng, n, p)
    init = GaussianBelief.scalar(rng.uniform(35.0, 45.0), rng.uniform(0.5, 2.0))
    ys = rng.uniform(30.0, 60.0, size=n)
    return ys, steps, init


def prior_moments(steps, init):
    """Mean vector and covariance matrix of X_1..X_N."""
    n = len(steps)
    mean = np.empty(n)
    cov = np.empty((n, n))
    mean[0] = init.mean[0]
    cov[0, 0] = init.cov[0, 0]
    for k in range(1, n):
        A, b, Q = steps[k].A[0, 0], steps[k].b[0], steps[k].Q[0, 0]
        mean[k] = A * mean[k - 1] + b
        cov[k, :k] = A * cov[k - 1, :k]
        cov[:k, k] = cov[k, :k]
        cov[k, k] = A * A * cov[k - 1, k - 1] + Q
    return mean, cov


def condition(steps, init, ys, inliers):
    """Posterior of X_1..X_N given the observations marked as inliers.

    Returns:
        Tuple of (posterior mean, posterior covariance, log-density of the
        inlier observations)
    """
    mean, cov = prior_moments(steps, init)
    idx = np.flatnonzero(np.asarray(inliers, dtype=bool))
    if idx.size == 0:
        return mean, cov, 0.0
    ys = np.asarray(ys, dtype=float)
    C = np.array([steps[k].C[0, 0] for k in idx])
    d = np.array([steps[k].d[0] for k in idx])
    R = np.array([steps[k].R[0, 0] for k in idx])
    y_mean = C * mean[idx] + d
    y_cov = C[:, None] * cov[np.ix_(idx, idx)] * C[None, :] + np.diag(R)
    cross = cov[:, idx] * C[None, :]
    gain = np.linalg.solve(y_cov, cross.T).T
    post_mean = mean + gain @ (ys[idx] - y_mean)
    post_cov = cov - gain @ cross.T
    loglik = float(multivariate_normal(y_mean, y_cov).logpdf(ys[idx]))
    return post_mean, post_cov, loglik


def filtered(steps, init, ys, inliers):
    """Mean and variance of X_k given the first k observations, for every k."""
    means = []
    variances = []
    for k in range(1, len(steps) + 1):
        post_mean, post_cov, _ = condition(steps[:k], init, ys[:k], inliers[:k])
        means.append(post_mean[-1])
        variances.append(post_cov[-1, -1])
    return np.array(means), np.array(variances)


def path_log_joint(steps, init, ys, path):
    """log P(z) + log l_z of one indicator path."""
    _, _, gauss = condition(steps, init, ys, path)
    total = gauss
    for k, inlier in enumerate(path):
        p = steps[k].p_inlier
        if inlier:
            total += math.log(p) if p > 0 else -math.inf
        else:
            total += math.log(1.0 - p) if p < 1 else -math.inf
            total += steps[k].outlier_logpdf(np.array([ys[k]]))
    return total


def enumerate_paths(steps, init, ys):
    """Log joint of every path, keyed by the tuple of indicators."""
    return {
        path: path_log_joint(steps, init, ys, path)
        for path in itertools.product((False, True), repeat=len(steps))
    }


def enumerate_loglik(steps, init, ys):
    """Log-likelihood summed over all 2^N paths."""
    return float(logsumexp(list(enumerate_paths(steps, init, ys).values())))
