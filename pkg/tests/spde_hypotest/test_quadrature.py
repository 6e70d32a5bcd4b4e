import numpy as np
import pytest
import scipy.stats
import tensorflow as tf
from numpy.testing import assert_allclose

from spde_hypotest.quadrature import bridge_moments, sample_bridge_integrals, trapezoid
from spde_hypotest.utilities import stream_seed


def test_trapezoid_exact_for_linear():
    grid = np.linspace(0.0, 2.0, 11)
    values = 3.0 * grid + 1.0
    assert_allclose(trapezoid(values, grid[1] - grid[0]).numpy(), 8.0, rtol=1e-14)


def test_trapezoid_batched():
    values = np.ones([4, 3, 21])
    assert_allclose(trapezoid(values, 0.1).numpy(), np.full([4, 3], 2.0), rtol=1e-14)


# A Brownian bridge B on [0, 1] pinned at 0 has E∫B² = 1/6 and Var∫B² = 1/45. The OU bridge
# law depends on κ² only, so κ = 1e-2 stays within 1e-4 of it.
@pytest.mark.parametrize("level", [0.0, 2.0])
def test_bridge_moments_brownian_limit(level):
    x = tf.constant([[level]], dtype=tf.float64)
    mean, variance = bridge_moments(x, x, kappa=1e-2, s2=1.0, dt=1.0)
    assert_allclose(mean.numpy(), [[level ** 2 + 1 / 6]], rtol=1e-4)
    if level == 0.0:
        assert_allclose(variance.numpy(), [[1 / 45]], rtol=1e-4)


def test_bridge_mean_for_slow_modes():
    # Linear interpolation plus a Brownian bridge: Δ(x² + xy + y²)/3 + s²Δ²/6.
    rng = np.random.RandomState(1)
    x = rng.randn(2, 30)
    y = rng.randn(2, 30)
    s2 = np.array([[1.0], [0.25]])
    mean, variance = bridge_moments(x, y, 1e-3, s2, 1.0)
    expected = (x ** 2 + x * y + y ** 2) / 3 + s2 / 6
    assert_allclose(mean.numpy(), expected, rtol=1e-5)
    assert np.all(variance.numpy() > 0)


def test_sample_bridge_integrals():
    rng = np.random.RandomState(1)
    x = np.repeat(rng.randn(2, 1), 20000, axis=1)
    y = np.repeat(rng.randn(2, 1), 20000, axis=1)
    kappa = np.array([[1.0], [25.0]])
    s2 = np.array([[1.0], [0.04]])
    seed = stream_seed(11, 1)
    draws = sample_bridge_integrals(x, y, kappa, s2, 0.5, seed).numpy()
    mean, variance = bridge_moments(x[:, :1], y[:, :1], kappa, s2, 0.5)
    assert np.all(draws >= 0)
    se = np.sqrt(variance.numpy()[:, 0] / draws.shape[1])
    assert np.all(np.abs(draws.mean(axis=1) - mean.numpy()[:, 0]) < 4 * se)
    assert_allclose(draws.var(axis=1), variance.numpy()[:, 0], rtol=0.1)
    again = sample_bridge_integrals(x, y, kappa, s2, 0.5, seed).numpy()
    np.testing.assert_array_equal(draws, again)


def test_bridge_integrals_follow_the_matched_gamma_law():
    x = np.full([1, 20000], 0.3)
    y = np.full([1, 20000], -0.8)
    kappa, s2, dt = np.array([[4.0]]), np.array([[0.5]]), 0.25
    draws = sample_bridge_integrals(x, y, kappa, s2, dt, stream_seed(12, 1)).numpy()[0]
    mean, variance = (m.numpy()[0, 0] for m in bridge_moments(x[:, :1], y[:, :1], kappa, s2, dt))
    matched = scipy.stats.gamma(a=mean ** 2 / variance, scale=variance / mean)
    assert scipy.stats.kstest(draws, matched.cdf).pvalue > 1e-3
