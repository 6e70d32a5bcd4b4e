# Copyright 2020 The spde_hypotest Contributors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Time integrals of squared modes on a uniform grid.

`trapezoid` integrates the grid values directly. `bridge_moments` gives the exact
conditional mean and variance of ∫_{t_j}^{t_j+Δ} u² dt given the grid values at both ends
of a step, for the OU dynamics du = −κu dt + s dW; `sample_bridge_integrals` draws the step
integrals from the moment-matched Gamma law.
"""

import tensorflow as tf

from .base import TensorType

__all__ = ["trapezoid", "bridge_moments", "sample_bridge_integrals"]


def trapezoid(values: TensorType, dt: TensorType) -> tf.Tensor:
    """
    :param values: [..., m + 1] samples on a uniform grid.
    :param dt: grid spacing.
    :return: [...] trapezoidal approximation of the integral.
    """
    return dt * tf.reduce_sum(values[..., 1:] + values[..., :-1], axis=-1) / 2


def _bridge_log_laplace(lam, x, y, kappa, s2, dt):
    """
    ln E[exp(−λ∫₀^Δ u² dt) | u(0) = x, u(Δ) = y]. By Girsanov the tilted path law is an OU
    law with rate ρ = √(κ² + 2λs²), times exp((ρ − κ)(y² − x² − s²Δ)/(2s²)), so the
    functional is a ratio of Gaussian transition densities.
    """
    rho = tf.sqrt(kappa ** 2 + 2 * lam * s2)
    v_rho = -s2 * tf.math.expm1(-2 * rho * dt) / (2 * rho)
    v_kappa = -s2 * tf.math.expm1(-2 * kappa * dt) / (2 * kappa)
    mean_rho = x * tf.exp(-rho * dt)
    mean_kappa = x * tf.exp(-kappa * dt)
    return (
        -0.5 * tf.math.log(v_rho)
        - (y - mean_rho) ** 2 / (2 * v_rho)
        + 0.5 * tf.math.log(v_kappa)
        + (y - mean_kappa) ** 2 / (2 * v_kappa)
        + (rho - kappa) * (y ** 2 - x ** 2 - s2 * dt) / (2 * s2)
    )


def bridge_moments(x: TensorType, y: TensorType, kappa: TensorType, s2: TensorType, dt):
    """
    Conditional mean and variance of a step integral ∫u² dt given its endpoints, as
    −K'(0) and K''(0) of the conditional cumulant function K(λ) = ln E[e^{−λ∫u²}|x, y].

    All arguments broadcast together; `kappa` and `s2` are typically [N, 1] against
    endpoints of shape [..., N, m].
    """
    x = tf.convert_to_tensor(x)
    y = tf.convert_to_tensor(y, dtype=x.dtype)
    kappa = tf.cast(kappa, x.dtype)
    s2 = tf.cast(s2, x.dtype)
    dt = tf.cast(dt, x.dtype)
    lam = tf.zeros(tf.broadcast_dynamic_shape(tf.shape(x), tf.shape(kappa)), dtype=x.dtype)
    with tf.GradientTape() as outer:
        outer.watch(lam)
        with tf.GradientTape() as inner:
            inner.watch(lam)
            log_laplace = _bridge_log_laplace(lam, x, y, kappa, s2, dt)
        # K is elementwise in λ, so the gradient of its sum is the elementwise derivative.
        first = inner.gradient(log_laplace, lam)
    second = outer.gradient(first, lam)
    return -first, second


def sample_bridge_integrals(
    x: TensorType, y: TensorType, kappa: TensorType, s2: TensorType, dt, seed: tf.Tensor
) -> tf.Tensor:
    """
    Draws every step integral of one replicate from the Gamma law with the exact
    conditional mean and variance. Steps whose variance underflows take the mean.

    :param x: [N, m] left endpoints.
    :param y: [N, m] right endpoints.
    :param seed: stateless seed of the replicate's quadrature stream.
    :return: [N, m] step integrals.
    """
    mean, variance = bridge_moments(x, y, kappa, s2, dt)
    tiny = tf.cast(1e-300, mean.dtype)
    usable = (mean > 0) & (variance > tiny * tf.maximum(mean, tiny) ** 2)
    safe_variance = tf.where(usable, variance, tf.ones_like(variance))
    concentration = tf.where(usable, mean ** 2 / safe_variance, tf.ones_like(mean))
    rate = tf.where(usable, mean / safe_variance, tf.ones_like(mean))
    draws = tf.random.stateless_gamma(
        tf.shape(mean), seed=seed, alpha=concentration, beta=rate, dtype=mean.dtype
    )
    return tf.where(usable, draws, tf.maximum(mean, 0))
