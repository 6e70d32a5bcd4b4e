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
Likelihood-ratio tests of ℋ₀: θ = θ₀ against ℋ₁: θ = θ₁ with asymptotically sharp
thresholds.

Each regime has a threshold on ln L and an equivalent affine statistic of ln L with a
Gaussian threshold:

* large horizon: ln L ≥ ln c_α^δ(T)  ⟺  I_T ≤ q_α + δ/√T,
* many modes:    ln L ≥ ln ĉ_α^δ(N)  ⟺  S_N ≤ q_α + δ/√M.

q_α is the lower α-quantile of the standard normal law. Both statistics decrease in ln L,
so the regions grow with α and δ. Comparisons are made in log space, ties reject.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np
import tensorflow as tf
import tensorflow_probability as tfp

from .base import ParameterDomainError, TensorType, UsageError
from .spectral import SpectralBasis, spectral_sum_M
from .stats import HypothesisPair, Regime, SufficientStats, log_likelihood_ratio
from .utilities import to_default_float

__all__ = [
    "TestSpec",
    "TestOutcome",
    "normal_quantile",
    "normal_cdf",
    "log_threshold_T",
    "statistic_I_T",
    "log_threshold_N",
    "statistic_S_N",
    "decide",
    "outcome_from_log_lr",
]


@dataclass(frozen=True)
class TestSpec:
    """
    Level `alpha`, first-order correction `delta` and hypotheses of a test in the given
    regime. `shift` (β̄) moves the log-threshold to ln c + β̄; a negative shift enlarges the
    rejection region.
    """

    __test__ = False  # not a pytest class

    regime: Regime
    alpha: float
    hyp: HypothesisPair
    delta: float = 0.0
    shift: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if not 0 < self.alpha < 1:
            raise ParameterDomainError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True, eq=False)
class TestOutcome:
    """Both representations of a decision; `reject` follows the likelihood form."""

    __test__ = False

    statistic: tf.Tensor
    threshold: tf.Tensor
    reject: tf.Tensor
    log_lr: tf.Tensor
    log_threshold_lr: tf.Tensor


def _standard_normal() -> tfp.distributions.Normal:
    zero = to_default_float(0.0)
    return tfp.distributions.Normal(loc=zero, scale=zero + 1)


def normal_cdf(x: TensorType) -> tf.Tensor:
    """Φ(x), accurate in both tails."""
    return _standard_normal().cdf(to_default_float(x))


def normal_quantile(p: TensorType) -> tf.Tensor:
    """Φ⁻¹(p) for p in (0, 1), polished with one Newton step against Φ."""
    if np.any((np.asarray(p) <= 0) | (np.asarray(p) >= 1)):
        raise ParameterDomainError(f"quantile level must lie in (0, 1), got {p}")
    normal = _standard_normal()
    p = to_default_float(p)
    q = normal.quantile(p)
    return q - (normal.cdf(q) - p) / normal.prob(q)


def _check_regime(spec: TestSpec, regime: Regime) -> None:
    if spec.regime is not regime:
        raise UsageError(f"threshold for {regime.value} called with a {spec.regime.value} test")


def _slope(hyp: HypothesisPair, M, T) -> tf.Tensor:
    # d(statistic)/d(ln L), shared by both regimes
    theta0 = to_default_float(hyp.theta0)
    return -tf.sqrt(8 * theta0 ** 3) / (to_default_float(hyp.square_gap) * tf.sqrt(T * M))


def log_threshold_T(spec: TestSpec, M: TensorType, T: TensorType) -> tf.Tensor:
    """
    ln c_α^δ(T) = −(θ₁−θ₀)²MT/(4θ₀) − ((θ₁²−θ₀²)/(2θ₀))√(MT/(2θ₀))·q_α
                  − δ(θ₁²−θ₀²)√M/√(8θ₀³).
    """
    _check_regime(spec, Regime.LARGE_T)
    hyp = spec.hyp
    M, T = to_default_float(M), to_default_float(T)
    theta0 = to_default_float(hyp.theta0)
    gap, square_gap = to_default_float(hyp.gap), to_default_float(hyp.square_gap)
    q = normal_quantile(spec.alpha)
    return (
        -(gap ** 2) * M * T / (4 * theta0)
        - square_gap / (2 * theta0) * tf.sqrt(M * T / (2 * theta0)) * q
        - to_default_float(spec.delta) * square_gap * tf.sqrt(M) / tf.sqrt(8 * theta0 ** 3)
    )


def statistic_I_T(log_lr: TensorType, hyp: HypothesisPair, M: TensorType, T: TensorType):
    """I_T = −√(8θ₀³)/((θ₁²−θ₀²)√(TM))·ln L − (θ₁−θ₀)√(θ₀TM/2)/(θ₁+θ₀)."""
    M, T = to_default_float(M), to_default_float(T)
    theta0 = to_default_float(hyp.theta0)
    offset = to_default_float(hyp.gap) * tf.sqrt(theta0 * T * M / 2) / (hyp.theta1 + hyp.theta0)
    return _slope(hyp, M, T) * to_default_float(log_lr) - offset


def log_threshold_N(spec: TestSpec, basis: SpectralBasis, T: TensorType) -> tf.Tensor:
    """
    ln ĉ_α^δ(N) = −(θ₁−θ₀)²TM/(4θ₀) + (θ₁−θ₀)²N/(8θ₀²)
                  − (√(TM)(θ₁²−θ₀²)/√(8θ₀³))·q_α − (√T(θ₁²−θ₀²)/√(8θ₀³))·δ.
    """
    _check_regime(spec, Regime.LARGE_N)
    hyp = spec.hyp
    M, T = spectral_sum_M(basis), to_default_float(T)
    n_modes = to_default_float(basis.n_modes)
    theta0 = to_default_float(hyp.theta0)
    gap, square_gap = to_default_float(hyp.gap), to_default_float(hyp.square_gap)
    root = tf.sqrt(8 * theta0 ** 3)
    q = normal_quantile(spec.alpha)
    return (
        -(gap ** 2) * T * M / (4 * theta0)
        + gap ** 2 * n_modes / (8 * theta0 ** 2)
        - tf.sqrt(T * M) * square_gap / root * q
        - tf.sqrt(T) * square_gap / root * to_default_float(spec.delta)
    )


def statistic_S_N(
    log_lr: TensorType, hyp: HypothesisPair, M: TensorType, N: int, T: TensorType
) -> tf.Tensor:
    """
    S_N = Y^N − X^N = −√(8θ₀³)/((θ₁²−θ₀²)√(TM))·ln L − √(2θ₀TM)(θ₁−θ₀)/(2(θ₁+θ₀))
                      + (θ₁−θ₀)N/(√(8θ₀TM)(θ₁+θ₀)).
    """
    M, T = to_default_float(M), to_default_float(T)
    theta0 = to_default_float(hyp.theta0)
    gap = to_default_float(hyp.gap)
    total = hyp.theta1 + hyp.theta0
    return (
        _slope(hyp, M, T) * to_default_float(log_lr)
        - tf.sqrt(2 * theta0 * T * M) * gap / (2 * total)
        + gap * to_default_float(N) / (tf.sqrt(8 * theta0 * T * M) * total)
    )


def outcome_from_log_lr(
    spec: TestSpec, log_lr: TensorType, basis: SpectralBasis, horizon_T: TensorType
) -> TestOutcome:
    """Decision for already computed ln L values of any shape."""
    log_lr = to_default_float(log_lr)
    M, T = spectral_sum_M(basis), to_default_float(horizon_T)
    q = normal_quantile(spec.alpha)
    delta = to_default_float(spec.delta)
    if spec.regime is Regime.LARGE_T:
        log_threshold = log_threshold_T(spec, M, T)
        statistic = statistic_I_T(log_lr, spec.hyp, M, T)
        threshold = q + delta / tf.sqrt(T)
    else:
        log_threshold = log_threshold_N(spec, basis, T)
        statistic = statistic_S_N(log_lr, spec.hyp, M, basis.n_modes, T)
        threshold = q + delta / tf.sqrt(M)
    shift = to_default_float(spec.shift)
    log_threshold = log_threshold + shift
    threshold = threshold + _slope(spec.hyp, M, T) * shift
    return TestOutcome(
        statistic=statistic,
        threshold=threshold,
        reject=log_lr >= log_threshold,
        log_lr=log_lr,
        log_threshold_lr=log_threshold,
    )


def decide(spec: TestSpec, stats: SufficientStats) -> TestOutcome:
    """Computes ln L of the observation and rejects ℋ₀ iff ln L ≥ the log-threshold."""
    log_lr = log_likelihood_ratio(stats, spec.hyp)
    return outcome_from_log_lr(spec, log_lr, stats.basis, stats.horizon_T)
