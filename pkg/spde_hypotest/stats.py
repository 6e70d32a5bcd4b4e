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

import enum
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import tensorflow as tf

from .base import EstimationDegenerateError, ParameterDomainError, TensorType
from .ou_sim import ModeTrajectories
from .quadrature import trapezoid
from .spectral import SpectralBasis, spectral_sum_M
from .utilities import to_default_float

__all__ = [
    "Regime",
    "SufficientStats",
    "HypothesisPair",
    "sufficient_stats",
    "mle",
    "log_likelihood_ratio",
    "estimator_error_standardized",
    "noise_integrals",
    "split_statistics",
]


class Regime(enum.Enum):
    """Asymptotic regime: long observation horizon, or many Fourier modes."""

    LARGE_T = "large-t"
    LARGE_N = "large-n"


@dataclass(frozen=True)
class HypothesisPair:
    """Simple hypotheses ℋ₀: θ = theta0 against ℋ₁: θ = theta1, with theta1 > theta0 > 0."""

    theta0: float
    theta1: float

    def __post_init__(self):
        if not self.theta0 > 0:
            raise ParameterDomainError(f"theta0 must be positive, got {self.theta0}")
        if not self.theta1 > self.theta0:
            raise ParameterDomainError(
                f"theta1 must exceed theta0, got theta0={self.theta0}, theta1={self.theta1}"
            )

    @property
    def gap(self) -> float:
        return self.theta1 - self.theta0

    @property
    def square_gap(self) -> float:
        return self.theta1 ** 2 - self.theta0 ** 2


@dataclass(frozen=True, eq=False)
class SufficientStats:
    """
    u_k(T)² and ∫₀ᵀ u_k² dt for every mode; the last axis indexes modes and any leading
    axes index replicates.
    """

    terminal_sq: TensorType
    int_u_sq: TensorType
    basis: SpectralBasis
    sigma: float
    horizon_T: float

    def __post_init__(self):
        terminal_sq = to_default_float(self.terminal_sq)
        int_u_sq = to_default_float(self.int_u_sq)
        for name, value in (("terminal_sq", terminal_sq), ("int_u_sq", int_u_sq)):
            if value.shape[-1] != self.basis.n_modes:
                raise ValueError(
                    f"{name} has {value.shape[-1]} modes, the basis has {self.basis.n_modes}"
                )
            if np.any(value.numpy() < 0):
                raise ParameterDomainError(f"{name} must be non-negative")
        object.__setattr__(self, "terminal_sq", terminal_sq)
        object.__setattr__(self, "int_u_sq", int_u_sq)

    @property
    def ito_integrals(self) -> tf.Tensor:
        """∫₀ᵀ u_k du_k = (u_k(T)² − σ²λ_k^{−2γ}T)/2 by Itô's formula, [..., N]."""
        quadratic_variation = (
            to_default_float(self.sigma ** 2 * self.horizon_T)
            * self.basis.powers(-2 * self.basis.gamma)
        )
        return (self.terminal_sq - quadratic_variation) / 2

    @property
    def weighted_int_u_sq(self) -> tf.Tensor:
        """Σ_k λ_k^{4β+2γ}∫u_k² dt, [...]."""
        basis = self.basis
        return tf.reduce_sum(basis.powers(4 * basis.beta + 2 * basis.gamma) * self.int_u_sq, -1)

    @property
    def weighted_terminal_sq(self) -> tf.Tensor:
        """Σ_k λ_k^{2β+2γ}u_k(T)², [...]."""
        basis = self.basis
        return tf.reduce_sum(
            basis.powers(2 * basis.beta + 2 * basis.gamma) * self.terminal_sq, -1
        )


def sufficient_stats(traj: ModeTrajectories) -> SufficientStats:
    """
    Terminal squares from the last grid column. ∫u² dt comes from the bridge step integrals
    when the trajectories carry them, otherwise from the trapezoidal rule on the grid.
    """
    terminal_sq = traj.values[..., -1] ** 2
    if traj.step_integrals is not None:
        int_u_sq = tf.reduce_sum(traj.step_integrals, axis=-1)
    else:
        int_u_sq = trapezoid(traj.values ** 2, traj.dt)
    spec = traj.spec
    return SufficientStats(terminal_sq, int_u_sq, spec.basis, spec.sigma, spec.horizon_T)


def mle(stats: SufficientStats) -> tf.Tensor:
    """
    θ̂ = −Σλ_k^{2β+2γ}∫u_k du_k / Σλ_k^{4β+2γ}∫u_k² dt, with the stochastic integral taken
    from Itô's formula.
    """
    basis = stats.basis
    numerator = -tf.reduce_sum(
        basis.powers(2 * basis.beta + 2 * basis.gamma) * stats.ito_integrals, -1
    )
    denominator = stats.weighted_int_u_sq
    if np.any(denominator.numpy() <= 0):
        raise EstimationDegenerateError(
            "the path carries no information: Σλ^{4β+2γ}∫u²dt is zero"
        )
    return numerator / denominator


def log_likelihood_ratio(stats: SufficientStats, hyp: HypothesisPair) -> tf.Tensor:
    """
    ln L(θ₀, θ₁; U) = −(θ₁−θ₀)/(2σ²)·Σλ^{2β+2γ}u(T)² + (θ₁−θ₀)MT/2
                      − (θ₁²−θ₀²)/(2σ²)·Σλ^{4β+2γ}∫u² dt.
    """
    sigma_sq = to_default_float(stats.sigma ** 2)
    M = spectral_sum_M(stats.basis)
    T = to_default_float(stats.horizon_T)
    gap = to_default_float(hyp.gap)
    return (
        -gap / (2 * sigma_sq) * stats.weighted_terminal_sq
        + gap * M * T / 2
        - to_default_float(hyp.square_gap) / (2 * sigma_sq) * stats.weighted_int_u_sq
    )


def estimator_error_standardized(
    stats: SufficientStats, true_theta: float, regime: Regime
) -> tf.Tensor:
    """
    Scales θ̂ − θ by its asymptotic standard deviation:

    * LargeT: √T(θ̂−θ)√(M/(2θ)),
    * LargeN: N^{β/d+1/2}(θ̂−θ)√(ϖ^β T/((4β/d+2)θ)).

    θ̂ does not depend on σ, so neither does its limiting variance.
    """
    basis = stats.basis
    theta = to_default_float(true_theta)
    T = to_default_float(stats.horizon_T)
    error = mle(stats) - theta
    if Regime(regime) is Regime.LARGE_T:
        return tf.sqrt(T) * error * tf.sqrt(spectral_sum_M(basis) / (2 * theta))
    ratio = basis.beta / basis.dim
    n_modes = to_default_float(basis.n_modes)
    scale = n_modes ** (ratio + 0.5) * tf.sqrt(
        to_default_float(basis.varpi ** basis.beta) * T / ((4 * ratio + 2) * theta)
    )
    return scale * error


def noise_integrals(stats: SufficientStats, theta: float) -> tf.Tensor:
    """
    σλ_k^{2β+γ}∫₀ᵀ u_k dw_k reconstructed from the dynamics under drift `theta`:
    σλ^{−γ}dw = du + θλ^{2β}u dt, [..., N].
    """
    basis = stats.basis
    kappa = to_default_float(theta) * basis.powers(2 * basis.beta)
    return basis.powers(2 * basis.beta + 2 * basis.gamma) * (
        stats.ito_integrals + kappa * stats.int_u_sq
    )


def split_statistics(stats: SufficientStats, hyp: HypothesisPair) -> Tuple[tf.Tensor, tf.Tensor]:
    """
    The two terms of the many-modes statistic S_N = Y^N − X^N:

    X^N = √θ₀(θ₁−θ₀)/(σ²√(2TM)(θ₁+θ₀))·(Σλ^{2β+2γ}u(T)² − σ²N/(2θ₀)),
    Y^N = √(2θ₀)/(σ√(TM))·Σλ^{2β+γ}∫u dw, the noise integral taken under θ₀.
    """
    sigma_sq = to_default_float(stats.sigma ** 2)
    theta0 = to_default_float(hyp.theta0)
    theta1 = to_default_float(hyp.theta1)
    TM = to_default_float(stats.horizon_T) * spectral_sum_M(stats.basis)
    n_modes = to_default_float(stats.basis.n_modes)
    x_n = (
        tf.sqrt(theta0)
        * (theta1 - theta0)
        / (sigma_sq * tf.sqrt(2 * TM) * (theta1 + theta0))
        * (stats.weighted_terminal_sq - sigma_sq * n_modes / (2 * theta0))
    )
    y_n = (
        tf.sqrt(2 * theta0)
        / (sigma_sq * tf.sqrt(TM))
        * tf.reduce_sum(noise_integrals(stats, hyp.theta0), -1)
    )
    return x_n, y_n
