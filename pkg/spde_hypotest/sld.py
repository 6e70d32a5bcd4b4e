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
Closed-form analytics of the log-likelihood ratio ln L: its cumulant generating function
under θ₁, the large deviation rate function, the sharp large deviation decomposition and
saddle points, and the first-order Type I error corrections of both test families.

Notation shared by the functions below, for a tilt ε > ε₋ = −θ₁²/(θ₁²−θ₀²):

    s(ε) = θ₁² + ε(θ₁²−θ₀²),    𝒟(ε) = (θ₁ + ε(θ₁−θ₀))/√s(ε),
    c(ε) = (θ₁ + ε(θ₁−θ₀) − √s(ε))·M/2 = ε(ε+1)(θ₁−θ₀)²M / (2(θ₁ + ε(θ₁−θ₀) + √s(ε))).

The last form of c vanishes exactly at ε = 0 and ε = −1. Everything is returned in log
space; cosh(√s λ^{2β}T) is never formed.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np
import tensorflow as tf
from typing_extensions import Literal

from .base import ParameterDomainError, TensorType, UnsupportedRegimeError
from .rejection_regions import normal_quantile
from .spectral import SpectralBasis, eigenvalues, spectral_sum_M
from .stats import HypothesisPair
from .utilities import to_default_float

__all__ = [
    "SldContext",
    "SaddlePoint",
    "eps_minus",
    "eta_zero",
    "eta_null",
    "eta_upper",
    "cgf_logL",
    "c_limit",
    "rate_I",
    "ou_decomposition",
    "mode_decomposition",
    "saddle_T",
    "saddle_N",
    "a_T",
    "alpha1_T",
    "phi1_phi2",
    "alpha1_N",
    "ntilde_decomposition",
    "a_N",
]

Measure = Literal["alternative", "null"]

SERIES_RELATIVE_TOLERANCE = 1e-12
_SERIES_BLOCK = 64


@dataclass(frozen=True, eq=False)
class SldContext:
    hyp: HypothesisPair
    basis: SpectralBasis
    sigma: float
    horizon_T: float
    M: tf.Tensor = field(init=False)

    def __post_init__(self):
        if not self.horizon_T > 0:
            raise ParameterDomainError(f"horizon_T must be positive, got {self.horizon_T}")
        if self.sigma == 0:
            raise ParameterDomainError("sigma must be nonzero")
        object.__setattr__(self, "M", spectral_sum_M(self.basis))


@dataclass(frozen=True, eq=False)
class SaddlePoint:
    eta: tf.Tensor
    epsilon: tf.Tensor
    variance: tf.Tensor


def eps_minus(hyp: HypothesisPair) -> float:
    """Left end ε₋ = −θ₁²/(θ₁²−θ₀²) of the domain of c."""
    return -hyp.theta1 ** 2 / hyp.square_gap


def eta_zero(hyp: HypothesisPair, scale: float) -> float:
    """η₀ = (θ₁−θ₀)²·scale/(4θ₁), the zero of the rate function (scale is M or T)."""
    return hyp.gap ** 2 * scale / (4 * hyp.theta1)


def eta_null(hyp: HypothesisPair, scale: float) -> float:
    """−(θ₁−θ₀)²·scale/(4θ₀): the mean of ln L/T under θ₀, whose saddle point is ε = −1."""
    return -hyp.gap ** 2 * scale / (4 * hyp.theta0)


def eta_upper(hyp: HypothesisPair, scale: float) -> float:
    """(θ₁−θ₀)·scale/2: the rate function is infinite from here on."""
    return hyp.gap * scale / 2


def _check_eps(hyp: HypothesisPair, eps, offset: float = 0.0) -> None:
    lower = eps_minus(hyp) + offset
    if np.any(np.asarray(eps, dtype=np.float64) <= lower):
        raise ParameterDomainError(f"tilt must exceed {lower}, got {eps}")


def _tilt(hyp: HypothesisPair, eps) -> Tuple[tf.Tensor, tf.Tensor, tf.Tensor, tf.Tensor]:
    """(√s, 1 − 𝒟, 1 + 𝒟, (θ₁ + ε(θ₁−θ₀)) − √s) with cancellation-free differences."""
    _check_eps(hyp, eps)
    eps = to_default_float(eps)
    theta1 = to_default_float(hyp.theta1)
    gap = to_default_float(hyp.gap)
    linear = theta1 + eps * gap
    root = tf.sqrt(theta1 ** 2 + eps * to_default_float(hyp.square_gap))
    excess = eps * (eps + 1) * gap ** 2 / (linear + root)
    one_minus_d = -excess / root
    return root, one_minus_d, 2 - one_minus_d, excess


def _mode_remainders(basis: SpectralBasis, T, root, one_minus_d, one_plus_d) -> tf.Tensor:
    """Σ_k −½ log1p(((1−𝒟)/(1+𝒟)) e^{−2λ_k^{2β}T√s}), summed over the last axis."""
    exponent = 2 * root[..., None] * basis.powers(2 * basis.beta) * to_default_float(T)
    ratio = (one_minus_d / one_plus_d)[..., None]
    return -0.5 * tf.reduce_sum(tf.math.log1p(ratio * tf.exp(-exponent)), axis=-1)


def _h_term(one_minus_d) -> tf.Tensor:
    # −½ ln(½ + ½𝒟)
    return -0.5 * tf.math.log1p(-one_minus_d / 2)


def cgf_logL(ctx: SldContext, eps: TensorType, under: Measure = "alternative") -> tf.Tensor:
    """
    ln m_T(ε) = ln E_{θ₁}[exp(ε ln L)] = −½Σ_k ln(cosh(x_k) + 𝒟 sinh(x_k)) + (θ₁+ε(θ₁−θ₀))MT/2
    with x_k = √s λ_k^{2β}T, evaluated as T·c(ε) + N·(−½ln(½+½𝒟)) + remainders.

    With `under="null"` the expectation is taken under θ₀, which equals the θ₁ value at ε − 1.
    """
    if under == "null":
        return cgf_logL(ctx, np.asarray(eps, dtype=np.float64) - 1.0)
    if under != "alternative":
        raise ValueError(f"unknown measure {under!r}")
    root, one_minus_d, one_plus_d, excess = _tilt(ctx.hyp, eps)
    T = to_default_float(ctx.horizon_T)
    n_modes = to_default_float(ctx.basis.n_modes)
    return (
        T * ctx.M * excess / 2
        + n_modes * _h_term(one_minus_d)
        + _mode_remainders(ctx.basis, T, root, one_minus_d, one_plus_d)
    )


def c_limit(hyp: HypothesisPair, M: TensorType, eps: TensorType) -> tf.Tensor:
    """c(ε) = lim T⁻¹ ln m_T(ε) = (−√(ε(θ₁²−θ₀²)+θ₁²) + ε(θ₁−θ₀) + θ₁)·M/2."""
    *_, excess = _tilt(hyp, eps)
    return to_default_float(M) * excess / 2


def rate_I(hyp: HypothesisPair, M: TensorType, eta: TensorType) -> tf.Tensor:
    """
    Legendre–Fenchel transform of c:
    I(η) = −(4θ₁η − (θ₁−θ₀)²M)² / (8(2η − (θ₁−θ₀)M)(θ₁²−θ₀²)) for η < (θ₁−θ₀)M/2, +∞ otherwise.
    """
    M, eta = to_default_float(M), to_default_float(eta)
    theta1 = to_default_float(hyp.theta1)
    gap = to_default_float(hyp.gap)
    denominator = 8 * (2 * eta - gap * M) * to_default_float(hyp.square_gap)
    finite = eta < gap * M / 2
    safe_denominator = tf.where(finite, denominator, -tf.ones_like(denominator))
    value = -((4 * theta1 * eta - gap ** 2 * M) ** 2) / safe_denominator
    return tf.where(finite, value, tf.constant(np.inf, dtype=value.dtype))


def ou_decomposition(
    a: TensorType, b: TensorType, theta: TensorType, sigma: TensorType, T: TensorType
) -> Tuple[tf.Tensor, tf.Tensor, tf.Tensor]:
    """
    For the OU process du = θu dt + σ dw (θ < 0, u(0) = 0):

        ln E exp(a∫u du + b∫u² dt) = T·𝓛(a, b) + 𝓗(a, b) + 𝓡_T(a, b),

    𝓛 = −(aσ² + θ + ρ)/2, 𝓗 = −½ ln(½(1 − (aσ²+θ)/ρ)),
    𝓡_T = −½ ln(1 + ((1 + (aσ²+θ)/ρ)/(1 − (aσ²+θ)/ρ)) e^{−2Tρ}), ρ = √(θ² − 2bσ²),
    valid on Δ = {θ² − 2bσ² > 0, aσ² + θ < ρ}.
    """
    a, b, theta, sigma, T = (to_default_float(v) for v in (a, b, theta, sigma, T))
    if np.any(theta.numpy() >= 0):
        raise ParameterDomainError("the OU drift coefficient theta must be negative")
    sigma_sq = sigma ** 2
    radicand = theta ** 2 - 2 * b * sigma_sq
    if np.any(radicand.numpy() <= 0):
        raise ParameterDomainError("(a, b) outside Δ: θ² − 2bσ² must be positive")
    rho = tf.sqrt(radicand)
    shifted = a * sigma_sq + theta
    if np.any((shifted >= rho).numpy()):
        raise ParameterDomainError("(a, b) outside Δ: aσ² + θ must be below ρ")
    ratio = shifted / rho
    L = -(shifted + rho) / 2
    H = -0.5 * tf.math.log(0.5 * (1 - ratio))
    R = -0.5 * tf.math.log1p((1 + ratio) / (1 - ratio) * tf.exp(-2 * T * rho))
    return L, H, R


def mode_decomposition(
    ctx: SldContext, eps: TensorType, under: Measure = "alternative"
) -> Tuple[tf.Tensor, tf.Tensor, tf.Tensor]:
    """
    Per-mode (𝓛ᵏ, 𝓗ᵏ, 𝓡ᵏ_T) of ε·ln L through :func:`ou_decomposition`, with
    a_k = −ε(θ₁−θ₀)λ_k^{2β+2γ}/σ², b_k = −ε(θ₁²−θ₀²)λ_k^{4β+2γ}/(2σ²) and the mode drift of
    the chosen measure. Shapes are [..., N].
    """
    hyp, basis = ctx.hyp, ctx.basis
    true_theta = {"alternative": hyp.theta1, "null": hyp.theta0}[under]
    eps = to_default_float(eps)[..., None]
    sigma_sq = to_default_float(ctx.sigma ** 2)
    a = -eps * hyp.gap * basis.powers(2 * basis.beta + 2 * basis.gamma) / sigma_sq
    b = -eps * hyp.square_gap * basis.powers(4 * basis.beta + 2 * basis.gamma) / (2 * sigma_sq)
    theta = -true_theta * basis.powers(2 * basis.beta)
    mode_sigma = to_default_float(ctx.sigma) * basis.powers(-basis.gamma)
    return ou_decomposition(a, b, theta, mode_sigma, ctx.horizon_T)


def _saddle(hyp: HypothesisPair, scale, eta) -> SaddlePoint:
    upper = eta_zero(hyp, float(scale))
    if np.any(np.asarray(eta, dtype=np.float64) >= upper):
        raise ParameterDomainError(f"eta must be below {upper}, got {eta}")
    scale, eta = to_default_float(scale), to_default_float(eta)
    theta1 = to_default_float(hyp.theta1)
    gap, square_gap = to_default_float(hyp.gap), to_default_float(hyp.square_gap)
    slack = gap * scale - 2 * eta  # > 0 on the domain
    epsilon = ((square_gap * scale) ** 2 - 4 * theta1 ** 2 * slack ** 2) / (
        4 * square_gap * slack ** 2
    )
    variance = slack ** 3 / (square_gap * scale ** 2)
    return SaddlePoint(eta=eta, epsilon=epsilon, variance=variance)


def saddle_T(ctx: SldContext, eta: TensorType) -> SaddlePoint:
    """Tilt ε_η with c'(ε_η) = η and curvature ς_η² = c''(ε_η), for η < (θ₁−θ₀)²M/(4θ₁)."""
    return _saddle(ctx.hyp, ctx.M, eta)


def saddle_N(hyp: HypothesisPair, T: TensorType, eta: TensorType) -> SaddlePoint:
    """The many-modes saddle point: `saddle_T` with M replaced by T."""
    return _saddle(hyp, T, eta)


def a_T(ctx: SldContext, eta: TensorType) -> tf.Tensor:
    """
    ln A_T = −I(η)T − (N/2)ln(½ + ½𝒟(ε_η)) − ½Σ_k log1p(((1−𝒟)/(1+𝒟))e^{−2λ_k^{2β}T√s(ε_η)}).
    """
    saddle = saddle_T(ctx, eta)
    root, one_minus_d, one_plus_d, _ = _tilt(ctx.hyp, saddle.epsilon.numpy())
    T = to_default_float(ctx.horizon_T)
    n_modes = to_default_float(ctx.basis.n_modes)
    return (
        -rate_I(ctx.hyp, ctx.M, eta) * T
        + n_modes * _h_term(one_minus_d)
        + _mode_remainders(ctx.basis, T, root, one_minus_d, one_plus_d)
    )


def alpha1_T(
    hyp: HypothesisPair, N: int, M: TensorType, alpha: float, delta: float
) -> tf.Tensor:
    """
    First-order Type I correction of the large-horizon family:
    P_{θ₀}(reject) = α + α₁(δ)/√T + O(1/T) with
    α₁(δ) = e^{−q²/2}δ/√(2π) + e^{−q²/2}/(2√(πMθ₀))·((θ₁−θ₀)N/(2(θ₁+θ₀)) + 1 − q²).
    """
    q = normal_quantile(alpha)
    M = to_default_float(M)
    theta0 = to_default_float(hyp.theta0)
    density = tf.exp(-(q ** 2) / 2)
    correction = hyp.gap * N / (2 * (hyp.theta1 + hyp.theta0)) + 1 - q ** 2
    return density * to_default_float(delta) / math.sqrt(2 * math.pi) + density / (
        2 * tf.sqrt(math.pi * M * theta0)
    ) * correction


def _eigenvalue_heat_sum(basis: SpectralBasis, rate: float) -> float:
    """
    Σ_{k≥1} exp(−rate·λ_k^{2β}) over the whole spectrum of the basis' model, stopped once
    the next term is below SERIES_RELATIVE_TOLERANCE·(partial sum + 1e−300).
    """
    total, start = 0.0, 0
    while True:
        block = eigenvalues(basis.model, start + _SERIES_BLOCK).numpy()[start:]
        for lam in block:
            term = math.exp(-rate * float(lam) ** (2 * basis.beta))
            if term < SERIES_RELATIVE_TOLERANCE * (total + 1e-300):
                return total
            total += term
        start += _SERIES_BLOCK


def phi1_phi2(
    hyp: HypothesisPair, basis: SpectralBasis, T: float, delta: float, x: TensorType
) -> Tuple[tf.Tensor, tf.Tensor]:
    """
    The M^{−1/2} and N/M correction functions of the many-modes statistic:
    P_{θ₀}(S_N ≤ x + δ/√M) = Φ(x) + Φ₁^δ(x)/√M + Φ₂^δ(x)N/M + ...
    """
    theta0, theta1, gap = hyp.theta0, hyp.theta1, hyp.gap
    x = to_default_float(x)
    gauss = tf.exp(-(x ** 2) / 2)
    root = math.sqrt(math.pi * theta0 * T)
    series = _eigenvalue_heat_sum(basis, 2 * theta0 * T)
    phi1 = (
        gap / (4 * root * (theta1 + theta0)) * series
        + (1 - x ** 2) / (2 * root)
        + to_default_float(delta) / math.sqrt(2 * math.pi)
    ) * gauss
    phi2_scale = (
        gap
        * (5 * theta1 ** 2 + 6 * theta1 * theta0 - 3 * theta0 ** 2)
        / (8 * math.sqrt(2 * math.pi) * theta0 * (theta1 + theta0) * hyp.square_gap * T)
    )
    phi2 = phi2_scale * x * gauss
    return phi1, phi2


def _as_fraction(value) -> Fraction:
    return Fraction(value).limit_denominator(10 ** 6)


def alpha1_N(
    hyp: HypothesisPair,
    basis: SpectralBasis,
    T: float,
    alpha: float,
    delta: float,
    varpi: Optional[float] = None,
    beta_over_d: Optional[float] = None,
) -> tf.Tensor:
    """
    α̂₁(δ) = Φ₁^δ(q_α) if β/d > 1/2, Φ₁^δ(q_α) + √((2β/d+1)/ϖ^β)·Φ₂^δ(q_α) if β/d = 1/2.
    ϖ and β/d default to those of the basis' eigenvalue model.
    """
    ratio = (
        _as_fraction(basis.beta) / basis.dim if beta_over_d is None else _as_fraction(beta_over_d)
    )
    if ratio < Fraction(1, 2):
        raise UnsupportedRegimeError(f"the expansion requires β/d ≥ 1/2, got {ratio}")
    varpi = basis.varpi if varpi is None else varpi
    phi1, phi2 = phi1_phi2(hyp, basis, T, delta, normal_quantile(alpha))
    if ratio > Fraction(1, 2):
        return phi1
    return phi1 + math.sqrt((2 * float(ratio) + 1) / varpi ** basis.beta) * phi2


def ntilde_decomposition(
    hyp: HypothesisPair, basis: SpectralBasis, T: float, eps: TensorType
) -> Tuple[tf.Tensor, tf.Tensor, tf.Tensor]:
    """
    The many-modes split ln m_T(ε) = M·𝓛̃(ε) + N·𝓗̃(ε) + 𝓡̃_N(ε) with
    𝓛̃ = (T/2)(θ₁ + (θ₁−θ₀)ε − √s), 𝓗̃ = −½ln(½ + ½𝒟), 𝓡̃_N the sum of the mode remainders.
    """
    root, one_minus_d, one_plus_d, excess = _tilt(hyp, eps)
    T = to_default_float(T)
    return (
        T * excess / 2,
        _h_term(one_minus_d),
        _mode_remainders(basis, T, root, one_minus_d, one_plus_d),
    )


def a_N(hyp: HypothesisPair, basis: SpectralBasis, T: float, eta: TensorType) -> tf.Tensor:
    """ln Ã_N = −Ĩ(η)M + N·𝓗̃(ε̃_η) + 𝓡̃_N(ε̃_η), Ĩ being `rate_I` with M replaced by T."""
    saddle = saddle_N(hyp, T, eta)
    _, h_tilde, r_tilde = ntilde_decomposition(hyp, basis, T, saddle.epsilon.numpy())
    M = spectral_sum_M(basis)
    return -rate_I(hyp, T, eta) * M + to_default_float(basis.n_modes) * h_tilde + r_tilde
