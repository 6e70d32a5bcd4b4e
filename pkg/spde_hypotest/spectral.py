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
Eigenvalue models of the negative fractional Laplacian with Dirichlet boundary
conditions. Every quantity in the package depends on the spatial domain only through
λ_k, the square roots of the eigenvalues of −Δ, so a model is just a rule k ↦ λ_k.
"""

import math
from dataclasses import dataclass, field
from numbers import Integral

import numpy as np
import tensorflow as tf
from multipledispatch import Dispatcher

from .base import ParameterDomainError, TensorData
from .utilities import compensated_sum, to_default_float

__all__ = [
    "EigenvalueModel",
    "ExactInterval1D",
    "PowerLaw",
    "SpectralBasis",
    "eigenvalues",
    "spectral_sum_M",
]


class EigenvalueModel:
    """Base class of the eigenvalue models; λ_k² ≈ ϖ·k^{2/d} for large k."""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def varpi(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class ExactInterval1D(EigenvalueModel):
    """−Δ on (0, length): λ_k = kπ/length, so the default length π gives λ_k = k."""

    length: float = math.pi

    def __post_init__(self):
        if not self.length > 0:
            raise ParameterDomainError(f"interval length must be positive, got {self.length}")

    @property
    def dim(self) -> int:
        return 1

    @property
    def varpi(self) -> float:
        return (math.pi / self.length) ** 2


@dataclass(frozen=True)
class PowerLaw(EigenvalueModel):
    """λ_k = ϖ^{1/2}·k^{1/d}: the eigenvalue asymptotics realised with equality."""

    varpi: float = 1.0
    d: int = 1

    def __post_init__(self):
        if not self.varpi > 0:
            raise ParameterDomainError(f"varpi must be positive, got {self.varpi}")
        if isinstance(self.d, bool) or not isinstance(self.d, Integral) or self.d < 1:
            raise ParameterDomainError(f"d must be a positive integer, got {self.d}")

    @property
    def dim(self) -> int:
        return int(self.d)


eigenvalues = Dispatcher("eigenvalues")


def _mode_indices(n) -> np.ndarray:
    if n < 1:
        raise ParameterDomainError(f"number of modes must be at least 1, got {n}")
    return np.arange(1, int(n) + 1, dtype=np.float64)


@eigenvalues.register(ExactInterval1D, Integral)
def _eigenvalues_interval(model: ExactInterval1D, n: int) -> tf.Tensor:
    k = _mode_indices(n)
    return to_default_float(k * (math.pi / model.length))  # [n]


@eigenvalues.register(PowerLaw, Integral)
def _eigenvalues_power_law(model: PowerLaw, n: int) -> tf.Tensor:
    k = _mode_indices(n)
    return to_default_float(math.sqrt(model.varpi) * k ** (1.0 / model.d))  # [n]


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """
    The first N values λ_1 ≤ … ≤ λ_N together with the fractional orders β (drift) and
    γ (noise colouring). `model` is the eigenvalue model the λ_k come from; it supplies
    d and ϖ, and the tail of the spectrum for infinite series.

    The constructor enforces 2γ > d, the well-posedness condition of the equation.
    """

    lambdas: TensorData
    beta: float
    gamma: float
    model: EigenvalueModel = field(default_factory=ExactInterval1D)

    def __post_init__(self):
        values = np.asarray(self.lambdas, dtype=np.float64).reshape(-1)
        if values.size == 0:
            raise ParameterDomainError("a spectral basis needs at least one eigenvalue")
        if not np.all(values > 0):
            raise ParameterDomainError("eigenvalues must be positive")
        if np.any(np.diff(values) < 0):
            raise ParameterDomainError("eigenvalues must be nondecreasing")
        if not self.beta > 0:
            raise ParameterDomainError(f"beta must be positive, got {self.beta}")
        if not self.gamma >= 0:
            raise ParameterDomainError(f"gamma must be non-negative, got {self.gamma}")
        if not 2 * self.gamma > self.model.dim:
            raise ParameterDomainError(
                f"2·gamma > d is required, got gamma={self.gamma}, d={self.model.dim}"
            )
        object.__setattr__(self, "lambdas", to_default_float(values))

    @classmethod
    def from_model(
        cls, model: EigenvalueModel, n_modes: int, beta: float, gamma: float
    ) -> "SpectralBasis":
        return cls(eigenvalues(model, n_modes), beta, gamma, model)

    def __eq__(self, other):
        """Bases are equal when their orders, models and eigenvalues are."""
        if not isinstance(other, SpectralBasis):
            return NotImplemented
        return (
            (self.beta, self.gamma, self.model) == (other.beta, other.gamma, other.model)
            and self.lambdas.dtype == other.lambdas.dtype
            and np.array_equal(self.lambdas.numpy(), other.lambdas.numpy())
        )

    def __hash__(self):
        return hash((self.beta, self.gamma, self.model, self.lambdas.numpy().tobytes()))

    @property
    def n_modes(self) -> int:
        return int(self.lambdas.shape[0])

    @property
    def dim(self) -> int:
        return self.model.dim

    @property
    def varpi(self) -> float:
        return self.model.varpi

    def powers(self, exponent: float) -> tf.Tensor:
        """λ_k^exponent for every mode, [N]."""
        return self.lambdas ** to_default_float(exponent)


def spectral_sum_M(basis: SpectralBasis) -> tf.Tensor:
    """M = Σ_k λ_k^{2β}, summed without rounding drift."""
    terms = np.asarray(basis.lambdas, dtype=np.float64) ** (2.0 * basis.beta)
    return to_default_float(compensated_sum(terms))
