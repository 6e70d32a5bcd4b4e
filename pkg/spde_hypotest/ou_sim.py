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
Exact simulation of the Fourier modes of the stochastic fractional heat equation

    du_k = −θλ_k^{2β} u_k dt + σλ_k^{−γ} dw_k,    u_k(0) = 0,

which are independent Ornstein–Uhlenbeck processes. Every grid step uses the exact
Gaussian transition, so the grid values carry no discretisation error.

Random numbers are counter based: replicate key `seed` selects a Philox stream through
:func:`~spde_hypotest.utilities.stream_seed`, and the standard normal for mode k and
step j is element (k, j) of `stateless_normal([N, m], seed)`. The result depends only on
(spec, seed), never on execution order.
"""

import logging
from dataclasses import dataclass, field
from numbers import Integral
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import tensorflow as tf
import tensorflow_probability as tfp

from .base import ParameterDomainError, TensorType
from .config import QUADRATURE_RULES, default_float, default_quadrature, default_steps_per_unit
from .quadrature import sample_bridge_integrals
from .spectral import SpectralBasis
from .utilities import format_float, stream_seed, to_default_float

__all__ = [
    "ModelSpec",
    "ModeTrajectories",
    "NoiseFn",
    "ou_step_moments",
    "simulate",
    "simulate_replicates",
]

logger = logging.getLogger(__name__)

NoiseFn = Callable[[Sequence[int], tf.Tensor, tf.DType], tf.Tensor]
"""Signature of a standard normal generator: (shape, stateless seed, dtype) -> tensor."""

TRANSITION_STREAM = 0
QUADRATURE_STREAM = 1


@dataclass(frozen=True)
class ModelSpec:
    """
    Parameters of one simulated experiment: true drift `theta`, noise intensity `sigma`,
    the first N eigenvalues in `basis`, observation horizon `horizon_T`, grid resolution
    and the quadrature rule used for ∫u² dt.
    """

    theta: float
    sigma: float
    basis: SpectralBasis
    horizon_T: float
    steps_per_unit: int = field(default_factory=default_steps_per_unit)
    quadrature: str = field(default_factory=default_quadrature)

    def __post_init__(self):
        if not self.theta > 0:
            raise ParameterDomainError(f"theta must be positive, got {self.theta}")
        if not np.isfinite(self.sigma) or self.sigma == 0:
            raise ParameterDomainError(f"sigma must be a nonzero real, got {self.sigma}")
        if not self.horizon_T > 0:
            raise ParameterDomainError(f"horizon_T must be positive, got {self.horizon_T}")
        if (
            isinstance(self.steps_per_unit, bool)
            or not isinstance(self.steps_per_unit, Integral)
            or self.steps_per_unit < 1
        ):
            raise ParameterDomainError(
                f"steps_per_unit must be a positive integer, got {self.steps_per_unit}"
            )
        if self.quadrature not in QUADRATURE_RULES:
            raise ParameterDomainError(
                f"quadrature must be one of {sorted(QUADRATURE_RULES)}, got {self.quadrature}"
            )

    @property
    def n_modes(self) -> int:
        return self.basis.n_modes

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.horizon_T * self.steps_per_unit)))

    @property
    def dt(self) -> float:
        return self.horizon_T / self.n_steps

    def grid(self) -> tf.Tensor:
        m = self.n_steps
        return to_default_float(np.arange(m + 1) * self.dt)  # [m + 1]

    def kappas(self) -> tf.Tensor:
        """Mean-reversion rates θλ_k^{2β}, [N]."""
        return to_default_float(self.theta) * self.basis.powers(2 * self.basis.beta)

    def noise_variances(self) -> tf.Tensor:
        """Squared diffusion coefficients σ²λ_k^{−2γ}, [N]."""
        return to_default_float(self.sigma ** 2) * self.basis.powers(-2 * self.basis.gamma)


@dataclass(frozen=True, eq=False)
class ModeTrajectories:
    """
    Sampled modes on the uniform grid.

    `values` is [N, m + 1] for one replicate, or [R, N, m + 1] for a batch of replicates
    in which case `seed` is the tuple of their keys. `step_integrals`, present under the
    bridge quadrature, holds ∫_{t_j}^{t_{j+1}} u_k² dt with shape [..., N, m].
    """

    grid: tf.Tensor
    values: tf.Tensor
    spec: ModelSpec
    seed: Union[int, Tuple[int, ...]]
    step_integrals: Optional[tf.Tensor] = None

    def __post_init__(self):
        grid = to_default_float(self.grid)
        values = to_default_float(self.values)
        if values.shape[-1] != grid.shape[0]:
            raise ValueError(
                f"values have {values.shape[-1]} time points but the grid has {grid.shape[0]}"
            )
        if values.shape[-2] != self.spec.n_modes:
            raise ValueError(
                f"values have {values.shape[-2]} modes, the model has {self.spec.n_modes}"
            )
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if self.step_integrals is not None:
            object.__setattr__(self, "step_integrals", to_default_float(self.step_integrals))

    @property
    def dt(self) -> tf.Tensor:
        return self.grid[1] - self.grid[0]

    def to_csv(self, path: str) -> None:
        """Writes `t,u_1,...,u_N`, one row per grid point, with `%.17g` formatting."""
        if len(self.values.shape) != 2:
            raise ValueError("only a single replicate can be written as a trajectory file")
        header = ",".join(["t"] + [f"u_{k + 1}" for k in range(self.spec.n_modes)])
        rows = np.column_stack([self.grid.numpy(), tf.transpose(self.values).numpy()])
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(header + "\n")
            for row in rows:
                f.write(",".join(format_float(v) for v in row) + "\n")


def ou_step_moments(
    theta: TensorType,
    lam: TensorType,
    beta: TensorType,
    gamma: TensorType,
    sigma: TensorType,
    dt: TensorType,
) -> Tuple[tf.Tensor, tf.Tensor]:
    """
    Exact Gaussian transition of one mode over a step dt:
    u(t + dt) | u(t) ~ N(decay·u(t), step_variance).

    :return: decay = exp(−κ dt) and step_variance = σ²λ^{−2γ}(1 − e^{−2κ dt})/(2κ) with
        κ = θλ^{2β}; both broadcast over the inputs.
    """
    theta, lam, beta, gamma, sigma, dt = (
        to_default_float(v) for v in (theta, lam, beta, gamma, sigma, dt)
    )
    kappa = theta * lam ** (2 * beta)
    decay = tf.exp(-kappa * dt)
    step_variance = -(sigma ** 2) * lam ** (-2 * gamma) * tf.math.expm1(-2 * kappa * dt)
    step_variance = step_variance / (2 * kappa)
    return decay, step_variance


def _compose_affine(earlier, later):
    # x ↦ a₂(a₁x + b₁) + b₂
    a1, b1 = earlier
    a2, b2 = later
    return a1 * a2, a2 * b1 + b2


def _standard_normal(shape, seed, dtype):
    return tf.random.stateless_normal(shape, seed=seed, dtype=dtype)


def simulate_replicates(
    spec: ModelSpec, seeds: Sequence[int], noise: Optional[NoiseFn] = None
) -> ModeTrajectories:
    """
    Simulates one replicate per key in `seeds`; replicate r is bitwise identical to
    `simulate(spec, seeds[r])`.

    The linear recursion u_{j+1} = a·u_j + b_j is solved for the whole grid at once with
    a parallel prefix scan over the affine maps (a, b_j).

    :param noise: replaces the standard normal generator of the transitions, e.g. to
        force zero noise. The bridge quadrature stream is not affected.
    :return: trajectories with values [R, N, m + 1].
    """
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    noise = _standard_normal if noise is None else noise
    dtype = default_float()
    n_modes, n_steps = spec.n_modes, spec.n_steps
    decay, step_variance = ou_step_moments(
        spec.theta, spec.basis.lambdas, spec.basis.beta, spec.basis.gamma, spec.sigma, spec.dt
    )  # [N], [N]

    normals = tf.stack(
        [
            tf.cast(noise([n_modes, n_steps], stream_seed(key, TRANSITION_STREAM), dtype), dtype)
            for key in seeds
        ]
    )  # [R, N, m]
    increments = tf.sqrt(step_variance)[:, None] * normals  # [R, N, m]
    b = tf.transpose(increments, [2, 0, 1])  # [m, R, N]
    a = tf.broadcast_to(decay, tf.shape(b))  # [m, R, N]
    _, states = tfp.math.scan_associative(_compose_affine, (a, b))  # [m, R, N]
    states = tf.concat([tf.zeros([1, len(seeds), n_modes], dtype=dtype), states], axis=0)
    values = tf.transpose(states, [1, 2, 0])  # [R, N, m + 1]

    step_integrals = None
    if spec.quadrature == "bridge":
        kappa = spec.kappas()[:, None]  # [N, 1]
        s2 = spec.noise_variances()[:, None]  # [N, 1]
        step_integrals = tf.stack(
            [
                sample_bridge_integrals(
                    values[r, :, :-1],
                    values[r, :, 1:],
                    kappa,
                    s2,
                    spec.dt,
                    stream_seed(key, QUADRATURE_STREAM),
                )
                for r, key in enumerate(seeds)
            ]
        )  # [R, N, m]

    logger.debug(
        "simulated %d replicates of %d modes over %d steps", len(seeds), n_modes, n_steps
    )
    return ModeTrajectories(spec.grid(), values, spec, seeds, step_integrals)


def simulate(spec: ModelSpec, seed: int, noise: Optional[NoiseFn] = None) -> ModeTrajectories:
    """
    Simulates the N modes of `spec` on its grid; `seed` is the replicate key.

    :return: trajectories with values [N, m + 1], values[:, 0] = 0.
    """
    batch = simulate_replicates(spec, [seed], noise=noise)
    step_integrals = None if batch.step_integrals is None else batch.step_integrals[0]
    return ModeTrajectories(batch.grid, batch.values[0], spec, int(seed), step_integrals)
