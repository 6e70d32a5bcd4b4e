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

"""Monte Carlo behaviour of the drift estimator and of long-run time averages."""

import math

import pytest

from spde_hypotest.ci_utils import ci_replicates
from spde_hypotest.montecarlo import McPlan, normality_check
from spde_hypotest.ou_sim import ModelSpec, simulate
from spde_hypotest.rejection_regions import TestSpec
from spde_hypotest.spectral import ExactInterval1D, SpectralBasis
from spde_hypotest.stats import HypothesisPair, Regime, sufficient_stats

HYP = HypothesisPair(1.0, 2.0)


def _normality_plan(regime, n_modes, horizon_T, base_seed):
    basis = SpectralBasis.from_model(ExactInterval1D(), n_modes, 1.0, 1.0)
    spec = ModelSpec(1.0, 1.0, basis, horizon_T, steps_per_unit=10, quadrature="bridge")
    replicates = ci_replicates(5000, minimum=2000)
    return McPlan(spec, TestSpec(regime, 0.05, HYP), replicates, base_seed)


def _ks_gate(n):
    # 1.63/√n is the 1% critical value of the Kolmogorov distance
    return max(0.03, 1.63 / math.sqrt(n))


@pytest.mark.parametrize(
    "regime, n_modes, horizon_T, base_seed",
    [(Regime.LARGE_T, 5, 100.0, 501), (Regime.LARGE_N, 200, 1.0, 601)],
)
def test_mle_is_asymptotically_normal(regime, n_modes, horizon_T, base_seed):
    plan = _normality_plan(regime, n_modes, horizon_T, base_seed)
    (point,) = normality_check(plan, regime).points
    diagnostics = point.diagnostics

    assert abs(diagnostics["mle_mean"] - 1.0) <= 3 * diagnostics["mle_se"]
    assert 0.9 <= diagnostics["variance"] <= 1.1
    assert diagnostics["ks_distance"] < _ks_gate(plan.replicates)
    assert diagnostics["low_power"] == 0.0


@pytest.mark.parametrize(
    "horizon_T, steps_per_unit, quadrature, tolerance",
    [
        (200.0, 100, "trapezoid", 3 * math.sqrt(2 / 200.0)),
        (1e4, 10, "bridge", 0.05),
    ],
)
def test_time_average_reaches_the_stationary_mean(
    horizon_T, steps_per_unit, quadrature, tolerance
):
    theta, sigma = 1.0, 1.0
    basis = SpectralBasis.from_model(ExactInterval1D(), 1, 1.0, 1.0)
    spec = ModelSpec(theta, sigma, basis, horizon_T, steps_per_unit, quadrature)
    stats = sufficient_stats(simulate(spec, seed=1300))
    average = float(stats.weighted_int_u_sq) / horizon_T
    stationary = sigma ** 2 / (2 * theta)  # λ₁ = 1
    assert abs(average / stationary - 1) < tolerance
