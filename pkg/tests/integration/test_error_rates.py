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

"""Type I errors, power, and comparisons of tests on common paths."""

import math

import numpy as np
import pytest

from spde_hypotest.ci_utils import ci_replicates
from spde_hypotest.montecarlo import McPlan, Under, compare_tests, estimate_error_rate
from spde_hypotest.ou_sim import ModelSpec
from spde_hypotest.rejection_regions import TestSpec
from spde_hypotest.sld import alpha1_N, alpha1_T
from spde_hypotest.spectral import ExactInterval1D, SpectralBasis, spectral_sum_M
from spde_hypotest.stats import HypothesisPair, Regime


def _template(n_modes, horizon_T, beta=1.0, steps_per_unit=10):
    basis = SpectralBasis.from_model(ExactInterval1D(), n_modes, beta, 1.0)
    return ModelSpec(1.0, 1.0, basis, horizon_T, steps_per_unit, "bridge")


@pytest.mark.parametrize("delta", [0.0, 1.0])
def test_large_horizon_type1_expansion(delta):
    hyp = HypothesisPair(1.0, 2.0)
    test = TestSpec(Regime.LARGE_T, 0.05, hyp, delta=delta)
    plan = McPlan(
        _template(5, 20.0), test, ci_replicates(10_000, minimum=2000), 700, sweep=(20.0, 50.0)
    )
    report = estimate_error_rate(plan, Under.NULL)

    M = float(spectral_sum_M(plan.spec.basis))
    first_order = float(alpha1_T(hyp, 5, M, 0.05, delta))
    for point in report.points:
        predicted = 0.05 + first_order / math.sqrt(point.parameter)
        assert point.diagnostics["predicted"] == pytest.approx(predicted, rel=1e-12)
        assert abs(point.estimate - predicted) <= 3 * point.standard_error


@pytest.mark.parametrize("beta", [1.0, 0.5])
def test_many_modes_type1_expansion(beta):
    hyp = HypothesisPair(1.0, 2.0)
    test = TestSpec(Regime.LARGE_N, 0.05, hyp)
    template = _template(100, 1.0, beta=beta)
    plan = McPlan(
        template,
        test,
        ci_replicates(10_000, minimum=2000),
        800,
        sweep=(100.0, 200.0),
        sweep_over="n_modes",
    )
    report = estimate_error_rate(plan, Under.NULL)

    for point in report.points:
        basis = plan.spec_at(point.parameter).basis
        M = float(spectral_sum_M(basis))
        predicted = 0.05 + float(alpha1_N(hyp, basis, 1.0, 0.05, 0.0)) / math.sqrt(M)
        assert np.isfinite(point.diagnostics["predicted"])
        assert point.diagnostics["predicted"] == pytest.approx(predicted, rel=1e-12)
        assert abs(point.estimate - predicted) <= 3 * point.standard_error


def test_power_is_essentially_one_at_long_horizons():
    test = TestSpec(Regime.LARGE_T, 0.05, HypothesisPair(1.0, 2.0))
    plan = McPlan(_template(5, 50.0), test, ci_replicates(10_000, minimum=2000), 900)
    (point,) = estimate_error_rate(plan, Under.ALTERNATIVE).points
    assert point.estimate >= 0.999
    assert point.diagnostics["type2"] == pytest.approx(1 - point.estimate)


def _comparison_plans(shift):
    hyp = HypothesisPair(1.0, 1.5)
    template = _template(2, 30.0, steps_per_unit=5)
    replicates = ci_replicates(20_000, minimum=5000)
    baseline = McPlan(template, TestSpec(Regime.LARGE_T, 0.05, hyp), replicates, 1200)
    shifted = McPlan(template, TestSpec(Regime.LARGE_T, 0.05, hyp, shift=shift), replicates, 1200)
    return baseline, shifted


def test_lowered_log_threshold_is_more_powerful():
    (point,) = compare_tests(*_comparison_plans(-1.0)).points
    diagnostics = point.diagnostics
    assert diagnostics["nested"] == 1.0
    assert point.estimate == pytest.approx(diagnostics["power_b"] - diagnostics["power_a"])
    assert point.estimate > 3 * point.standard_error
    assert diagnostics["type1_b"] >= diagnostics["type1_a"]


def test_raised_log_threshold_loses_power():
    (point,) = compare_tests(*_comparison_plans(1.0)).points
    diagnostics = point.diagnostics
    assert diagnostics["nested"] == 1.0
    assert point.estimate <= 0
    assert diagnostics["type1_b"] <= diagnostics["type1_a"]
