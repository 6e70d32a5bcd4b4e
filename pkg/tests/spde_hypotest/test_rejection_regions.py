import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats as scipy_stats

from spde_hypotest.base import ParameterDomainError, UsageError
from spde_hypotest.ou_sim import ModelSpec, simulate_replicates
from spde_hypotest.rejection_regions import (
    TestSpec,
    decide,
    log_threshold_N,
    log_threshold_T,
    normal_cdf,
    normal_quantile,
    outcome_from_log_lr,
    statistic_I_T,
    statistic_S_N,
)
from spde_hypotest.spectral import ExactInterval1D, SpectralBasis, spectral_sum_M
from spde_hypotest.stats import HypothesisPair, Regime, log_likelihood_ratio, sufficient_stats
from spde_hypotest.utilities import replicate_key

HYP = HypothesisPair(1.0, 2.0)


def _basis(n_modes=1, beta=1.0):
    return SpectralBasis.from_model(ExactInterval1D(), n_modes, beta, 1.0)


@pytest.mark.parametrize("p", [1e-10, 0.001, 0.05, 0.5, 0.9, 1 - 1e-6])
def test_normal_quantile(p):
    assert_allclose(normal_quantile(p).numpy(), scipy_stats.norm.ppf(p), rtol=1e-9)
    assert_allclose(normal_cdf(normal_quantile(p)).numpy(), p, rtol=1e-12)


def test_normal_cdf_tails():
    assert_allclose(normal_cdf(-30.0).numpy(), scipy_stats.norm.cdf(-30.0), rtol=1e-10)
    assert normal_cdf(0.0).numpy() == pytest.approx(0.5, abs=1e-16)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, [0.5, 1.5]])
def test_normal_quantile_domain(p):
    with pytest.raises(ParameterDomainError):
        normal_quantile(p)


@pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5])
def test_test_spec_domain(alpha):
    with pytest.raises(ParameterDomainError):
        TestSpec(Regime.LARGE_T, alpha, HYP)


def test_test_spec_accepts_regime_values():
    assert TestSpec("large-n", 0.05, HYP).regime is Regime.LARGE_N


def test_log_threshold_T_example():
    spec = TestSpec(Regime.LARGE_T, 0.05, HYP)
    expected = -1 - 1.5 * math.sqrt(2) * scipy_stats.norm.ppf(0.05)
    assert_allclose(log_threshold_T(spec, 1.0, 4.0).numpy(), expected, rtol=1e-12)
    assert_allclose(log_threshold_T(spec, 1.0, 4.0).numpy(), 2.48926, rtol=1e-4)


def test_log_threshold_T_delta_term():
    plain = TestSpec(Regime.LARGE_T, 0.1, HYP)
    corrected = TestSpec(Regime.LARGE_T, 0.1, HYP, delta=1.0)
    difference = log_threshold_T(corrected, 2.0, 3.0) - log_threshold_T(plain, 2.0, 3.0)
    assert_allclose(difference.numpy(), -3 * math.sqrt(2) / math.sqrt(8), rtol=1e-14)


def test_log_threshold_N_example():
    spec = TestSpec(Regime.LARGE_N, 0.05, HYP)
    basis = _basis(1)
    q = scipy_stats.norm.ppf(0.05)
    expected = -1 / 4 + 1 / 8 - 3 / math.sqrt(8) * q
    assert_allclose(log_threshold_N(spec, basis, 1.0).numpy(), expected, rtol=1e-12)
    assert_allclose(expected, 1.619631, atol=1e-6)


def test_threshold_regime_mismatch():
    with pytest.raises(UsageError):
        log_threshold_T(TestSpec(Regime.LARGE_N, 0.05, HYP), 1.0, 1.0)
    with pytest.raises(UsageError):
        log_threshold_N(TestSpec(Regime.LARGE_T, 0.05, HYP), _basis(), 1.0)


def test_statistic_examples():
    assert_allclose(statistic_I_T(0.0, HYP, 1.0, 2.0).numpy(), -1 / 3, rtol=1e-14)
    assert_allclose(statistic_S_N(0.0, HYP, 1.0, 1, 1.0).numpy(), -0.11785, atol=1e-5)


def test_statistics_decrease_in_log_lr():
    log_lr = np.linspace(-5.0, 5.0, 11)
    assert np.all(np.diff(statistic_I_T(log_lr, HYP, 3.0, 2.0).numpy()) < 0)
    assert np.all(np.diff(statistic_S_N(log_lr, HYP, 3.0, 2, 2.0).numpy()) < 0)


@pytest.mark.parametrize("regime", list(Regime))
@pytest.mark.parametrize("delta, shift", [(0.0, 0.0), (0.7, 0.0), (-0.4, 1.3), (0.0, -2.0)])
def test_both_representations_agree(regime, delta, shift):
    rng = np.random.RandomState(0)
    basis = _basis(3)
    spec = TestSpec(regime, 0.05, HYP, delta=delta, shift=shift)
    log_lr = rng.randn(10000) * 5 + 2
    outcome = outcome_from_log_lr(spec, log_lr, basis, 2.0)
    threshold_form = outcome.statistic.numpy() <= outcome.threshold.numpy()
    # rounding can only disagree within a hair of the threshold
    away = np.abs(log_lr - outcome.log_threshold_lr.numpy()) > 1e-9
    assert_array_equal(outcome.reject.numpy()[away], threshold_form[away])


def test_ties_reject():
    spec = TestSpec(Regime.LARGE_T, 0.05, HYP)
    basis = _basis(2)
    threshold = log_threshold_T(spec, spectral_sum_M(basis), 3.0)
    outcome = outcome_from_log_lr(spec, threshold, basis, 3.0)
    assert bool(outcome.reject.numpy())


def test_shift_moves_the_log_threshold():
    basis = _basis(2)
    plain = outcome_from_log_lr(TestSpec(Regime.LARGE_N, 0.05, HYP), 0.0, basis, 1.0)
    shifted_test = TestSpec(Regime.LARGE_N, 0.05, HYP, shift=-0.5)
    shifted = outcome_from_log_lr(shifted_test, 0.0, basis, 1.0)
    assert_allclose(
        shifted.log_threshold_lr.numpy(), plain.log_threshold_lr.numpy() - 0.5, rtol=1e-14
    )
    assert shifted.threshold.numpy() > plain.threshold.numpy()


def test_regions_grow_with_alpha_and_delta():
    basis = _basis(2)
    log_lr = np.linspace(-20.0, 20.0, 401)
    counts = []
    for alpha, delta in [(0.01, 0.0), (0.05, 0.0), (0.05, 1.0), (0.2, 1.0)]:
        spec = TestSpec(Regime.LARGE_T, alpha, HYP, delta=delta)
        counts.append(int(np.sum(outcome_from_log_lr(spec, log_lr, basis, 5.0).reject.numpy())))
    assert counts == sorted(counts)
    assert counts[0] < counts[-1]


def test_decide_matches_log_likelihood():
    basis = _basis(2)
    spec = ModelSpec(1.0, 1.0, basis, 3.0, steps_per_unit=20)
    stats = sufficient_stats(simulate_replicates(spec, [replicate_key(1, r) for r in range(5)]))
    test = TestSpec(Regime.LARGE_T, 0.05, HYP)
    outcome = decide(test, stats)
    log_lr = log_likelihood_ratio(stats, HYP).numpy()
    assert_allclose(outcome.log_lr.numpy(), log_lr)
    expected = log_lr >= log_threshold_T(test, spectral_sum_M(basis), 3.0).numpy()
    assert_array_equal(outcome.reject.numpy(), expected)
