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

"""Deterministic identities of the cumulant generating function over random parameters."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import optimize

from spde_hypotest.sld import (
    SldContext,
    c_limit,
    cgf_logL,
    eps_minus,
    eta_null,
    eta_upper,
    mode_decomposition,
    ntilde_decomposition,
    rate_I,
    saddle_T,
)
from spde_hypotest.spectral import ExactInterval1D, SpectralBasis
from spde_hypotest.stats import HypothesisPair

rng = np.random.RandomState(20200601)


def _random_contexts(n):
    contexts = []
    for _ in range(n):
        theta0, theta1 = np.sort(rng.uniform(0.5, 3.0, size=2))
        if theta1 - theta0 < 0.05:
            theta1 = theta0 + 0.05
        basis = SpectralBasis.from_model(
            ExactInterval1D(), int(rng.randint(1, 11)), float(rng.choice([0.5, 1.0])), 1.0
        )
        horizon = float(rng.uniform(0.1, 20.0))
        sigma = float(rng.uniform(0.2, 3.0))
        contexts.append(SldContext(HypothesisPair(theta0, theta1), basis, sigma, horizon))
    return contexts


CONTEXTS = _random_contexts(50)


@pytest.mark.parametrize("ctx", CONTEXTS)
def test_cgf_normalisation(ctx):
    assert_allclose(cgf_logL(ctx, [0.0, -1.0]).numpy(), [0.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("ctx", CONTEXTS)
def test_three_routes_to_the_cgf(ctx):
    lower = eps_minus(ctx.hyp)
    eps = np.concatenate([rng.uniform(0.95 * lower, 3.0, size=5), [-0.5, 0.5]])
    direct = cgf_logL(ctx, eps).numpy()

    L, H, R = mode_decomposition(ctx, eps)
    by_mode = np.sum(ctx.horizon_T * L.numpy() + H.numpy() + R.numpy(), axis=-1)

    L_tilde, H_tilde, R_tilde = ntilde_decomposition(ctx.hyp, ctx.basis, ctx.horizon_T, eps)
    many_modes = (
        float(ctx.M) * L_tilde.numpy() + ctx.basis.n_modes * H_tilde.numpy() + R_tilde.numpy()
    )

    scale = np.maximum(np.abs(direct), 1.0)
    assert_allclose(by_mode / scale, direct / scale, rtol=0, atol=1e-10)
    assert_allclose(many_modes / scale, direct / scale, rtol=0, atol=1e-10)


@pytest.mark.parametrize("ctx", CONTEXTS[:10])
def test_rate_function_is_the_legendre_transform(ctx):
    hyp, M = ctx.hyp, float(ctx.M)
    lower = eps_minus(hyp)
    etas = np.linspace(2 * eta_null(hyp, M), 0.95 * eta_upper(hyp, M), 10)
    for eta in etas:
        result = optimize.minimize_scalar(
            lambda e: float(c_limit(hyp, M, e)) - e * eta,
            bounds=(lower + 1e-12, 1e6),
            method="bounded",
            options={"xatol": 1e-9, "maxiter": 2000},
        )
        assert_allclose(float(rate_I(hyp, M, eta)), -result.fun, rtol=1e-6, atol=1e-10)


@pytest.mark.parametrize("ctx", CONTEXTS[:20])
def test_saddle_point_at_the_null_mean(ctx):
    hyp, M = ctx.hyp, float(ctx.M)
    eta = eta_null(hyp, M)
    saddle = saddle_T(ctx, eta)
    assert_allclose(float(saddle.epsilon), -1.0, rtol=1e-12)
    assert_allclose(
        float(saddle.variance), hyp.square_gap ** 2 * M / (8 * hyp.theta0 ** 3), rtol=1e-12
    )
    h = 1e-4 * (-1.0 - eps_minus(hyp))
    slope = (float(c_limit(hyp, M, -1.0 + h)) - float(c_limit(hyp, M, -1.0 - h))) / (2 * h)
    assert abs(slope - eta) < 1e-7 * max(1.0, abs(eta))


def test_rate_vanishes_only_at_its_minimum():
    hyp, M = HypothesisPair(1.0, 2.0), 5.0
    eta = np.linspace(-3.0, 2.4, 200)
    values = rate_I(hyp, M, eta).numpy()
    assert np.all(values >= -1e-15)
    minimum = hyp.gap ** 2 * M / (4 * hyp.theta1)
    assert abs(eta[np.argmin(values)] - minimum) < (eta[1] - eta[0])
    assert math.isinf(float(rate_I(hyp, M, eta_upper(hyp, M))))
