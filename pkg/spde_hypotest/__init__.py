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

# flake8: noqa

from .base import (
    ConfigError,
    EstimationDegenerateError,
    ParameterDomainError,
    UnsupportedRegimeError,
    UsageError,
)
from .config import default_float, default_quadrature, default_threads
from .spectral import ExactInterval1D, PowerLaw, SpectralBasis, eigenvalues, spectral_sum_M
from .ou_sim import ModelSpec, ModeTrajectories, simulate
from .stats import HypothesisPair, Regime, SufficientStats, sufficient_stats, mle
from .rejection_regions import TestSpec, TestOutcome, decide
from . import (
    config,
    montecarlo,
    ou_sim,
    quadrature,
    rejection_regions,
    sld,
    spectral,
    stats,
    utilities,
)
from .versions import __version__

__all__ = [export for export in dir()]
