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
Replicated experiments: error rates and power, normality of the MLE, Monte Carlo checks of
the cumulant generating function and of the Type II decay, and paired comparison of two
test families on common paths.

Replicate r of a plan is `simulate(spec, replicate_key(base_seed, r))`. Replicates are
simulated in chunks on a thread pool, and chunk results are concatenated in replicate
order, so every report depends on `base_seed` only.
"""

import enum
import json
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from numbers import Integral
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.stats
from scipy.special import logsumexp

from .base import ParameterDomainError, UnsupportedRegimeError, UsageError
from .config import default_chunk_elements, default_threads
from .ou_sim import ModelSpec, simulate_replicates
from .rejection_regions import TestSpec, normal_quantile, outcome_from_log_lr
from .sld import SldContext, a_T, alpha1_N, alpha1_T, cgf_logL, eps_minus, eta_null
from .spectral import SpectralBasis, spectral_sum_M
from .stats import (
    HypothesisPair,
    Regime,
    SufficientStats,
    estimator_error_standardized,
    log_likelihood_ratio,
    mle,
    sufficient_stats,
)
from .utilities import format_float, json_safe, replicate_key, tabulate_rows

__all__ = [
    "Under",
    "McPlan",
    "McPoint",
    "McReport",
    "estimate_error_rate",
    "normality_check",
    "cgf_check",
    "fit_type2_slope",
    "typeII_slope_check",
    "sld_ratio_sequence",
    "sld_typeII_check",
    "compare_tests",
]

logger = logging.getLogger(__name__)

LOW_POWER_REPLICATES = 30
SWEEP_AXES = ("horizon", "n_modes")
OVERALL_PREFIX = "overall."


class Under(enum.Enum):
    """Measure the replicates are drawn from."""

    NULL = "null"
    ALTERNATIVE = "alternative"


@dataclass(frozen=True)
class McPlan:
    """
    A replicated experiment. `spec` is a template: its drift is replaced by θ₀ or θ₁ of
    `test.hyp` depending on the measure simulated, and by each sweep value along
    `sweep_over` ("horizon" replaces T, "n_modes" rebuilds the basis with that many modes).
    """

    spec: ModelSpec
    test: TestSpec
    replicates: int
    base_seed: int
    sweep: Optional[Tuple[float, ...]] = None
    sweep_over: str = "horizon"

    def __post_init__(self):
        if (
            isinstance(self.replicates, bool)
            or not isinstance(self.replicates, Integral)
            or self.replicates < 1
        ):
            raise ParameterDomainError(
                f"replicates must be a positive integer, got {self.replicates}"
            )
        if not 0 <= int(self.base_seed) < 2 ** 64:
            raise ParameterDomainError(f"base_seed must fit in 64 bits, got {self.base_seed}")
        if self.sweep_over not in SWEEP_AXES:
            raise ParameterDomainError(
                f"sweep_over must be one of {list(SWEEP_AXES)}, got {self.sweep_over}"
            )
        if self.sweep is not None:
            sweep = tuple(float(v) for v in self.sweep)
            if not sweep:
                raise ParameterDomainError("a sweep needs at least one value")
            if any(b <= a for a, b in zip(sweep, sweep[1:])):
                raise ParameterDomainError(f"sweep values must be strictly increasing: {sweep}")
            object.__setattr__(self, "sweep", sweep)
        if self.replicates < LOW_POWER_REPLICATES:
            warnings.warn(
                f"only {self.replicates} replicates: Monte Carlo estimates have low power"
            )

    def points(self) -> List[Tuple[Optional[float], ModelSpec]]:
        """(sweep value, model template) per sweep point; a single (None, spec) without sweep."""
        if self.sweep is None:
            return [(None, self.spec)]
        return [(value, self.spec_at(value)) for value in self.sweep]

    def spec_at(self, value: float) -> ModelSpec:
        if self.sweep_over == "horizon":
            return replace(self.spec, horizon_T=float(value))
        basis = self.spec.basis
        n_modes = int(value)
        if n_modes != value:
            raise ParameterDomainError(f"a mode count must be an integer, got {value}")
        return replace(
            self.spec,
            basis=SpectralBasis.from_model(basis.model, n_modes, basis.beta, basis.gamma),
        )


@dataclass(frozen=True)
class McPoint:
    parameter: Optional[float]
    estimate: float
    standard_error: float
    diagnostics: Dict[str, float] = field(default_factory=dict)


@dataclass
class McReport:
    """
    One row per sweep point, plus `overall` results that span all points (fitted slopes,
    stabilisation flags, ...) and free-text `notes` such as dropped points.
    """

    name: str
    parameter_name: str
    points: List[McPoint]
    overall: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def columns(self) -> List[str]:
        names: List[str] = [self.parameter_name, "estimate", "standard_error"]
        for point in self.points:
            names.extend(k for k in point.diagnostics if k not in names)
        return names

    def rows(self) -> List[Dict[str, Any]]:
        columns = self.columns()
        rows = []
        for point in self.points:
            row = {
                self.parameter_name: point.parameter,
                "estimate": point.estimate,
                "standard_error": point.standard_error,
            }
            row.update(point.diagnostics)
            rows.append({name: row.get(name) for name in columns})
        return rows

    def summary(self, fmt: Optional[str] = None) -> str:
        text = tabulate_rows(self.rows(), tablefmt=fmt)
        if self.overall:
            text += "\n" + "\n".join(f"{k}: {v}" for k, v in self.overall.items())
        return text

    def csv_text(self, header: Optional[Mapping[str, Any]] = None) -> str:
        """
        `# key=value` comment lines for `header`, then `# overall.key=value` lines, then one
        row per point. Numbers use `%.17g`; missing values are empty.
        """
        columns = self.columns()
        lines = [f"# {key}={value}" for key, value in (header or {}).items()]
        lines += [f"# {OVERALL_PREFIX}{k}={_csv_cell(v)}" for k, v in self.overall.items()]
        lines.append(",".join(columns))
        for row in self.rows():
            lines.append(",".join(_csv_cell(row[name]) for name in columns))
        return "\n".join(lines) + "\n"

    def to_csv(self, path: str, header: Optional[Mapping[str, Any]] = None) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.csv_text(header))

    def to_json(self, path: Optional[str] = None, header: Optional[Mapping[str, Any]] = None):
        """The report as a JSON document; non-finite numbers become null."""
        document = {
            "name": self.name,
            "parameter_name": self.parameter_name,
            "config": dict(header or {}),
            "points": [json_safe(row) for row in self.rows()],
            "overall": json_safe(self.overall),
            "notes": list(self.notes),
        }
        text = json.dumps(document, indent=2, allow_nan=False)
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(text + "\n")
        return text


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (Integral, float, np.floating)):
        return format_float(value)
    return str(value)


def _proportion_se(p_hat: float, n: int) -> float:
    return math.sqrt(p_hat * (1 - p_hat) / n)


def _chunk_size(spec: ModelSpec) -> int:
    per_replicate = spec.n_modes * (spec.n_steps + 1)
    if spec.quadrature == "bridge":
        per_replicate *= 2
    return max(1, default_chunk_elements() // per_replicate)


def _map_replicates(
    spec: ModelSpec,
    replicates: int,
    base_seed: int,
    reduce_chunk: Callable[[SufficientStats], np.ndarray],
) -> np.ndarray:
    """
    Simulates replicates 0..replicates-1 of `spec` and applies `reduce_chunk` to the
    sufficient statistics of each chunk. Results come back in replicate order.
    """
    size = _chunk_size(spec)
    bounds = [(start, min(start + size, replicates)) for start in range(0, replicates, size)]

    def run(bound: Tuple[int, int]) -> np.ndarray:
        start, stop = bound
        keys = [replicate_key(base_seed, r) for r in range(start, stop)]
        logger.debug("replicates %d..%d of theta=%g", start, stop - 1, spec.theta)
        return np.asarray(reduce_chunk(sufficient_stats(simulate_replicates(spec, keys))))

    with ThreadPoolExecutor(max_workers=default_threads()) as executor:
        chunks = list(executor.map(run, bounds))
    return np.concatenate(chunks, axis=-1)


def _log_lr_samples(spec: ModelSpec, hyp: HypothesisPair, replicates: int, base_seed: int):
    return _map_replicates(
        spec, replicates, base_seed, lambda stats: log_likelihood_ratio(stats, hyp).numpy()
    )


def _predicted_type1(test: TestSpec, basis: SpectralBasis, horizon_T: float) -> float:
    """α + α₁(δ)/√T for the large-horizon family, α + α̂₁(δ)/√M for the many-modes one."""
    M = float(spectral_sum_M(basis))
    if test.regime is Regime.LARGE_T:
        first = alpha1_T(test.hyp, basis.n_modes, M, test.alpha, test.delta)
        return test.alpha + float(first) / math.sqrt(horizon_T)
    try:
        first = alpha1_N(test.hyp, basis, horizon_T, test.alpha, test.delta)
    except UnsupportedRegimeError:
        return float("nan")
    return test.alpha + float(first) / math.sqrt(M)


def estimate_error_rate(plan: McPlan, under: Under) -> McReport:
    """
    Rejection frequency of `plan.test` under θ₀ (Type I error) or θ₁ (power), per sweep
    point. Type I points carry the first-order prediction when the test is unshifted;
    power points carry the Type II frequency and its event count.
    """
    under = Under(under)
    hyp = plan.test.hyp
    theta = hyp.theta0 if under is Under.NULL else hyp.theta1
    points = []
    for value, template in plan.points():
        spec = replace(template, theta=theta)
        log_lr = _log_lr_samples(spec, hyp, plan.replicates, plan.base_seed)
        reject = outcome_from_log_lr(plan.test, log_lr, spec.basis, spec.horizon_T).reject
        reject = np.asarray(reject)
        rate = float(np.mean(reject))
        diagnostics: Dict[str, float] = {"replicates": float(plan.replicates)}
        if under is Under.NULL:
            if plan.test.shift == 0:
                diagnostics["predicted"] = _predicted_type1(
                    plan.test, spec.basis, spec.horizon_T
                )
        else:
            diagnostics["type2"] = 1.0 - rate
            diagnostics["type2_events"] = float(np.sum(~reject))
        points.append(McPoint(value, rate, _proportion_se(rate, plan.replicates), diagnostics))
        logger.info("%s at %s=%s: %.6g", under.value, plan.sweep_over, value, rate)
    name = "type1" if under is Under.NULL else "power"
    return McReport(name, plan.sweep_over, points)


def normality_check(plan: McPlan, regime: Regime) -> McReport:
    """
    Standardized MLE errors under the template drift `plan.spec.theta`: sample mean and
    variance, Kolmogorov–Smirnov distance to N(0, 1), and the mean of θ̂ with its standard
    error. Fewer than 30 replicates are flagged `low_power`.
    """
    regime = Regime(regime)
    theta = plan.spec.theta
    points = []
    for value, spec in plan.points():

        def reduce_chunk(stats: SufficientStats) -> np.ndarray:
            errors = estimator_error_standardized(stats, theta, regime)
            return np.stack([errors.numpy(), mle(stats).numpy()])

        errors, estimates = _map_replicates(spec, plan.replicates, plan.base_seed, reduce_chunk)
        n = errors.size
        ddof = 1 if n > 1 else 0
        ks = scipy.stats.kstest(errors, "norm")
        mean = float(np.mean(errors))
        diagnostics = {
            "variance": float(np.var(errors, ddof=ddof)),
            "ks_distance": float(ks.statistic),
            "ks_pvalue": float(ks.pvalue),
            "mle_mean": float(np.mean(estimates)),
            "mle_se": float(np.std(estimates, ddof=ddof) / math.sqrt(n)),
            "low_power": float(n < LOW_POWER_REPLICATES),
        }
        se = float(np.std(errors, ddof=ddof) / math.sqrt(n))
        points.append(McPoint(value, mean, se, diagnostics))
    return McReport(f"normality-{regime.value}", plan.sweep_over, points)


def cgf_check(
    ctx: SldContext,
    eps_list: Sequence[float],
    replicates: int,
    seed: int,
    steps_per_unit: Optional[int] = None,
    quadrature: Optional[str] = None,
    under: Under = Under.ALTERNATIVE,
) -> McReport:
    """
    ln of the Monte Carlo mean of exp(ε ln L) under θ₁ (or θ₀ with `under=Under.NULL`),
    against `cgf_logL` for the same measure. The standard error is the delta-method one,
    sd(e^{ε ln L})/(mean·√n); it is only meaningful when E[e^{2ε ln L}] is finite, which
    each point reports as `finite_variance`: 2ε > ε₋ under θ₁, 2ε − 1 > ε₋ under θ₀.
    """
    under = Under(under)
    overrides = {}
    if steps_per_unit is not None:
        overrides["steps_per_unit"] = steps_per_unit
    if quadrature is not None:
        overrides["quadrature"] = quadrature
    theta = ctx.hyp.theta1 if under is Under.ALTERNATIVE else ctx.hyp.theta0
    spec = ModelSpec(theta, ctx.sigma, ctx.basis, ctx.horizon_T, **overrides)
    log_lr = _log_lr_samples(spec, ctx.hyp, replicates, seed)
    n = log_lr.size
    # under θ₀ every moment is the θ₁ moment one tilt lower
    offset = 0.0 if under is Under.ALTERNATIVE else 1.0
    lower = eps_minus(ctx.hyp)
    points = []
    for eps in eps_list:
        eps = float(eps)
        exponent = eps * log_lr
        estimate = float(logsumexp(exponent) - math.log(n))
        scaled = np.exp(exponent - np.max(exponent))
        se = float(np.std(scaled) / (np.mean(scaled) * math.sqrt(n)))
        analytic = float(cgf_logL(ctx, eps, under=under.value))
        z_score = 0.0 if se == 0 else (estimate - analytic) / se
        diagnostics = {
            "analytic": analytic,
            "z_score": z_score,
            "finite_variance": float(2 * eps - offset > lower),
        }
        points.append(McPoint(eps, estimate, se, diagnostics))
    return McReport(f"cgf-{under.value}", "eps", points)


def _prefactor_constant(hyp: HypothesisPair, M: float) -> float:
    # K with B_T ~ exp(-K√T·q_α)/√T
    return hyp.square_gap / (2 * hyp.theta0) * math.sqrt(M / (2 * hyp.theta0))


def fit_type2_slope(
    horizons: Sequence[float], type2: Sequence[float], hyp: HypothesisPair, M: float, alpha: float
) -> Dict[str, float]:
    """
    Least-squares slopes against T of ln(Type II) (`slope`) and of
    ln(Type II) + K√T·q_α + ½ln T (`corrected_slope`), with the large deviation target
    −(θ₁−θ₀)²M/(4θ₀).
    """
    horizons = np.asarray(horizons, dtype=np.float64)
    log_type2 = np.log(np.asarray(type2, dtype=np.float64))
    q = float(normal_quantile(alpha))
    corrected = log_type2 + _prefactor_constant(hyp, M) * np.sqrt(horizons) * q
    corrected = corrected + 0.5 * np.log(horizons)
    target = -hyp.gap ** 2 * M / (4 * hyp.theta0)
    fit = {"target": target}
    if horizons.size < 2:
        warnings.warn("fewer than two usable sweep points: no slope can be fitted")
        fit.update(slope=float("nan"), corrected_slope=float("nan"))
        return fit
    fit["slope"] = float(scipy.stats.linregress(horizons, log_type2).slope)
    fit["corrected_slope"] = float(scipy.stats.linregress(horizons, corrected).slope)
    fit["relative_error"] = abs(fit["corrected_slope"] / target - 1)
    return fit


def _type2_points(plan: McPlan) -> Tuple[McReport, List[float], List[float]]:
    """Power report over the horizon sweep, and the (T, Type II) pairs with events."""
    if plan.sweep is None or plan.sweep_over != "horizon":
        raise UsageError("a Type II decay check needs a sweep over the horizon")
    report = estimate_error_rate(plan, Under.ALTERNATIVE)
    horizons, type2 = [], []
    for point in report.points:
        if point.diagnostics["type2_events"] == 0:
            message = f"dropped T={point.parameter}: no Type II events"
            warnings.warn(message)
            logger.info(message)
            report.notes.append(message)
            continue
        horizons.append(point.parameter)
        type2.append(point.diagnostics["type2"])
    return report, horizons, type2


def typeII_slope_check(plan: McPlan) -> McReport:
    """Fits the exponential decay rate of the Type II error over a horizon sweep."""
    if plan.test.regime is not Regime.LARGE_T:
        raise UsageError("the Type II decay check applies to the large-horizon test")
    report, horizons, type2 = _type2_points(plan)
    M = float(spectral_sum_M(plan.spec.basis))
    report.name = "type2-slope"
    report.overall.update(fit_type2_slope(horizons, type2, plan.test.hyp, M, plan.test.alpha))
    report.overall["dropped"] = len(report.notes)
    return report


def sld_ratio_sequence(
    horizons: Sequence[float],
    type2: Sequence[float],
    log_a: Sequence[float],
    hyp: HypothesisPair,
    M: float,
    alpha: float,
) -> np.ndarray:
    """r(T) = Type II·e^{−ln A_T}·√T·e^{K√T·q_α}, which tends to a constant."""
    horizons = np.asarray(horizons, dtype=np.float64)
    q = float(normal_quantile(alpha))
    log_ratio = (
        np.log(np.asarray(type2, dtype=np.float64))
        - np.asarray(log_a, dtype=np.float64)
        + 0.5 * np.log(horizons)
        + _prefactor_constant(hyp, M) * np.sqrt(horizons) * q
    )
    return np.exp(log_ratio)


def _null_mean_level(ctx: SldContext) -> float:
    return eta_null(ctx.hyp, float(ctx.M))


def sld_typeII_check(
    plan: McPlan, eta_star_rule: Optional[Callable[[SldContext], float]] = None
) -> McReport:
    """
    Type II frequencies over a horizon sweep divided by the sharp large deviation shape
    A_T(η*)·e^{−K√T·q_α}/√T. `eta_star_rule` picks η* per horizon and defaults to the mean
    of ln L/T under θ₀. The sequence is `stabilized` when the last two ratios are within
    a factor 2.
    """
    if plan.test.regime is not Regime.LARGE_T:
        raise UsageError("the sharp large deviation check applies to the large-horizon test")
    rule = _null_mean_level if eta_star_rule is None else eta_star_rule
    report, horizons, type2 = _type2_points(plan)
    hyp, basis = plan.test.hyp, plan.spec.basis
    log_a = []
    for T in horizons:
        ctx = SldContext(hyp, basis, plan.spec.sigma, T)
        log_a.append(float(a_T(ctx, rule(ctx))))
    M = float(spectral_sum_M(basis))
    ratios = sld_ratio_sequence(horizons, type2, log_a, hyp, M, plan.test.alpha)
    by_horizon = dict(zip(horizons, ratios))
    for point in report.points:
        if point.parameter in by_horizon:
            point.diagnostics["ratio"] = float(by_horizon[point.parameter])
    report.name = "sld-type2"
    report.overall["dropped"] = len(report.notes)
    if len(ratios) >= 2:
        last = ratios[-2:]
        report.overall["stabilized"] = bool(np.max(last) / np.min(last) < 2)
    else:
        report.overall["stabilized"] = False
    return report


def _mcnemar(a: np.ndarray, b: np.ndarray) -> Tuple[float, float]:
    """Paired difference mean(b) − mean(a) and its standard error on common replicates."""
    n = a.size
    n01 = float(np.sum(~a & b))
    n10 = float(np.sum(a & ~b))
    difference = (n01 - n10) / n
    variance = max((n01 + n10) / n - difference ** 2, 0.0) / n
    return difference, math.sqrt(variance)


def _nested(a: np.ndarray, b: np.ndarray) -> bool:
    return bool(np.all(a <= b) or np.all(b <= a))


def _check_comparable(plan_a: McPlan, plan_b: McPlan) -> None:
    same = (
        plan_a.spec == plan_b.spec
        and plan_a.replicates == plan_b.replicates
        and plan_a.base_seed == plan_b.base_seed
        and plan_a.sweep == plan_b.sweep
        and plan_a.sweep_over == plan_b.sweep_over
        and plan_a.test.hyp == plan_b.test.hyp
    )
    if not same:
        raise UsageError("compared plans must share model, hypotheses, replicates, seed and sweep")


def compare_tests(plan_a: McPlan, plan_b: McPlan) -> McReport:
    """
    Runs both tests on the same paths. Each point's estimate is the paired power difference
    (b − a) with its McNemar standard error; the Type I difference, both rates and whether
    the rejection sets are nested path by path are reported alongside.
    """
    _check_comparable(plan_a, plan_b)
    hyp = plan_a.test.hyp
    points = []
    for value, template in plan_a.points():
        rejections = {}
        for under, theta in ((Under.NULL, hyp.theta0), (Under.ALTERNATIVE, hyp.theta1)):
            spec = replace(template, theta=theta)
            log_lr = _log_lr_samples(spec, hyp, plan_a.replicates, plan_a.base_seed)
            rejections[under] = tuple(
                np.asarray(outcome_from_log_lr(t, log_lr, spec.basis, spec.horizon_T).reject)
                for t in (plan_a.test, plan_b.test)
            )
        null_a, null_b = rejections[Under.NULL]
        alt_a, alt_b = rejections[Under.ALTERNATIVE]
        power_diff, power_se = _mcnemar(alt_a, alt_b)
        type1_diff, type1_se = _mcnemar(null_a, null_b)
        diagnostics = {
            "power_a": float(np.mean(alt_a)),
            "power_b": float(np.mean(alt_b)),
            "type1_a": float(np.mean(null_a)),
            "type1_b": float(np.mean(null_b)),
            "type1_diff": type1_diff,
            "type1_diff_se": type1_se,
            "nested": float(_nested(alt_a, alt_b) and _nested(null_a, null_b)),
        }
        points.append(McPoint(value, power_diff, power_se, diagnostics))
    return McReport("compare", plan_a.sweep_over, points)
