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
Command-line front end.

A run is configured by a flat `key=value` file (`--config`) and by flags; a flag wins over
the file. Keys are the `RunConfig` field names, with `-` and `_` interchangeable. Exit
status is 0 on success, 2 on a configuration error and 3 on a runtime or domain error.
"""

import argparse
import contextlib
import json
import logging
import math
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .base import ConfigError, ParameterDomainError
from .montecarlo import (
    OVERALL_PREFIX,
    McPlan,
    McPoint,
    McReport,
    Under,
    compare_tests,
    estimate_error_rate,
)
from .ou_sim import ModelSpec, simulate
from .rejection_regions import TestSpec, decide
from .sld import (
    SldContext,
    c_limit,
    cgf_logL,
    eta_null,
    eta_upper,
    eta_zero,
    mode_decomposition,
    rate_I,
    saddle_T,
)
from .spectral import EigenvalueModel, ExactInterval1D, PowerLaw, SpectralBasis
from .stats import HypothesisPair, Regime, mle, sufficient_stats
from .utilities import format_float, json_safe, print_summary, tabulate_rows

__all__ = ["RunConfig", "read_config_file", "read_report_header", "main"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

EIGEN_MODELS = ("interval", "power-law")
FORMATS = ("csv", "json", "table")
TABLES = ("cgf", "rate")
SNAP_TO_ZERO = 1e-12


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"must be one of {list(options)}, got {text!r}")
        return text

    return parse


def _integer(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _float_list(text: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _sweep_axis(text: str) -> str:
    return _choice("horizon", "n_modes")(text.replace("-", "_"))


_PARSERS: Dict[str, Callable[[str], Any]] = {
    "theta0": float,
    "theta1": float,
    "theta": float,
    "sigma": float,
    "beta": float,
    "gamma": float,
    "dim": _integer,
    "varpi": float,
    "eigen_model": _choice(*EIGEN_MODELS),
    "length": float,
    "n_modes": _integer,
    "horizon": float,
    "steps_per_unit": _integer,
    "quadrature": str.lower,
    "alpha": float,
    "delta": float,
    "shift": float,
    "regime": lambda text: Regime(text.lower()).value,
    "reps": _integer,
    "seed": _integer,
    "sweep": _float_list,
    "sweep_over": _sweep_axis,
    "table": _choice(*TABLES),
    "eps_min": float,
    "eps_max": float,
    "eta_min": float,
    "eta_max": float,
    "points": _integer,
    "out": str,
    "format": _choice(*FORMATS),
}


@dataclass(frozen=True)
class RunConfig:
    """
    Every setting of a run as one flat record. `lines` maps a field to the configuration
    file line it was read from, for error messages.
    """

    theta0: Optional[float] = None
    theta1: Optional[float] = None
    theta: Optional[float] = None
    sigma: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    dim: int = 1
    varpi: float = 1.0
    eigen_model: str = "interval"
    length: float = math.pi
    n_modes: int = 1
    horizon: float = 1.0
    steps_per_unit: Optional[int] = None
    quadrature: Optional[str] = None
    alpha: float = 0.05
    delta: float = 0.0
    shift: float = 0.0
    regime: str = "large-t"
    reps: int = 1000
    seed: int = 0
    sweep: Optional[Tuple[float, ...]] = None
    sweep_over: str = "horizon"
    table: str = "cgf"
    eps_min: float = -1.0
    eps_max: float = 1.0
    eta_min: Optional[float] = None
    eta_max: Optional[float] = None
    points: int = 21
    out: Optional[str] = None
    format: str = "csv"
    lines: Dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_mapping(
        cls, values: Mapping[str, str], lines: Optional[Mapping[str, int]] = None
    ) -> "RunConfig":
        """Parses string values, then validates every object the values describe."""
        lines = dict(lines or {})
        parsed: Dict[str, Any] = {}
        for key, text in values.items():
            name = key.replace("-", "_")
            if name not in _PARSERS:
                raise ConfigError(key, "unknown key", lines.get(key))
            try:
                parsed[name] = _PARSERS[name](str(text).strip())
            except ValueError as e:
                raise ConfigError(name, str(e), lines.get(key)) from None
            if key in lines:
                lines[name] = lines.pop(key)
        config = cls(lines=lines, **parsed)
        config.validate()
        return config

    def error(self, name: str, message: str) -> ConfigError:
        return ConfigError(name, message, self.lines.get(name))

    def require(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise self.error(name, "required by this command")

    def _checked(self, names: Sequence[str], build: Callable[[], Any]) -> Any:
        """Runs `build`, attributing a domain error to the first of `names` it mentions."""
        try:
            return build()
        except ConfigError:
            raise
        except (ParameterDomainError, ValueError) as e:
            message = str(e)
            blamed = next((n for n in names if n in message), names[0])
            raise self.error(blamed, message) from None

    def validate(self) -> None:
        for name in ("reps", "n_modes", "points"):
            if getattr(self, name) < 1:
                raise self.error(name, "must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise self.error("seed", "must fit in 64 bits")
        self.basis()
        if self.theta is not None:
            self.model_spec(self.theta)
        if self.theta0 is not None or self.theta1 is not None:
            self.test_spec()

    def eigen_model_object(self) -> EigenvalueModel:
        if self.eigen_model == "interval":
            if self.dim != 1:
                raise self.error("dim", "the interval model is one-dimensional")
            return self._checked(["length"], lambda: ExactInterval1D(self.length))
        return self._checked(["varpi", "dim"], lambda: PowerLaw(self.varpi, self.dim))

    def basis(self) -> SpectralBasis:
        model = self.eigen_model_object()
        return self._checked(
            ["gamma", "beta", "n_modes"],
            lambda: SpectralBasis.from_model(model, self.n_modes, self.beta, self.gamma),
        )

    def model_spec(self, theta: float) -> ModelSpec:
        overrides = {}
        if self.steps_per_unit is not None:
            overrides["steps_per_unit"] = self.steps_per_unit
        if self.quadrature is not None:
            overrides["quadrature"] = self.quadrature
        basis = self.basis()
        return self._checked(
            ["theta", "sigma", "horizon", "steps_per_unit", "quadrature"],
            lambda: ModelSpec(theta, self.sigma, basis, self.horizon, **overrides),
        )

    def hypotheses(self) -> HypothesisPair:
        self.require("theta0", "theta1")
        return self._checked(
            ["theta1", "theta0"], lambda: HypothesisPair(self.theta0, self.theta1)
        )

    def test_spec(self, shift: Optional[float] = None) -> TestSpec:
        hyp = self.hypotheses()
        shift = self.shift if shift is None else shift
        return self._checked(
            ["alpha", "regime"],
            lambda: TestSpec(self.regime, self.alpha, hyp, self.delta, shift),
        )

    def plan(self, test: Optional[TestSpec] = None) -> McPlan:
        test = self.test_spec() if test is None else test
        spec = self.model_spec(test.hyp.theta0)
        return self._checked(
            ["reps", "sweep", "sweep_over", "seed"],
            lambda: McPlan(spec, test, self.reps, self.seed, self.sweep, self.sweep_over),
        )

    def header(self) -> Dict[str, str]:
        """The non-default settings as strings that `from_mapping` parses back."""
        defaults = RunConfig()
        header = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "lines" or value is None or value == getattr(defaults, f.name):
                continue
            header[f.name] = _format_value(value)
        return header


def _format_value(value: Any) -> str:
    if isinstance(value, tuple):
        return ",".join(format_float(v) for v in value)
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def _parse_key_value_lines(lines: Sequence[str], comment_only: bool) -> Tuple[Dict, Dict]:
    values: Dict[str, str] = {}
    line_numbers: Dict[str, int] = {}
    for number, raw in enumerate(lines, start=1):
        text = raw.strip()
        if comment_only:
            if not text.startswith("#"):
                break
            text = text[1:].strip()
            if text.startswith(OVERALL_PREFIX):
                continue
        elif not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise ConfigError(text, "expected key=value", number)
        key, value = (part.strip() for part in text.split("=", 1))
        values[key] = value
        line_numbers[key] = number
    return values, line_numbers


def read_config_file(path: str) -> Tuple[Dict[str, str], Dict[str, int]]:
    """Reads `key=value` lines; blank lines and `#` comments are skipped."""
    with open(path, encoding="utf-8") as f:
        return _parse_key_value_lines(f.read().splitlines(), comment_only=False)


def read_report_header(path: str) -> RunConfig:
    """The configuration written into the `# key=value` header of a CSV report."""
    with open(path, encoding="utf-8") as f:
        values, lines = _parse_key_value_lines(f.read().splitlines(), comment_only=True)
    return RunConfig.from_mapping(values, lines)


@contextlib.contextmanager
def _output(config: RunConfig):
    """The `--out` file opened for writing, or stdout."""
    if config.out is None:
        yield sys.stdout
        return
    with open(config.out, "w", encoding="utf-8", newline="\n") as f:
        yield f
    logger.info("wrote %s", config.out)


def _emit(config: RunConfig, text: str) -> None:
    with _output(config) as stream:
        stream.write(text)


def _emit_report(config: RunConfig, report: McReport) -> None:
    header = config.header()
    if config.format == "json":
        _emit(config, report.to_json(header=header) + "\n")
    elif config.format == "table":
        with _output(config) as stream:
            print_summary(report, file=stream)
    else:
        _emit(config, report.csv_text(header))


def cmd_simulate(config: RunConfig) -> int:
    config.require("theta", "out")
    traj = simulate(config.model_spec(config.theta), config.seed)
    traj.to_csv(config.out)
    logger.info("wrote %s", config.out)
    return EXIT_OK


def cmd_test(config: RunConfig) -> int:
    config.require("theta")
    test = config.test_spec()
    stats = sufficient_stats(simulate(config.model_spec(config.theta), config.seed))
    outcome = decide(test, stats)
    record = {
        "regime": test.regime.value,
        "statistic": float(outcome.statistic),
        "threshold": float(outcome.threshold),
        "reject": bool(outcome.reject),
        "log_lr": float(outcome.log_lr),
        "log_threshold_lr": float(outcome.log_threshold_lr),
        "mle": float(mle(stats)),
    }
    _emit(config, json.dumps(record) + "\n")
    return EXIT_OK


def cmd_type1(config: RunConfig) -> int:
    _emit_report(config, estimate_error_rate(config.plan(), Under.NULL))
    return EXIT_OK


def cmd_power(config: RunConfig) -> int:
    _emit_report(config, estimate_error_rate(config.plan(), Under.ALTERNATIVE))
    return EXIT_OK


def cmd_sweep(config: RunConfig) -> int:
    """Type I error and power side by side, one row per sweep value."""
    config.require("sweep")
    plan = config.plan()
    type1 = estimate_error_rate(plan, Under.NULL)
    power = estimate_error_rate(plan, Under.ALTERNATIVE)
    points = []
    for null_point, alt_point in zip(type1.points, power.points):
        diagnostics = dict(null_point.diagnostics)
        diagnostics.update(power=alt_point.estimate, power_se=alt_point.standard_error)
        points.append(
            McPoint(
                null_point.parameter, null_point.estimate, null_point.standard_error, diagnostics
            )
        )
    _emit_report(config, McReport("sweep", plan.sweep_over, points))
    return EXIT_OK


def _eps_grid(config: RunConfig) -> np.ndarray:
    grid = np.linspace(config.eps_min, config.eps_max, config.points)
    grid[np.abs(grid) < SNAP_TO_ZERO] = 0.0
    return grid


def _cgf_rows(config: RunConfig, ctx: SldContext) -> List[Dict[str, float]]:
    eps = _eps_grid(config)
    log_m = cgf_logL(ctx, eps).numpy()
    c = c_limit(ctx.hyp, ctx.M, eps).numpy()
    L, H, R = (np.sum(part.numpy(), axis=-1) for part in mode_decomposition(ctx, eps))
    return [
        {"eps": e, "log_m": m, "c": ci, "L": l, "H": h, "R_T": r}
        for e, m, ci, l, h, r in zip(eps, log_m, c, L, H, R)
    ]


def _rate_rows(config: RunConfig, ctx: SldContext) -> List[Dict[str, Optional[float]]]:
    M = float(ctx.M)
    lower = 2 * eta_null(ctx.hyp, M) if config.eta_min is None else config.eta_min
    upper = eta_upper(ctx.hyp, M) if config.eta_max is None else config.eta_max
    grid = np.linspace(lower, upper, config.points)
    saddle_limit = eta_zero(ctx.hyp, M)
    rows = []
    for eta in grid:
        row: Dict[str, Optional[float]] = {"eta": eta, "I": float(rate_I(ctx.hyp, M, eta))}
        row["eps_eta"] = row["variance"] = None
        if eta < saddle_limit:
            saddle = saddle_T(ctx, eta)
            row["eps_eta"] = float(saddle.epsilon)
            row["variance"] = float(saddle.variance)
        rows.append(row)
    return rows


def cmd_sld_table(config: RunConfig) -> int:
    """The CGF split (ε, ln m_T, c, 𝓛, 𝓗, 𝓡_T) or the rate table (η, I, ε_η, ς²)."""
    ctx = SldContext(config.hypotheses(), config.basis(), config.sigma, config.horizon)
    rows = _cgf_rows(config, ctx) if config.table == "cgf" else _rate_rows(config, ctx)
    header = config.header()
    if config.format == "json":
        # I is +∞ at the upper end of the rate grid; it is written as null
        document = {"table": config.table, "config": header, "rows": json_safe(rows)}
        _emit(config, json.dumps(document, indent=2, allow_nan=False) + "\n")
        return EXIT_OK
    if config.format == "table":
        _emit(config, tabulate_rows(rows) + "\n")
        return EXIT_OK
    lines = [f"# {key}={value}" for key, value in header.items()]
    lines.append(",".join(rows[0].keys()))
    for row in rows:
        lines.append(",".join("" if v is None else format_float(v) for v in row.values()))
    _emit(config, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_compare(config: RunConfig) -> int:
    """The unshifted test against the same test with its log-threshold moved by `shift`."""
    shifted = config.plan()
    baseline = replace(shifted, test=replace(shifted.test, shift=0.0))
    _emit_report(config, compare_tests(baseline, shifted))
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "simulate": cmd_simulate,
    "test": cmd_test,
    "type1": cmd_type1,
    "power": cmd_power,
    "sweep": cmd_sweep,
    "sld-table": cmd_sld_table,
    "compare": cmd_compare,
}

_FLAG_HELP = {
    "theta0": "null drift θ₀",
    "theta1": "alternative drift θ₁ > θ₀",
    "theta": "true drift of the simulated path (simulate, test)",
    "eigen_model": f"one of {list(EIGEN_MODELS)}",
    "length": "interval length of the 'interval' eigenvalue model",
    "horizon": "observation horizon T",
    "regime": "large-t or large-n",
    "reps": "Monte Carlo replicates",
    "seed": "64-bit base seed",
    "sweep": "comma separated, strictly increasing sweep values",
    "sweep_over": "horizon or n-modes",
    "shift": "log-threshold shift of the compared test",
    "table": f"one of {list(TABLES)} (sld-table)",
    "out": "output path; stdout when omitted",
    "format": f"one of {list(FORMATS)}",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spde-hypotest",
        description="Likelihood ratio tests for the drift of a stochastic heat equation.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--log-level", default="WARNING", help="logging level")
    for name in _PARSERS:
        parser.add_argument(
            "--" + name.replace("_", "-"),
            dest=name,
            default=argparse.SUPPRESS,
            help=_FLAG_HELP.get(name),
        )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config")
    log_level = str(args.pop("log_level")).upper()
    try:
        if not isinstance(logging.getLevelName(log_level), int):
            raise ConfigError("log_level", f"unknown logging level {log_level!r}")
        logging.basicConfig(
            level=log_level, format="%(asctime)s %(name)s %(levelname)s: %(message)s"
        )
        values: Dict[str, str] = {}
        lines: Dict[str, int] = {}
        if config_path is not None:
            try:
                values, lines = read_config_file(config_path)
            except OSError as e:
                raise ConfigError("config", str(e)) from None
            values = {k.replace("-", "_"): v for k, v in values.items()}
            lines = {k.replace("-", "_"): v for k, v in lines.items()}
        for name, value in args.items():
            values[name] = value
            lines.pop(name, None)
        config = RunConfig.from_mapping(values, lines)
        logger.info("running %s with %s", command, config.header())
        return COMMANDS[command](config)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, NotImplementedError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
