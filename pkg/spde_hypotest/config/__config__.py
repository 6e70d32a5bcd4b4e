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
Package-wide defaults of spde_hypotest, held in one immutable :class:`Config`.

Settings:

* ``float``: dtype of every tensor the package creates,
* ``threads``: worker threads a Monte Carlo experiment spreads its chunks over,
* ``steps_per_unit`` and ``quadrature``: time grid resolution and the rule for ∫u² dt,
* ``chunk_elements``: tensor elements (replicates × modes × grid points) simulated at once,
* ``summary_fmt``: table style of :meth:`spde_hypotest.montecarlo.McReport.summary`.

Initial values are read at import from these environment variables:

* ``SPDE_HYPOTEST_FLOAT``: "float16", "float32" or "float64"
* ``SPDE_HYPOTEST_THREADS``, ``SPDE_HYPOTEST_STEPS_PER_UNIT``,
  ``SPDE_HYPOTEST_CHUNK_ELEMENTS``: positive integers
* ``SPDE_HYPOTEST_QUADRATURE``: "trapezoid" or "bridge"
* ``SPDE_HYPOTEST_SUMMARY_FMT``: a :mod:`tabulate` table format

A malformed variable makes :class:`Config` construction fail with ``TypeError``. The
``set_default_*`` functions change one setting afterwards, and :func:`as_context` swaps the
whole configuration for the duration of a block:

>>> with as_context(Config(steps_per_unit=20, quadrature="bridge")):
>>>     report = estimate_error_rate(plan, Under.NULL)
"""

import contextlib
import enum
import os
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
import tabulate
import tensorflow as tf

__all__ = [
    "Config",
    "as_context",
    "config",
    "set_config",
    "default_float",
    "set_default_float",
    "default_threads",
    "set_default_threads",
    "default_steps_per_unit",
    "set_default_steps_per_unit",
    "default_quadrature",
    "set_default_quadrature",
    "default_chunk_elements",
    "set_default_chunk_elements",
    "default_summary_fmt",
    "set_default_summary_fmt",
    "QUADRATURE_RULES",
]

__config = None

QUADRATURE_RULES: Tuple[str, ...] = ("trapezoid", "bridge")

_FLOAT_NAMES = {"float16": np.float16, "float32": np.float32, "float64": np.float64}


class _Setting(enum.Enum):
    """Built-in defaults; `env_var` is the variable that overrides each one."""

    FLOAT = np.float64
    THREADS = min(4, os.cpu_count() or 1)
    STEPS_PER_UNIT = 100
    QUADRATURE = "trapezoid"
    CHUNK_ELEMENTS = 2 ** 22
    SUMMARY_FMT = "simple"

    @property
    def env_var(self) -> str:
        return "SPDE_HYPOTEST_" + self.name

    def lookup(self):
        return os.environ.get(self.env_var, self.value)


def _float_from_env():
    value = _Setting.FLOAT.lookup()
    if isinstance(value, str):
        if value not in _FLOAT_NAMES:
            raise TypeError(
                f"{_Setting.FLOAT.env_var}={value!r} is not one of {sorted(_FLOAT_NAMES)}"
            )
        return _FLOAT_NAMES[value]
    return value


def _positive_int_from_env(setting: _Setting):
    def factory() -> int:
        raw = setting.lookup()
        try:
            value = int(raw)
        except ValueError:
            raise TypeError(f"{setting.env_var}={raw!r} is not an integer") from None
        if value < 1:
            raise TypeError(f"{setting.env_var} must be a positive integer, got {value}")
        return value

    return factory


def _quadrature_from_env():
    value = _Setting.QUADRATURE.lookup()
    if value not in QUADRATURE_RULES:
        raise TypeError(
            f"{_Setting.QUADRATURE.env_var}={value!r} is not one of {list(QUADRATURE_RULES)}"
        )
    return value


@dataclass(frozen=True)
class Config:
    """
    Immutable record of the package defaults; the field defaults are read from the
    environment (see the module docstring).

    :param float: numpy float type of created tensors.
    :param threads: worker threads for Monte Carlo chunks.
    :param steps_per_unit: grid points per unit of time, 100 unless overridden.
    :param quadrature: "trapezoid" (default) or "bridge".
    :param chunk_elements: bound on replicates × modes × grid points per chunk.
    :param summary_fmt: :mod:`tabulate` format of report summaries.
    """

    float: type = field(default_factory=_float_from_env)
    threads: int = field(default_factory=_positive_int_from_env(_Setting.THREADS))
    steps_per_unit: int = field(default_factory=_positive_int_from_env(_Setting.STEPS_PER_UNIT))
    quadrature: str = field(default_factory=_quadrature_from_env)
    chunk_elements: int = field(default_factory=_positive_int_from_env(_Setting.CHUNK_ELEMENTS))
    summary_fmt: str = field(default_factory=_Setting.SUMMARY_FMT.lookup)


def config() -> Config:
    """The configuration currently in force."""
    return __config


def default_float():
    return config().float


def default_threads() -> int:
    """Maximum number of threads a Monte Carlo experiment spreads its chunks over."""
    return config().threads


def default_steps_per_unit() -> int:
    return config().steps_per_unit


def default_quadrature() -> str:
    """Quadrature rule for ∫u² dt: "trapezoid" or "bridge"."""
    return config().quadrature


def default_chunk_elements() -> int:
    return config().chunk_elements


def default_summary_fmt():
    return config().summary_fmt


def set_config(new_config: Config):
    """Replaces the configuration in force by `new_config`."""
    global __config
    __config = new_config


def set_default_float(value_type):
    """Accepts anything `tf.as_dtype` maps to a floating dtype, e.g. `np.float32` or "float64"."""
    try:
        dtype = tf.as_dtype(value_type)
    except TypeError:
        raise TypeError(f"{value_type!r} is not a numpy or TensorFlow dtype") from None
    if not dtype.is_floating:
        raise TypeError(f"{value_type!r} is not a floating point dtype")
    set_config(replace(config(), float=dtype.as_numpy_dtype))


def _check_positive_int(value, setting: str) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise TypeError(f"Expected an integer {setting} value")
    if value < 1:
        raise ValueError(f"{setting} must be positive")


def set_default_threads(value: int):
    _check_positive_int(value, "threads")
    set_config(replace(config(), threads=int(value)))


def set_default_steps_per_unit(value: int):
    _check_positive_int(value, "steps_per_unit")
    set_config(replace(config(), steps_per_unit=int(value)))


def set_default_chunk_elements(value: int):
    _check_positive_int(value, "chunk_elements")
    set_config(replace(config(), chunk_elements=int(value)))


def set_default_quadrature(value: str):
    """Case-insensitive; "trapezoid" or "bridge"."""
    if isinstance(value, str):
        value = value.lower()
    if value not in QUADRATURE_RULES:
        raise ValueError(f"`{value}` not in set of valid quadratures: {sorted(QUADRATURE_RULES)}")
    set_config(replace(config(), quadrature=value))


def set_default_summary_fmt(value: str):
    if value is not None and value not in tabulate.tabulate_formats:
        raise ValueError(f"tabulate has no {value!r} table format")
    set_config(replace(config(), summary_fmt=value))


@contextlib.contextmanager
def as_context(temporary_config: Optional[Config] = None):
    """
    Runs the enclosed block under `temporary_config` (a copy of the current one when
    omitted, so that setters called inside do not leak), then restores the previous
    configuration.
    """
    saved = config()
    try:
        set_config(replace(saved) if temporary_config is None else temporary_config)
        yield
    finally:
        set_config(saved)


set_config(Config())
