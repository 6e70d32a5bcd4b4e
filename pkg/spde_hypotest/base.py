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

from typing import Any, Optional, Sequence, Union

import numpy as np
import tensorflow as tf

__all__ = [
    "TensorType",
    "TensorData",
    "ParameterDomainError",
    "EstimationDegenerateError",
    "UnsupportedRegimeError",
    "UsageError",
    "ConfigError",
]

TensorType = Union[tf.Tensor, tf.Variable, np.ndarray]
"""
Type alias for tensor-like values accepted by the numerical operations. Results are always
returned as `tf.Tensor` of the default float type.
"""

_NativeScalar = Union[int, float]
_Array = Sequence[Any]  # a nested array of int, float etc. kept simple for readability
TensorData = Union[_NativeScalar, _Array, TensorType]


class ParameterDomainError(ValueError):
    """A parameter lies outside the domain where the requested quantity is defined."""


class EstimationDegenerateError(ArithmeticError):
    """The observation carries no information, e.g. an all-zero path in the MLE."""


class UnsupportedRegimeError(NotImplementedError):
    """The requested asymptotic regime is outside the hypotheses of the available expansion."""


class UsageError(ValueError):
    """An operation was called with arguments that do not belong together."""


class ConfigError(ValueError):
    """
    Invalid run configuration. `field` names the offending key; `line` is the 1-based line
    of the configuration file when the value came from a file.
    """

    def __init__(self, field: str, message: str, line: Optional[int] = None):
        self.field = field
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{field}: {message}")
