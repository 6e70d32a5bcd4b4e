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

import math
from typing import Iterable, Optional, Union

import numpy as np
import tensorflow as tf

__all__ = [
    "cast",
    "compensated_sum",
    "splitmix64",
    "replicate_key",
    "stream_seed",
]

_MASK64 = 2 ** 64 - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def cast(
    value: Union[tf.Tensor, np.ndarray], dtype: tf.DType, name: Optional[str] = None
) -> tf.Tensor:
    if not tf.is_tensor(value):
        return tf.convert_to_tensor(value, dtype, name=name)
    return tf.cast(value, dtype, name=name)


def compensated_sum(values: Iterable[float]) -> float:
    """Error-free float summation (Shewchuk partials, as in :func:`math.fsum`)."""
    return math.fsum(float(v) for v in values)


def splitmix64(value: int) -> int:
    """SplitMix64 output function: a bijective 64-bit mix."""
    z = (value + _GOLDEN_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def replicate_key(base_seed: int, replicate: int) -> int:
    """
    Key of replicate `replicate` of an experiment seeded with `base_seed`:
    splitmix64(base_seed + (replicate + 1)·0x9E3779B97F4A7C15 mod 2⁶⁴).
    """
    if replicate < 0:
        raise ValueError("replicate index must be non-negative")
    return splitmix64((base_seed + (replicate + 1) * _GOLDEN_GAMMA) & _MASK64)


def stream_seed(key: int, stream: int = 0) -> tf.Tensor:
    """
    Stateless TensorFlow seed `[hi32, lo32]` for sub-stream `stream` of a replicate key.
    Stream 0 drives the OU transitions, stream 1 the bridge quadrature.
    """
    mixed = splitmix64((key & _MASK64) ^ ((stream * 0xD1B54A32D192ED03) & _MASK64))
    return tf.constant([mixed >> 32, mixed & 0xFFFFFFFF], dtype=tf.int64)
