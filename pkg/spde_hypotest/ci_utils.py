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

"""Replicate counts for the Monte Carlo acceptance runs, shrunk on continuous integration."""

import os


def is_continuous_integration() -> bool:
    """`CI` is set and `FULL_MC` is not."""
    return "CI" in os.environ and "FULL_MC" not in os.environ


def ci_replicates(n: int, fraction: int = 10, minimum: int = 500) -> int:
    """`n` locally; on CI `n // fraction`, floored at `minimum` and capped at `n`."""
    if not is_continuous_integration():
        return n
    return min(n, max(minimum, n // fraction))
