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
from typing import Any, Mapping, Optional, Sequence, TextIO

import numpy as np
from tabulate import tabulate

from ..config import default_float, default_summary_fmt
from .ops import cast

__all__ = [
    "to_default_float",
    "format_float",
    "json_safe",
    "tabulate_rows",
    "print_summary",
]


def to_default_float(x):
    return cast(x, dtype=default_float())


def format_float(value: Any) -> str:
    """`%.17g` rendering of a double; parsing it back gives the same value."""
    return "%.17g" % float(value)


def json_safe(value: Any) -> Any:
    """
    Converts numpy scalars in nested dicts and lists to Python ones, and non-finite floats
    to None, so that the result serialises with `json.dumps(..., allow_nan=False)`.
    """
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def tabulate_rows(
    rows: Sequence[Mapping[str, Any]], tablefmt: Optional[str] = None, floatfmt: str = ".6g"
) -> str:
    """Renders a list of homogeneous records; columns follow the key order of the first row."""
    if not rows:
        return ""
    headers = list(rows[0].keys())
    values = [[row.get(name) for name in headers] for row in rows]
    tablefmt = tablefmt if tablefmt is not None else default_summary_fmt()
    return tabulate(values, headers=headers, tablefmt=tablefmt, floatfmt=floatfmt)


def print_summary(report: Any, fmt: Optional[str] = None, file: Optional[TextIO] = None) -> None:
    """
    Prints the tabulated rows of anything that exposes `rows() -> List[Dict[str, Any]]`,
    such as :class:`~spde_hypotest.montecarlo.McReport`, then one `key: value` line per
    entry of its `overall` mapping if it has one.
    """
    lines = [tabulate_rows(report.rows(), tablefmt=fmt)]
    lines += [f"{k}: {v}" for k, v in (getattr(report, "overall", None) or {}).items()]
    print("\n".join(lines), file=file)
