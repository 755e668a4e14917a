from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

SCHEMA_VERSION = "1"


def num(v: Any) -> Any:
    """JSON-safe number: infinities become the string 'inf' / '-inf'."""
    f = float(v)
    if math.isinf(f):
        return "inf" if f > 0 else "-inf"
    return f


def matrix(F: np.ndarray) -> list:
    return [[num(F[0, 0]), num(F[0, 1])], [num(F[1, 0]), num(F[1, 1])]]


def dumps(doc: Any) -> str:
    # repr-based floats round-trip exactly; sorted keys keep output byte-stable
    return json.dumps(doc, sort_keys=True, allow_nan=False)
