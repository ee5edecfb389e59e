"""Deterministic JSON writing for models and reports.

The stdlib encoder formats floats with the shortest round-tripping repr,
which varies in digit count. Serialized artifacts here must carry at least
17 significant digits (enough to reproduce any IEEE-754 double exactly) and
must be byte-identical across runs, so this module formats every float with
``%.17g`` and keeps dict keys in insertion order. Reading back is plain
``json.loads``; the formatting guarantees value-exact round trips.
"""

from __future__ import annotations

import json
import math

import numpy as np

_SCALARS = (str, int, float, bool, type(None))


def _coerce(obj):
    """Map numpy containers/scalars onto plain Python before encoding."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _format_float(x: float) -> str:
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return "null"
    text = format(x, ".17g")
    return text


def _encode(obj, indent: int) -> str:
    obj = _coerce(obj)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _format_float(obj)
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(obj, (list, tuple)):
        items = [_coerce(v) for v in obj]
        if not items:
            return "[]"
        if all(isinstance(v, _SCALARS) for v in items):
            return "[" + ", ".join(_encode(v, 0) for v in items) + "]"
        body = ",\n".join(inner + _encode(v, indent + 2) for v in items)
        return "[\n" + body + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(
            f"{inner}{json.dumps(str(k), ensure_ascii=False)}: {_encode(v, indent + 2)}"
            for k, v in obj.items()
        )
        return "{\n" + body + "\n" + pad + "}"
    raise TypeError(f"cannot serialize object of type {type(obj).__name__}")


def dumps(obj) -> str:
    """Serialize to a deterministic JSON document (trailing newline included)."""
    return _encode(obj, 0) + "\n"


def loads(text: str):
    return json.loads(text)
