"""Structured JSON reports.

Every report is one JSON object carrying ``"schema": "shapecone/1"``.  Floats
are written with 17 significant digits so that identical runs produce
byte-identical files and values survive a round trip exactly.  Exact
(rational) entries are written as decimal strings such as ``"-1/2"``.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InputError

SCHEMA = "shapecone/1"


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0:
        return "0.0"          # also folds -0.0
    s = "%.17g" % x
    return s if any(ch in s for ch in ".e") else s + ".0"


def _plain(obj: Any) -> Any:
    """Convert numpy / Fraction / dataclass-ish values to JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return [_plain(v) for v in sorted(obj)]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()] if obj.dtype != object else [_plain(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj.numerator) if obj.denominator == 1 else f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "as_dict"):
        return _plain(obj.as_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(obj: Any, indent: int, level: int, out: list) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(pad + json.dumps(k) + ": ")
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
        elif all(not isinstance(v, (dict, list)) for v in obj):
            out.append("[")
            for i, v in enumerate(obj):
                _emit(v, indent, level + 1, out)
                if i < len(obj) - 1:
                    out.append(", ")
            out.append("]")
        else:
            out.append("[\n")
            for i, v in enumerate(obj):
                out.append(pad)
                _emit(v, indent, level + 1, out)
                out.append(",\n" if i < len(obj) - 1 else "\n")
            out.append(end + "]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, float):
        out.append(_fmt_float(obj))
    elif obj is None:
        out.append("null")
    elif isinstance(obj, int):
        out.append(str(obj))
    else:
        out.append(json.dumps(obj))


def dumps(obj: Any, indent: int = 1) -> str:
    out: list = []
    _emit(_plain(obj), indent, 0, out)
    return "".join(out) + "\n"


def envelope(command: str, source: dict, result: dict, mode: str = "float", epsilon: float = 1e-9) -> dict:
    return {"schema": SCHEMA, "command": command, "source": source, "mode": mode,
            "epsilon": float(epsilon), "result": result}


def write_report(report: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(report))
    return path


def loads(text: str) -> dict:
    data = json.loads(text)
    if not isinstance(data, dict) or data.get("schema") != SCHEMA:
        raise InputError(f"not a {SCHEMA} report")
    return data


def load_report(path) -> dict:
    return loads(Path(path).read_text())


def decode_scalar(x):
    """Inverse of the scalar encoding: rationals come back as Fraction."""
    if isinstance(x, str):
        if x in ("nan", "inf", "-inf"):
            return float(x)
        return Fraction(x)
    return x


def decode_matrix(rows) -> np.ndarray:
    """Rebuild an array; exact entries give an object array of Fractions."""
    vals = [[decode_scalar(x) for x in r] for r in rows] if rows and isinstance(rows[0], list) \
        else [decode_scalar(x) for x in rows]
    arr = np.array(vals, dtype=object)
    flat = arr.ravel()
    if flat.size and all(isinstance(x, Fraction) for x in flat):
        return arr
    return arr.astype(float)
