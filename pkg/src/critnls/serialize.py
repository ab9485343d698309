"""Deterministic report and field serialization.

Every float is written with 17 significant digits so a dump read back with
``float()`` reproduces the in-memory value bit for bit.  JSON keys are
sorted; non-finite floats become the strings ``"nan"``, ``"inf"``, ``"-inf"``.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .domain import Domain

__all__ = [
    "SCHEMA_VERSION",
    "fmt_float",
    "to_plain",
    "dumps",
    "write_json",
    "read_json",
    "config_hash",
    "write_field_csv",
    "read_field_csv",
    "write_rows_csv",
]

SCHEMA_VERSION = "1.0"


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def to_plain(obj):
    """Recursively convert numpy scalars, dataclasses, enums and paths to JSON types."""
    if is_dataclass(obj) and not isinstance(obj, type):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt_float(x)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _encode(obj, depth: int) -> str:
    pad, inner = "  " * depth, "  " * (depth + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_encode(obj[k], depth + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + _encode(v, depth + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, float):
        return fmt_float(obj)
    return json.dumps(obj)


def dumps(obj) -> str:
    """Indented JSON, keys sorted, floats at 17 significant digits."""
    return _encode(to_plain(obj), 0) + "\n"


def write_json(path: Path | str, obj) -> str:
    text = dumps(obj)
    Path(path).write_text(text, encoding="utf-8")
    return text


def read_json(path: Path | str):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def config_hash(cfg) -> str:
    return hashlib.sha256(dumps(cfg).encode("utf-8")).hexdigest()


def _coord_columns(d: Domain) -> tuple[list[str], list[np.ndarray]]:
    if d.radial:
        return ["r"], [d.radius]
    return ["x", "y", "z"], [d.nodes[:, 0], d.nodes[:, 1], d.nodes[:, 2]]


def write_field_csv(path: Path | str, d: Domain, fields: dict[str, np.ndarray]) -> None:
    """CSV with a header row: node coordinate(s) followed by one column per field."""
    names, cols = _coord_columns(d)
    for name, f in fields.items():
        f = d.check(f)
        names.append(name)
        cols.append(f)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([fmt_float(float(x)) for x in row])


def read_field_csv(path: Path | str) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in row] for row in body], dtype=float).reshape(len(body), len(header))
    return {name: data[:, k].copy() for k, name in enumerate(header)}


def write_rows_csv(path: Path | str, rows: list[dict]) -> None:
    """Table of flat dicts (all rows share the first row's keys)."""
    if not rows:
        Path(path).write_text("", encoding="utf-8")
        return
    keys = list(rows[0])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for row in rows:
            w.writerow([fmt_float(float(row[k])) if isinstance(row[k], (float, np.floating)) else row[k] for k in keys])
