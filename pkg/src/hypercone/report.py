"""Serialisation of reports: versioned JSON and plain CSV traces."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def _plain(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats to JSON values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if hasattr(obj, "to_json"):
        return _plain(obj.to_json())
    return obj


def dumps(doc: dict, command: str) -> str:
    """Deterministic JSON text: sorted keys, shortest round-trip floats."""
    body = {"schema": SCHEMA_VERSION, "command": command, **_plain(doc)}
    return json.dumps(body, sort_keys=True, indent=2, allow_nan=False) + "\n"


def csv_text(header: list[str], rows) -> str:
    """Comma separated, '.' decimal, header row, shortest round-trip floats."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        if isinstance(row, dict):
            row = [row[h] for h in header]
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(v)


def write_text(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
