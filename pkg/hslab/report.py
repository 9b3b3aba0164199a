# Copyright 2025 R5 Labs
# This file is part of the hslab toolkit.
#
# This software is provided "as is", without warranty of any kind,
# express or implied, including but not limited to the warranties
# of merchantability, fitness for a particular purpose and
# noninfringement. In no event shall the authors or copyright
# holders be liable for any claim, damages, or other liability,
# whether in an action of contract, tort or otherwise, arising
# from, out of or in connection with the software or the use or
# other dealings in the software.
"""CSV and JSON report writers.

JSON reports are wrapped as {hslab_version, subcommand, config, generated_at,
...payload}; generated_at is the only field that changes between identical
runs. CSV files always carry their header row and floats as %.17g.
"""

from __future__ import annotations

import csv
import datetime
import enum
import json
import logging
import math
import os
from typing import Iterable, Sequence

import numpy as np

from hslab import __version__

__all__ = [
    "VOLATILE_KEYS",
    "build_report",
    "emit",
    "format_cell",
    "read_columns",
    "read_json",
    "strip_volatile",
    "to_jsonable",
    "value_with_error",
    "write_csv",
    "write_json",
]

logger = logging.getLogger(__name__)

VOLATILE_KEYS = ("generated_at",)


def value_with_error(value, error) -> dict:
    return {"value": value, "error": error}


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
            writer.writerow([format_cell(v) for v in row])
    logger.debug("wrote %s", path)
    return path


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "as_dict"):
        return to_jsonable(obj.as_dict())
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def build_report(config, payload: dict) -> dict:
    report = {
        "hslab_version": __version__,
        "subcommand": config.subcommand,
        "config": config.as_dict(),
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
    }
    clash = set(report) & set(payload)
    if clash:
        raise ValueError(f"payload overrides envelope keys: {sorted(clash)}")
    report.update(payload)
    return to_jsonable(report)


def write_json(path: str, report: dict) -> str:
    with open(path, "w") as f:
        f.write(json.dumps(report, sort_keys=True, indent=2))
        f.write("\n")
    logger.debug("wrote %s", path)
    return path


def read_json(path: str) -> dict:
    with open(path, "r") as f:
        return json.load(f)


def read_columns(path: str, names: Sequence[str]) -> list[np.ndarray]:
    """Float columns of a CSV written by write_csv, selected by header name."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        missing = [name for name in names if name not in header]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        index = [header.index(name) for name in names]
        rows = [[float(row[i]) for i in index] for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return [np.array(col) for col in zip(*rows)]


def strip_volatile(report: dict) -> dict:
    return {k: v for k, v in report.items() if k not in VOLATILE_KEYS}


def emit(config, stem: str, header: Sequence[str] | None, rows, payload: dict,
         json_stem: str | None = None) -> list[str]:
    """Write stem.csv and/or (json_stem or stem).json as config.format asks."""
    os.makedirs(config.output_dir, exist_ok=True)
    written = []
    if config.format in ("csv", "both") and header is not None:
        written.append(write_csv(os.path.join(config.output_dir, f"{stem}.csv"), header, rows))
    if config.format in ("json", "both"):
        path = os.path.join(config.output_dir, f"{json_stem or stem}.json")
        written.append(write_json(path, build_report(config, payload)))
    for path in written:
        logger.info("report written: %s", path)
    return written
