"""Deterministic JSON / CSV emission.

Every JSON artifact is an envelope around the command's result::

    {"schema_version", "tool", "version", "command", "config",
     "generated_at", "result"}

File names are ``<command>-<catalog>-<hash>.json`` where the hash covers the
config echo only, so the same config always lands on the same file.  Only
``generated_at`` varies between identical runs.
"""
from __future__ import annotations

import dataclasses
import datetime as _dt
import hashlib
import json
import math
import os
import re
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA_VERSION = "1.0"


def to_jsonable(obj):
    """Plain-JSON view of reports, numpy scalars/arrays and complex numbers."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_hash(config: dict) -> str:
    blob = json.dumps(to_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
            else _dt.datetime.now(_dt.timezone.utc))
    return when.replace(microsecond=0).isoformat()


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.]+", "_", str(text)).strip("_") or "run"


def envelope(command: str, config: dict, result) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "tailspectra",
        "version": __version__,
        "command": command,
        "config": to_jsonable(config),
        "generated_at": _timestamp(),
        "result": to_jsonable(result),
    }


def strip_volatile(payload: dict) -> dict:
    """Copy of an envelope without ``generated_at``."""
    return {k: v for k, v in payload.items() if k != "generated_at"}


def emit_report(command: str, catalog: str, config: dict, result, out_dir,
                csvs: dict | None = None) -> list[Path]:
    """Write the JSON envelope and any CSV texts; return the written paths.

    ``csvs`` maps a label to CSV text.  A single CSV labelled ``""`` is written
    as ``<stem>.csv``; otherwise as ``<stem>-<label>.csv``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{_slug(command)}-{_slug(catalog)}-{config_hash(config)}"
    paths = []
    path = out / f"{stem}.json"
    path.write_text(dumps(envelope(command, config, result)))
    paths.append(path)
    for label, text in (csvs or {}).items():
        p = out / (f"{stem}.csv" if not label else f"{stem}-{_slug(label)}.csv")
        p.write_text(text)
        paths.append(p)
    return paths
