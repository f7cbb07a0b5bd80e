"""Deterministic artifact writers and the content-hash manifest.

Every writer produces identical bytes for identical inputs: floats use the
shortest round-trip representation, lines end with ``\\n`` and JSON keeps the
insertion order of its objects.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np
import pandas as pd

from app.core.formatters import format_day, format_float, join_items
from app.logger import log_debug, log_info

MANIFEST_NAME = "manifest.json"


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, dt.date):
        return format_day(value)
    if isinstance(value, (tuple, list, frozenset, set)):
        return join_items(sorted(value) if isinstance(value, (set, frozenset)) else value)
    return str(value)


def _json_ready(value):
    if isinstance(value, Mapping):
        return {str(key): _json_ready(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_json_ready(item) for item in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # -0.0 and 0.0 must serialize alike
        return 0.0 if value == 0.0 else value
    if isinstance(value, dt.date):
        return format_day(value)
    if isinstance(value, Path):
        return value.as_posix()
    return value


def _write(output_dir: Path, name: str, data: bytes) -> Path:
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / name
    path.write_bytes(data)
    log_debug("artifacts", f"artifact_written: name='{name}' bytes={len(data)}")
    return path


def write_table(output_dir: Path, name: str, frame: pd.DataFrame) -> Path:
    text = frame.map(format_cell).to_csv(index=False, lineterminator="\n")
    return _write(output_dir, name, text.encode("utf-8"))


def write_records(output_dir: Path, name: str, records: Iterable[Mapping], columns) -> Path:
    frame = pd.DataFrame(list(records), columns=list(columns), dtype=object)
    return write_table(output_dir, name, frame)


def write_json(output_dir: Path, name: str, payload: Any) -> Path:
    text = json.dumps(_json_ready(payload), indent=2, ensure_ascii=False, allow_nan=False)
    return _write(output_dir, name, (text + "\n").encode("utf-8"))


def write_text(output_dir: Path, name: str, text: str) -> Path:
    return _write(output_dir, name, text.encode("utf-8"))


def write_bytes(output_dir: Path, name: str, data: bytes) -> Path:
    return _write(output_dir, name, data)


def file_sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(output_dir: Path) -> Path:
    """List every artifact in ``output_dir`` with its size and SHA-256."""
    output_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for path in sorted(output_dir.iterdir(), key=lambda p: p.name):
        if not path.is_file() or path.name == MANIFEST_NAME:
            continue
        entries.append({
            "name": path.name,
            "bytes": path.stat().st_size,
            "sha256": file_sha256(path),
        })
    manifest = write_json(output_dir, MANIFEST_NAME, {"artifacts": entries})
    log_info("artifacts", f"manifest_written: artifacts={len(entries)} dir='{output_dir}'")
    return manifest
