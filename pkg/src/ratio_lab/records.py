"""Content-addressed run records and CSV helpers."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from filelock import FileLock

from . import __version__

SCHEMA_VERSION = 1
ENV_OUT_DIR = "RATIO_LAB_OUT_DIR"


def _clean(obj):
    """JSON-safe copy: NaN/inf become None, numpy scalars become floats."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _clean(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def record_id(command: str, inputs: dict) -> str:
    blob = json.dumps(_clean({"command": command, "inputs": inputs}), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def resolve_out_dir(flag_value: str | None) -> Path:
    return Path(os.environ.get(ENV_OUT_DIR) or flag_value or "runs")


@dataclass
class RunRecord:
    command: str
    inputs: dict
    outputs: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    timestamp: float = field(default_factory=time.time)
    tool_version: str = __version__

    @property
    def id(self) -> str:
        return record_id(self.command, self.inputs)

    def to_dict(self) -> dict:
        return _clean({
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "command": self.command,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "files": self.files,
            "timestamp": self.timestamp,
            "tool_version": self.tool_version,
        })


def run_dir(out_dir: Path, rec: RunRecord) -> Path:
    return Path(out_dir) / rec.id


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, float) else v) for v in row])


def read_csv(path: Path) -> tuple:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(_clean(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_record(out_dir: Path, rec: RunRecord, extra_files: dict) -> Path:
    """Write ``extra_files`` (name -> callable(path)) and ``record.json`` under one lock."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    target = run_dir(out_dir, rec)
    with FileLock(str(out_dir / ".lock")):
        target.mkdir(parents=True, exist_ok=True)
        for name, writer in extra_files.items():
            writer(target / name)
        rec.files = sorted(extra_files)
        write_json(target / "record.json", rec.to_dict())
    return target


def load_record(ref: str, out_dir: Path) -> tuple:
    """Find a record by id, run directory, or ``record.json`` path; returns ``(dict, dir)``."""
    p = Path(ref)
    if p.is_file():
        path = p
    elif p.is_dir():
        path = p / "record.json"
    else:
        path = Path(out_dir) / ref / "record.json"
    if not path.is_file():
        raise FileNotFoundError(f"unknown record {ref!r}")
    with open(path) as fh:
        return json.load(fh), path.parent


def load_schema() -> dict:
    text = resources.files("ratio_lab").joinpath("schemas/record.schema.json").read_text()
    return json.loads(text)


def cache_get(out_dir: Path, key: str):
    path = Path(out_dir) / "cache" / f"{key}.json"
    if path.is_file():
        with open(path) as fh:
            return json.load(fh)
    return None


def cache_put(out_dir: Path, key: str, payload: dict) -> None:
    folder = Path(out_dir) / "cache"
    folder.mkdir(parents=True, exist_ok=True)
    with FileLock(str(Path(out_dir) / ".lock")):
        write_json(folder / f"{key}.json", payload)
