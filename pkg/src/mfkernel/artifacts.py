"""Deterministic artifact writing: JSON, RFC-4180 CSV and a run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np


def _plain(obj):
    """Convert numpy scalars/arrays and tuples into JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)  # "inf", "-inf", "nan" as strings keep the file valid JSON
    return obj


def dumps(obj) -> str:
    # json uses repr for floats, which round-trips exactly
    return json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=False)


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(_plain(config), sort_keys=True).encode()).hexdigest()


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


class RunDir:
    """Output directory that records every file it writes in ``manifest.json``."""

    def __init__(self, path, command: str, config: dict):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.config = _plain(config)
        self.hash = config_hash(self.config)
        self.files: dict[str, str] = {}

    def _record(self, name: str):
        digest = hashlib.sha256((self.path / name).read_bytes()).hexdigest()
        self.files[name] = digest

    def json(self, name: str, payload: dict) -> Path:
        body = {"command": self.command, "config": self.config, "config_hash": self.hash}
        body.update(payload)
        target = self.path / name
        target.write_text(dumps(body) + "\n", encoding="utf-8")
        self._record(name)
        return target

    def csv(self, name: str, header, rows) -> Path:
        target = self.path / name
        with open(target, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
        self._record(name)
        return target

    def raw(self, name: str, writer) -> Path:
        """Let ``writer(path)`` produce the file, then record it."""
        target = self.path / name
        writer(target)
        self._record(name)
        return target

    def finish(self) -> Path:
        target = self.path / "manifest.json"
        target.write_text(dumps({"command": self.command, "config": self.config,
                                 "config_hash": self.hash, "files": self.files}) + "\n",
                          encoding="utf-8")
        return target


def output_root(default: str = "mfkernel-runs") -> Path:
    return Path(os.environ.get("MFKERNEL_OUTPUT_ROOT", default))
