"""Deterministic artifact I/O: atomic writes, CSV/JSON formatting, hashing.

All float formatting goes through fmt_float (shortest round-trip repr) so that
identical runs produce byte-identical artifacts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

TOOL_VERSION = "0.1.0"
ARTIFACT_SCHEMA_VERSION = 1


def fmt_float(x) -> str:
    """Shortest round-trip decimal form; empty string for missing values."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def parse_float(s: str) -> float:
    if s == "":
        return math.nan
    return float(s)


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path, payload: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    """Write rows (iterables of already-formatted strings) atomically."""
    import io as _io

    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    atomic_write_text(path, buf.getvalue())


def read_csv(path):
    """Return (header, rows) with all cells as strings."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return [], []
        return header, [row for row in reader]


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def stable_hash_u64(text: str) -> int:
    """Process-independent 64-bit hash, used to derive per-item RNG streams."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def write_run_meta(out_dir, command: str, config: dict, input_paths=()):
    """Record the resolved configuration and input digests for reproducibility."""
    meta = {
        "schema_version": ARTIFACT_SCHEMA_VERSION,
        "command": command,
        "tool_version": TOOL_VERSION,
        "config": config,
        "input_hashes": {
            str(p): sha256_file(p) for p in sorted(str(x) for x in input_paths)
        },
    }
    write_json(Path(out_dir) / "run_meta.json", meta)
    return meta
