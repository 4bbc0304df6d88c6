"""Byte-stable CSV and JSON emission with atomic replacement."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from pathlib import Path


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return v


def csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(x) for x in r])
    return buf.getvalue().encode()


def json_bytes(obj) -> bytes:
    return (json.dumps(_jsonable(obj), indent=1, sort_keys=True) + "\n").encode()


def table_bytes(header, rows, fmt: str) -> bytes:
    if fmt == "csv":
        return csv_bytes(header, rows)
    return json_bytes([dict(zip(header, r)) for r in rows])


def atomic_write(path: Path, data: bytes) -> str:
    """Write through a temporary file in the same directory; returns sha256."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(data).hexdigest()


class ArtifactWriter:
    """Single writer for a run directory; remembers what it wrote."""

    def __init__(self, out_dir, fmt: str = "csv"):
        self.out = Path(out_dir)
        self.fmt = fmt
        self.entries = []

    def _emit(self, name: str, data: bytes, kind: str):
        digest = atomic_write(self.out / name, data)
        self.entries.append({"path": name, "sha256": digest, "bytes": len(data),
                             "kind": kind})
        return self.out / name

    def table(self, stem: str, header, rows):
        name = f"{stem}.{self.fmt}"
        return self._emit(name, table_bytes(list(header), list(rows), self.fmt), "table")

    def document(self, stem: str, obj):
        return self._emit(f"{stem}.json", json_bytes(obj), "document")

    def manifest(self, **fields):
        return atomic_write(self.out / "manifest.json",
                            json_bytes({**fields, "outputs": self.entries}))
