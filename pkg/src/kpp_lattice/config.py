"""Flat ``key=value`` run configurations checked against a shipped schema.

Lines look like ``field.kind=periodic`` or ``field.c=1,2``; ``#`` starts a
comment. Every key must appear in ``config_schema.json``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import ConfigError

TASKS = ("simulate", "speed", "eigen-curve", "lyapunov", "sandwich", "ensemble")


@lru_cache(maxsize=1)
def schema() -> dict:
    text = resources.files("kpp_lattice").joinpath("config_schema.json").read_text()
    return json.loads(text)


def _number(key, raw, kind):
    try:
        v = int(raw) if kind == "int" else float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind}, got {raw!r}", key) from None
    if kind == "float" and not math.isfinite(v):
        raise ConfigError(f"{key}: value must be finite", key)
    return v


def _check_range(key, v, entry):
    lo, hi = entry.get("min"), entry.get("max")
    if lo is not None and (v < lo or (entry.get("exclusive_min") and v == lo)):
        op = ">" if entry.get("exclusive_min") else ">="
        raise ConfigError(f"{key}: must be {op} {lo}, got {v}", key)
    if hi is not None and (v > hi or (entry.get("exclusive_max") and v == hi)):
        op = "<" if entry.get("exclusive_max") else "<="
        raise ConfigError(f"{key}: must be {op} {hi}, got {v}", key)


def convert(key: str, raw) -> object:
    """Parse one raw value according to the schema entry of ``key``."""
    entry = schema().get(key)
    if entry is None:
        raise ConfigError(f"unknown key {key!r}", key)
    kind = entry["type"]
    if kind == "str":
        v = str(raw).strip()
        if "choices" in entry and v not in entry["choices"]:
            raise ConfigError(f"{key}: {v!r} not one of {entry['choices']}", key)
        return v
    if kind == "bool":
        if isinstance(raw, bool):
            return raw
        s = str(raw).strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}", key)
    if kind.startswith("list_"):
        items = raw if isinstance(raw, (list, tuple)) else [s for s in str(raw).split(",")]
        items = [s.strip() if isinstance(s, str) else s for s in items]
        if not items or any(s == "" for s in items):
            raise ConfigError(f"{key}: empty list entry", key)
        vals = [_number(key, s, kind[5:]) for s in items]
        for v in vals:
            _check_range(key, v, entry)
        return vals
    v = _number(key, raw, kind)
    _check_range(key, v, entry)
    return v


def parse_text(text: str) -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key=value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", key)
        out[key] = convert(key, raw)
    return out


@dataclass(frozen=True)
class RunConfig:
    task: str
    values: Mapping
    seeds: tuple
    format: str

    def get(self, key: str):
        if key in self.values:
            return self.values[key]
        return schema()[key].get("default")

    @property
    def field_spec(self) -> dict:
        spec = {}
        for key, v in self.values.items():
            if key.startswith("field."):
                name = key[6:]
                if isinstance(v, list) and len(v) == 1 and not name.endswith(("_amp", "_freq", "_phase")):
                    v = v[0]
                spec[name] = v
        return spec

    def resolved(self) -> dict:
        """Every schema key with its effective value, for the manifest."""
        out = {k: self.get(k) for k in sorted(schema()) if self.get(k) is not None}
        out["task"] = self.task
        out["format"] = self.format
        if self.seeds:
            out["seeds"] = list(self.seeds)
        return out


def load(path, task: str, *, seeds=None, fmt: str | None = None) -> RunConfig:
    """Read and validate a config file for ``task``; command-line seeds and
    format take precedence over the file."""
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}", "task")
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    values = parse_text(text)
    if values.get("task", task) != task:
        raise ConfigError(f"config is for task {values['task']!r}, not {task!r}", "task")
    values.pop("task", None)
    if seeds:
        values["seeds"] = convert("seeds", list(map(str, seeds)))
    fmt = convert("format", fmt) if fmt else values.pop("format", "csv")
    values.pop("format", None)
    seed_list = tuple(values.pop("seeds", ()))
    if values.get("curve.p_min", -3.0) >= values.get("curve.p_max", 3.0):
        raise ConfigError("curve.p_min must be below curve.p_max", "curve.p_min")
    sched = values.get("eigen.eps_schedule")
    if sched is not None and (len(sched) < 3 or any(b >= a for a, b in zip(sched, sched[1:]))):
        raise ConfigError("eigen.eps_schedule needs at least three strictly decreasing "
                          "entries", "eigen.eps_schedule")
    return RunConfig(task, values, seed_list, fmt)
