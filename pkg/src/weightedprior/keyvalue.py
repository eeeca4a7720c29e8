"""Parsing for the line-oriented ``key = value`` text format."""

from __future__ import annotations

import os
from pathlib import Path

from .grid import ValidationError


class ConfigError(ValidationError):
    """Unknown key, bad value, or malformed line in a config file."""


def parse_key_values(text: str, source: str = "<config>") -> list[tuple[int, str, str]]:
    entries, seen = [], set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        seen.add(key)
        entries.append((lineno, key, value))
    return entries


def read_key_values(path) -> dict[str, str]:
    text = Path(path).read_text()
    return {k: v for _, k, v in parse_key_values(text, os.fspath(path))}


def write_key_values(path, values: dict) -> None:
    lines = [f"{k} = {v}" for k, v in values.items()]
    Path(path).write_text("\n".join(lines) + "\n")
