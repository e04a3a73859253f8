"""Flat ``key = value`` run configuration files.

Keys mirror the long CLI flags (``batch-size`` or ``batch_size``). Blank lines
and ``#`` comments are ignored. Values are kept as strings; the CLI converts
them with the same parsers it uses for flags.
"""

from __future__ import annotations

from pathlib import Path


class ConfigFileError(ValueError):
    pass


def normalize_key(key: str) -> str:
    return key.strip().lstrip("-").replace("-", "_")


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigFileError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = normalize_key(key)
        if not key:
            raise ConfigFileError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigFileError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def read_config(path) -> dict[str, str]:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def format_value(value) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    if value is None:
        return ""
    return str(value)


def write_config(path, values: dict) -> None:
    lines = [f"{k} = {format_value(v)}" for k, v in sorted(values.items())]
    Path(path).write_text("\n".join(lines) + "\n")
