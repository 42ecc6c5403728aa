"""Flat ``name = value`` configuration files.

One assignment per line, ``#`` starts a comment, blank lines are ignored.
Keys must come from the caller's allowed set; anything else is an error
reported with its line number.
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterable

from .errors import ConfigError


def parse_key_values(
    text: str, allowed: Iterable[str], source: str = "<config>"
) -> dict[str, tuple[str, int]]:
    """Return ``{key: (raw_value, line_number)}``."""
    allowed = set(allowed)
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'name = value', got {raw.strip()!r}", lineno, source)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", lineno, source)
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}", lineno, source)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r} (first set on line {entries[key][1]})", lineno, source)
        entries[key] = (value, lineno)
    return entries


def read_key_values(path: str | Path, allowed: Iterable[str]) -> dict[str, tuple[str, int]]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror or exc}", None, str(path)) from exc
    return parse_key_values(text, allowed, source=str(path))


def as_float(entry: tuple[str, int], key: str, source: str = "<config>") -> float:
    value, lineno = entry
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}", lineno, source) from None


def as_int(entry: tuple[str, int], key: str, source: str = "<config>") -> int:
    number = as_float(entry, key, source)
    if not number.is_integer():
        raise ConfigError(f"{key}: expected an integer, got {entry[0]!r}", entry[1], source)
    return int(number)


def as_float_list(entry: tuple[str, int], key: str, source: str = "<config>") -> list[float]:
    """Comma-separated numbers, or an inclusive ``start:stop:step`` range."""
    value, lineno = entry
    if not value:
        return []
    if ":" in value:
        parts = value.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{key}: range must be start:stop:step", lineno, source)
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"{key}: bad range {value!r}", lineno, source) from None
        if step <= 0 or stop < start:
            raise ConfigError(f"{key}: range needs step > 0 and stop >= start", lineno, source)
        count = int(round((stop - start) / step))
        # snap to the grid so e.g. 0.1 steps do not accumulate drift
        values = [round(start + i * step, 12) for i in range(count + 1)]
        return [v for v in values if v <= stop + 1e-9]
    out = []
    for item in value.split(","):
        item = item.strip()
        try:
            out.append(float(item))
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {item!r}", lineno, source) from None
    return out
