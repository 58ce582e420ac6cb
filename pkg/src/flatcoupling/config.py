"""Flat ``key = value`` scenario files with overrides and named presets."""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .errors import ConfigError
from .sim import ScenarioConfig

__all__ = ["PRESETS", "SWEEP_PRESETS", "dump_config", "load_config", "parse_config", "preset"]

PRESETS = {
    "paper-n4-exact": {"N": 4, "variant": "exact"},
    "paper-n4-approx": {"N": 4, "variant": "approximate", "threshold": (0.5, 2.5)},
    "paper-n4-nominal": {"N": 4, "variant": "nominal"},
    "paper-n10-sweep": {"N": 10, "variant": "approximate"},
}

SWEEP_PRESETS = {
    "paper-n10-sweep": (0.25, 0.5, 1.0, 1.5, 2.0, 2.5),
}

_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _convert(key, text):
    if key not in _FIELDS:
        raise ConfigError(f"unknown configuration key {key!r}")
    default = _FIELDS[key].default
    text = text.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            parts = [float(p) for p in text.split(",")]
            if len(parts) != len(default):
                raise ValueError(text)
            return tuple(parts)
        return text
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None


def parse_config(text, base=None):
    """Parse config text (``#`` starts a comment) on top of ``base``."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        values[key.strip()] = _convert(key.strip(), value)
    return _build(base, values)


def apply_overrides(cfg, pairs):
    values = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not key=value")
        key, value = pair.split("=", 1)
        values[key.strip()] = _convert(key.strip(), value)
    return _build(cfg, values)


def _build(base, values):
    base = base or ScenarioConfig()
    try:
        return dataclasses.replace(base, **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, base=None):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, base)


def preset(name):
    try:
        return ScenarioConfig(**PRESETS[name])
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}"
        ) from None


def dump_config(cfg):
    lines = []
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(repr(float(v)) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
