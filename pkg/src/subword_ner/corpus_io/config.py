"""Flat ``key = value`` configuration files for :class:`TrainConfig`."""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path
from typing import Any, Mapping

from ..errors import ConfigError, DomainError
from ..training import TrainConfig

_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


def parse_units(text: str) -> tuple[str, ...]:
    text = text.strip()
    if text in ("", "none"):
        return ()
    return tuple(u.strip() for u in text.split(",") if u.strip())


def format_units(units) -> str:
    return ",".join(units) if units else "none"


def _convert(name: str, kind, raw: str) -> Any:
    if name == "units":
        return parse_units(raw)
    if kind in (bool, "bool"):
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind in (int, "int"):
        return int(raw)
    if kind in (float, "float"):
        return float(raw)
    raise ValueError(f"unsupported field type for {name}")


def parse_config_text(text: str, source=None) -> dict[str, Any]:
    """Overrides named in a config text; unknown or repeated keys are errors."""
    kinds = {f.name: f.type for f in fields(TrainConfig)}
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError("expected key = value", source, lineno)
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in kinds:
            raise ConfigError(f"unknown key {key!r}", source, lineno)
        if key in values:
            raise ConfigError(f"key {key!r} given twice", source, lineno)
        try:
            values[key] = _convert(key, kinds[key], raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", source, lineno) from None
    return values


def read_config(path, base: TrainConfig | None = None) -> TrainConfig:
    path = Path(path)
    overrides = parse_config_text(path.read_text(encoding="utf-8"), path)
    return apply_overrides(base or TrainConfig(), overrides, path)


def apply_overrides(base: TrainConfig, overrides: Mapping[str, Any], source=None) -> TrainConfig:
    try:
        return base.replace(**overrides)
    except DomainError as exc:
        raise ConfigError(str(exc), source) from None


def format_config(config: TrainConfig) -> str:
    lines = []
    for f in fields(TrainConfig):
        value = getattr(config, f.name)
        if f.name == "units":
            value = format_units(value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        else:
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def write_config(path, config: TrainConfig) -> None:
    Path(path).write_text(format_config(config), encoding="utf-8")
