"""Plain-text run configuration: ``key = value`` lines, optional ``[env]``/``[train]`` headers.

Blank lines and lines starting with ``#`` or ``;`` are ignored. Every key
belongs to exactly one section, so headers are optional; a key placed under
the wrong header is an error, as is any unknown key. :func:`dump_config`
writes every field, and parsing its output reproduces the same objects.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .env import ConfigError, EnvConfig
from .trainer import TrainerConfig

SECTIONS = {"env": EnvConfig, "train": TrainerConfig}


def _fields(cls):
    return {f.name: f for f in dataclasses.fields(cls)}


KEY_SECTION = {name: sec for sec, cls in SECTIONS.items() for name in _fields(cls)}


def _convert(raw: str, default):
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return tuple(float(x) for x in raw.split(",") if x.strip())
    return raw


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(x)) for x in value)
    return str(value)


def parse_config_text(text: str, source: str = "<config>"):
    values = {sec: {} for sec in SECTIONS}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError(f"{source}:{lineno}: malformed section header {stripped!r}")
            section = stripped[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"{source}:{lineno}: unknown section [{section}]")
            continue
        key, sep, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key or not raw:
            raise ConfigError(f"{source}:{lineno}: malformed line, expected 'key = value': {stripped!r}")
        if key not in KEY_SECTION:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        owner = KEY_SECTION[key]
        if section is not None and section != owner:
            raise ConfigError(f"{source}:{lineno}: key {key!r} belongs in [{owner}], not [{section}]")
        if key in values[owner]:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        default = _fields(SECTIONS[owner])[key].default
        try:
            values[owner][key] = _convert(raw, default)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: invalid value for {key!r}: {exc}") from None
    env = EnvConfig(**values["env"])
    train = TrainerConfig(**values["train"])
    try:
        env.validate()
        train.validate()
    except ConfigError as exc:
        raise ConfigError(f"{source}: invalid configuration: {exc}") from None
    return env, train


def parse_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), str(path))


def dump_config(env: EnvConfig, train: TrainerConfig) -> str:
    lines = []
    for sec, obj in (("env", env), ("train", train)):
        lines.append(f"[{sec}]")
        for f in dataclasses.fields(obj):
            lines.append(f"{f.name} = {_format(getattr(obj, f.name))}")
        lines.append("")
    return "\n".join(lines)
