"""``key = value`` run configuration files.

Plain keys set :class:`~segword.training.TrainConfig` fields, keys prefixed
``pretrain.`` set :class:`~segword.embeddings.PretrainConfig` fields, and a
fixed set of path keys locates the data. Anything else is rejected before
any work starts. ``#`` starts a comment.
"""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

from .embeddings import PretrainConfig
from .training import TrainConfig

__all__ = ["ConfigError", "PATH_KEYS", "RunConfig", "parse_config", "load_config"]

PATH_KEYS = ("train", "dev", "vocab", "alphabet", "dev_pairs", "out", "log")


class ConfigError(ValueError):
    pass


def _coerce(key: str, text: str, hint) -> Any:
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        if text.lower() in ("none", ""):
            return None
        hint = args[0]
    try:
        if hint is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if hint is int:
            return int(text)
        if hint is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot read {text!r} as {getattr(hint, '__name__', hint)}") from None


def _fields(cls) -> dict[str, Any]:
    hints = typing.get_type_hints(cls)
    return {f.name: hints[f.name] for f in dataclasses.fields(cls)}


@dataclass
class RunConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    pretrain: PretrainConfig = field(default_factory=PretrainConfig)
    paths: dict[str, str] = field(default_factory=dict)

    def path(self, key: str, required: bool = True) -> Optional[Path]:
        value = self.paths.get(key)
        if value is None:
            if required:
                raise ConfigError(f"missing required key {key!r}")
            return None
        return Path(value)

    def require_existing(self, *keys: str) -> None:
        for key in keys:
            p = self.path(key)
            if not p.exists():
                raise ConfigError(f"{key} = {p} does not exist")


def parse_config(
    lines: Iterable[str], overrides: Iterable[str] = (), source: str = "<config>", base: Optional[Path] = None
) -> RunConfig:
    """Parse ``key = value`` lines, then ``key=value`` overrides, validating every key.

    Relative paths in ``lines`` are taken relative to ``base`` when given;
    paths in overrides stay relative to the working directory.
    """
    train_fields = _fields(TrainConfig)
    pre_fields = _fields(PretrainConfig)
    train_vals: dict[str, Any] = {}
    pre_vals: dict[str, Any] = {}
    paths: dict[str, str] = {}
    entries = [(f"{source}:{n}", line) for n, line in enumerate(lines, 1)]
    entries += [("override", o) for o in overrides]
    for where, raw in entries:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in PATH_KEYS:
            if base is not None and where != "override" and key != "alphabet" and not Path(value).is_absolute():
                value = str(base / value)
            paths[key] = value
        elif key.startswith("pretrain.") and key[9:] in pre_fields:
            pre_vals[key[9:]] = _coerce(key, value, pre_fields[key[9:]])
        elif key in train_fields:
            train_vals[key] = _coerce(key, value, train_fields[key])
        else:
            raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        return RunConfig(TrainConfig(**train_vals), PretrainConfig(**pre_vals), paths)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: Optional[str], overrides: Iterable[str] = ()) -> RunConfig:
    if path is None:
        return parse_config([], overrides)
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} not found")
    return parse_config(p.read_text(encoding="utf-8").splitlines(), overrides, source=str(p), base=p.parent)
