"""Run configuration: INI-style ``key = value`` files merged with command-line flags.

Precedence is flags > file > defaults.  A file may hold one section per
subcommand plus a ``[DEFAULT]`` section shared by all of them.  Keys are
case sensitive (``D`` and ``d`` are different parameters).
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping


class ConfigError(ValueError):
    """Invalid or incomplete configuration (CLI exit status 2)."""


@dataclass(frozen=True)
class Option:
    flag: str
    dest: str
    type: Callable[[str], Any] = str
    default: Any = None
    help: str = ""
    required: bool = False
    is_flag: bool = False


def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_config_file(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parser


@dataclass
class RunConfig:
    """Resolved parameters of one subcommand invocation."""

    command: str
    values: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def to_ini(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser[self.command] = {
            k: _render(v) for k, v in sorted(self.values.items()) if v is not None and k != "config"
        }
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def _render(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_render(v) for v in value)
    return str(value)


def resolve(
    command: str,
    options: list[Option],
    flags: Mapping[str, Any],
    file: configparser.ConfigParser | None = None,
) -> RunConfig:
    """Merge defaults, the ``[command]`` file section and explicitly given flags."""
    values: dict[str, Any] = {opt.dest: opt.default for opt in options}
    if file is not None:
        section = file[command] if file.has_section(command) else file.defaults()
        known = {opt.dest: opt for opt in options}
        for key, raw in section.items():
            opt = known.get(key)
            if opt is None:
                if file.has_section(command) and key not in file.defaults():
                    raise ConfigError(f"unknown key {key!r} in [{command}]")
                continue
            try:
                values[key] = parse_bool(raw) if opt.is_flag else opt.type(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
    for key, val in flags.items():
        if val is not None:
            values[key] = val
    missing = [opt.flag for opt in options if opt.required and values.get(opt.dest) is None]
    if missing:
        raise ConfigError(f"missing required option(s): {', '.join(missing)}")
    return RunConfig(command, values)
