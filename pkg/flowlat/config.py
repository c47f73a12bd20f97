"""Run defaults, overridable through FLOWLAT_* environment variables or a .env file."""

from __future__ import annotations

import os
from collections.abc import Mapping
from dataclasses import dataclass, replace

from dotenv import find_dotenv, load_dotenv

from .errors import ConfigError
from .lattice import BUILTIN_LATTICES

OUTPUT_FORMATS = ("text", "json")


@dataclass(frozen=True)
class Settings:
    domain: tuple[int, ...] = (0, 1)
    fuel: int = 64
    seed: int = 0
    trials: int = 200
    workers: int = 1
    lattice: str = "two-point"
    output_format: str = "text"


def parse_domain(text: str) -> tuple[int, ...]:
    """``0,1,2`` -> (0, 1, 2)."""
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"domain must be comma-separated integers, got {text!r}") from None
    if not values:
        raise ConfigError("domain must not be empty")
    return values


def _int(name: str, text: str, minimum: int) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {text!r}") from None
    if value < minimum:
        raise ConfigError(f"{name} must be at least {minimum}, got {value}")
    return value


def settings_from(environ: Mapping[str, str], base: Settings = Settings()) -> Settings:
    """Apply the FLOWLAT_* variables found in ``environ`` on top of ``base``."""
    changes: dict[str, object] = {}
    if "FLOWLAT_DOMAIN" in environ:
        changes["domain"] = parse_domain(environ["FLOWLAT_DOMAIN"])
    for key, field_name, minimum in (
        ("FLOWLAT_FUEL", "fuel", 0),
        ("FLOWLAT_SEED", "seed", 0),
        ("FLOWLAT_TRIALS", "trials", 1),
        ("FLOWLAT_WORKERS", "workers", 1),
    ):
        if key in environ:
            changes[field_name] = _int(key, environ[key], minimum)
    if "FLOWLAT_LATTICE" in environ:
        # anything that is not a built-in name is taken as a lattice spec file path
        changes["lattice"] = environ["FLOWLAT_LATTICE"].strip() or base.lattice
    if "FLOWLAT_FORMAT" in environ:
        fmt = environ["FLOWLAT_FORMAT"].strip()
        if fmt not in OUTPUT_FORMATS:
            raise ConfigError(f"FLOWLAT_FORMAT must be one of {', '.join(OUTPUT_FORMATS)}, got {fmt!r}")
        changes["output_format"] = fmt
    return replace(base, **changes)  # type: ignore[arg-type]


def load_settings(dotenv_path: str | None = None) -> Settings:
    """Defaults, then a .env file (nearest to the working directory), then the process environment."""
    load_dotenv(dotenv_path or find_dotenv(usecwd=True))
    return settings_from(os.environ)


__all__ = ["BUILTIN_LATTICES", "OUTPUT_FORMATS", "Settings", "load_settings", "parse_domain", "settings_from"]
