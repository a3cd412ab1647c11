"""Key-value (TOML) configuration loading shared by the public modules."""

from __future__ import annotations

import importlib.resources

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    """Missing, malformed, or inconsistent configuration value."""


def load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: {err}") from None


def load_packaged_toml(name: str) -> dict:
    resource = importlib.resources.files("credalavg.configs").joinpath(name)
    with resource.open("rb") as fh:
        return tomllib.load(fh)


def require(data: dict, key: str, where: str):
    if key not in data:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return data[key]


def float_list(value, key: str, where: str) -> list[float]:
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) for v in value):
        raise ConfigError(f"{where}: {key!r} must be a list of numbers")
    return [float(v) for v in value]
