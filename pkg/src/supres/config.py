"""Run-configuration files: YAML loading and key=value overrides.

A config file mirrors the request schemas section by section (model, solver,
mc, simulate, sweep, output) under a top-level schema_version.  Overrides
are dotted paths applied after parsing; values go through the YAML scalar
parser so `mc.seed=7` yields an integer and `model.pos.mu_rate=0.05` a
float.  Distinct keys commute, so override order does not matter.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .errors import ConfigError

SCHEMA_VERSION = 1


def load_config(path: str | Path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {p} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {p} must hold a mapping at top level")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"config schema_version must be {SCHEMA_VERSION}, got {version!r}")
    return data


def apply_overrides(config: dict, overrides) -> dict:
    """Apply `a.b.c=value` overrides in place and return the config."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, raw = item.split("=", 1)
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            raise ConfigError(f"override has an empty key: {item!r}")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            value = raw
        node = config
        for part in parts[:-1]:
            nxt = node.get(part)
            if nxt is None:
                nxt = {}
                node[part] = nxt
            elif not isinstance(nxt, dict):
                raise ConfigError(f"override {key!r} descends through a scalar")
            node = nxt
        node[parts[-1]] = value
    return config
