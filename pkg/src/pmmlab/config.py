"""Scenario files and run manifests.

A scenario file is a flat key-value file with a single ``[scenario]``
section.  Keys mirror :class:`ScenarioConfig`; synthetic-feed parameters take
a ``synth_`` prefix::

    [scenario]
    synth_kind = random_walk
    synth_tokens = 4
    synth_hours = 720
    seed = 7
    makers = pmm, mpmm
    k_values = 0.05, 0.25, 0.5, 0.75

A relative ``feed`` path is resolved against the file's own directory.
Manifests are JSON and carry the fully resolved config, so they can be fed
back to ``run`` to reproduce a run exactly.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import fields
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from . import __version__
from .errors import ConfigError
from .feed import format_feed
from .simulator import ScenarioConfig
from .synth import SynthParams, synth_feed

SECTION = "scenario"
SYNTH_PREFIX = "synth_"
_LIST_KEYS = {"tokens": str, "makers": str, "k_values": float}
_SCALAR_KEYS = {
    "feed": str,
    "synth_kind": str,
    "start": str,
    "end": str,
    "swaps_per_hour": int,
    "mean_swap_usd": float,
    "swap_usd_sd": float,
    "seed": int,
    "provision_fraction": float,
    "pair_value_fraction": float,
}
_SYNTH_TYPES = {
    "tokens": int, "hours": int, "start": str, "volatility": float, "drift": float,
    "base_market_cap": float, "cap_decay": float, "volume_fraction": float,
    "bull_cap_multiple": float, "bear_cap_multiple": float,
    "bull_volume_multiple": float, "bear_volume_multiple": float,
    "crash_token": str, "crash_factor": float, "crash_start": int, "crash_hours": int,
}


def _convert(key: str, text: str, kind: type) -> Any:
    try:
        return kind(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {text!r}") from exc


def parse_list(key: str, text: str, kind: type = str) -> tuple:
    items = [t.strip() for t in text.split(",") if t.strip()]
    return tuple(_convert(key, t, kind) for t in items)


def config_from_pairs(pairs: Mapping[str, str], base_dir: Optional[Path] = None) -> ScenarioConfig:
    """Build a config from string key-value pairs, rejecting unknown keys."""
    kwargs: dict[str, Any] = {}
    synth: dict[str, Any] = {}
    for key, raw in pairs.items():
        text = raw.strip()
        if key in _LIST_KEYS:
            kwargs[key] = parse_list(key, text, _LIST_KEYS[key])
        elif key in _SCALAR_KEYS:
            if text.lower() in ("", "none"):
                kwargs[key] = None
            else:
                kwargs[key] = _convert(key, text, _SCALAR_KEYS[key])
        elif key.startswith(SYNTH_PREFIX) and key[len(SYNTH_PREFIX):] in _SYNTH_TYPES:
            name = key[len(SYNTH_PREFIX):]
            synth[name] = None if text.lower() == "none" else _convert(key, text, _SYNTH_TYPES[name])
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if kwargs.get("feed"):
        path = Path(kwargs["feed"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        kwargs["feed"] = str(path.resolve())
        kwargs.setdefault("synth_kind", None)
    return build_config(kwargs, synth)


def build_config(kwargs: Mapping[str, Any], synth: Mapping[str, Any]) -> ScenarioConfig:
    try:
        params = SynthParams(**synth)
        return ScenarioConfig(synth=params, **kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    extra = [s for s in parser.sections() if s != SECTION]
    if extra:
        raise ConfigError(f"unknown config section {extra[0]!r}")
    if not parser.has_section(SECTION):
        raise ConfigError(f"config {path} has no [{SECTION}] section")
    return config_from_pairs(dict(parser.items(SECTION)), path.parent)


def config_from_dict(data: Mapping[str, Any]) -> ScenarioConfig:
    """Inverse of :meth:`ScenarioConfig.to_dict`."""
    known = {f.name for f in fields(ScenarioConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
    kwargs = {k: v for k, v in data.items() if k != "synth"}
    for key in ("tokens", "makers", "k_values"):
        if kwargs.get(key) is not None:
            kwargs[key] = tuple(kwargs[key])
    synth = dict(data.get("synth") or {})
    bad = set(synth) - set(_SYNTH_TYPES)
    if bad:
        raise ConfigError(f"unknown config key {SYNTH_PREFIX + sorted(bad)[0]!r}")
    return build_config(kwargs, synth)


# -- manifests ----------------------------------------------------------------------


def feed_checksum(config: ScenarioConfig) -> str:
    """SHA-256 of the feed file, or of the serialized synthetic feed."""
    h = hashlib.sha256()
    if config.feed is not None:
        try:
            h.update(Path(config.feed).read_bytes())
        except OSError as exc:
            raise ConfigError(f"cannot read feed {config.feed}: {exc}") from exc
        return h.hexdigest()
    rows = synth_feed(config.synth_kind, config.synth, config.seed)
    h.update(format_feed(rows).encode("utf-8"))
    return h.hexdigest()


def build_manifest(config: ScenarioConfig, out_dir: Union[str, Path], checksum: str) -> dict:
    return {
        "tool": "pmmlab",
        "version": __version__,
        "seed": config.seed,
        "out_dir": str(Path(out_dir).resolve()),
        "feed_sha256": checksum,
        "config": config.to_dict(),
    }


def write_manifest(manifest: Mapping[str, Any], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path: Union[str, Path]) -> tuple[ScenarioConfig, dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed manifest {path}: {exc}") from exc
    if not isinstance(data, dict) or "config" not in data:
        raise ConfigError(f"manifest {path} has no config")
    return config_from_dict(data["config"]), data
