"""Experiment configuration files.

A config file is a YAML mapping whose keys are the :class:`ExperimentConfig`
field names, e.g.::

    scheme: ScalarFeedback
    bit_algorithm: SDR
    R: 20
    power_split: Equal
    snr_grid: [0, 2, 4, 6, 8]
    seed: 1

Comparison files add a ``curves`` list; each entry carries a ``label`` and
any fields that override the shared top-level values.
"""

from __future__ import annotations

import dataclasses

import yaml

from .harness import ConfigError, ExperimentConfig

__all__ = ["load_mapping", "config_from_mapping", "load_config", "load_comparison"]

_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def load_mapping(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML ({exc})") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("<file>", "top level must be a key-value mapping")
    return data


def config_from_mapping(data: dict) -> ExperimentConfig:
    """Build a config, reporting unknown keys and ill-typed values by key name."""
    data = dict(data)
    K = data.pop("K", None)
    for key in data:
        if key not in _FIELDS:
            raise ConfigError(str(key), "unknown configuration key")
    if K is not None:
        if "R" in data and data["R"] != 2 * K:
            raise ConfigError("K", "must equal R / 2")
        data.setdefault("R", 2 * K)
    for key in ("R", "target_errors", "max_trials", "block_symbols", "batch_size", "randomization_rounds", "seed"):
        if key in data:
            v = data[key]
            if isinstance(v, float) and v.is_integer():
                v = int(v)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(key, "must be an integer")
            data[key] = v
    if "feedback_error_prob" in data:
        if isinstance(data["feedback_error_prob"], bool) or not isinstance(data["feedback_error_prob"], (int, float)):
            raise ConfigError("feedback_error_prob", "must be a number")
    if "noisy_training" in data and not isinstance(data["noisy_training"], bool):
        raise ConfigError("noisy_training", "must be true or false")
    if "snr_grid" in data:
        grid = data["snr_grid"]
        if not isinstance(grid, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in grid):
            raise ConfigError("snr_grid", "must be a list of numbers (dB)")
        data["snr_grid"] = tuple(grid)
    if "channel" in data and data["channel"] is not None:
        if not isinstance(data["channel"], list):
            raise ConfigError("channel", "must be a list of per-relay records")
        data["channel"] = tuple(data["channel"])
    if "geometry" in data and data["geometry"] is not None and not isinstance(data["geometry"], dict):
        raise ConfigError("geometry", "must be a mapping")
    try:
        return ExperimentConfig(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("<config>", str(exc)) from None


def load_config(path) -> ExperimentConfig:
    data = load_mapping(path)
    if "curves" in data:
        raise ConfigError("curves", "comparison files are for sweep-compare")
    return config_from_mapping(data)


def load_comparison(path):
    """``[(label, ExperimentConfig), ...]`` from a comparison file."""
    data = load_mapping(path)
    curves = data.pop("curves", None)
    if not isinstance(curves, list) or not curves:
        raise ConfigError("curves", "must be a nonempty list of labelled overrides")
    out = []
    seen = set()
    for i, entry in enumerate(curves):
        if not isinstance(entry, dict) or "label" not in entry:
            raise ConfigError(f"curves[{i}]", "each curve needs a label")
        entry = dict(entry)
        label = str(entry.pop("label"))
        if label in seen or "," in label:
            raise ConfigError(f"curves[{i}].label", "labels must be unique and comma-free")
        seen.add(label)
        try:
            cfg = config_from_mapping({**data, **entry})
        except ConfigError as exc:
            raise ConfigError(f"curves[{i}].{exc.key}", str(exc).split(": ", 1)[-1]) from None
        out.append((label, cfg))
    return out
