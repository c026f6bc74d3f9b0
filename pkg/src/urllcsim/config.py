import hashlib
import json
from pathlib import Path
from typing import Any, Optional, Union

import yaml

from .exceptions import ConfigError
from .model import ExperimentConfig

HASH_EXCLUDE = {"workers", "output"}
"""Settings that never change a result and stay out of the config hash"""


def _lower_keys(data: Any) -> Any:
    """Lower-case the keys of every nested mapping"""
    if isinstance(data, dict):
        return {str(key).lower(): _lower_keys(value) for key, value in data.items()}
    return data


def read_config(config: Union[Path, ExperimentConfig]) -> ExperimentConfig:
    """
    Reads a yaml (or json) experiment file

    Returns an ExperimentConfig object with the data validated and type casted
    """
    if isinstance(config, Path):
        try:
            data = yaml.safe_load(config.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as error:
            raise ConfigError(f"{config} is not valid yaml: {error}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{config} must contain a mapping at the top level")
        lower = {key: value for key, value in _lower_keys(data).items() if value is not None}
        return ExperimentConfig.model_validate(lower)

    elif isinstance(config, ExperimentConfig):
        return config

    else:
        raise ConfigError("Config must be a pathlib.Path or urllcsim.ExperimentConfig")


def apply_overrides(
    config: ExperimentConfig,
    *,
    seed: Optional[int] = None,
    out: Optional[Path] = None,
    workers: Optional[int] = None,
) -> ExperimentConfig:
    """Command line flags win over the file, the result is validated again"""
    data = config.model_dump()
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data["output"]["dir"] = out
    if workers is not None:
        data["workers"] = workers
    return ExperimentConfig.model_validate(data)


def config_hash(config: ExperimentConfig) -> str:
    """First 16 hex digits of the SHA-256 of the canonical JSON dump"""
    data = config.model_dump(mode="json", exclude=HASH_EXCLUDE)
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
