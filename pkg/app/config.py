"""
Run configuration: built-in defaults, a flat key=value file, and flags.

Precedence is flag > config file > default. The file is read with
python-dotenv, so comments and quoting follow .env conventions:

    # geometry
    pitch=0.0126
    branch_hidden=512,512,512
    v_in_range=4.05,4.95
"""

import logging
import os
from typing import Any, Dict, Mapping, Optional, Tuple

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.errors import ConfigError, describe_validation_error
from app.schemas import InputRanges
from app.network.model import ModelConfig
from app.oracle.properties import FluidProperties, GeometrySpec
from app.training.loop import TrainConfig

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "MIONET_LOG_LEVEL"

# flat key -> (section, field); section None for run-level keys
KEY_MAP: Dict[str, Tuple[Optional[str], str]] = {
    "pitch": ("geometry", "pitch"),
    "rod_diameter": ("geometry", "rod_diameter"),
    "length": ("geometry", "length"),
    "density": ("fluid", "density"),
    "dynamic_viscosity": ("fluid", "dynamic_viscosity"),
    "specific_heat": ("fluid", "specific_heat"),
    "thermal_conductivity": ("fluid", "thermal_conductivity"),
    "p_max_range": ("ranges", "p_max"),
    "t_in_range": ("ranges", "t_in"),
    "v_in_range": ("ranges", "v_in"),
    "branch_hidden": ("model", "branch_hidden"),
    "trunk_hidden": ("model", "trunk_hidden"),
    "dropout_rate": ("model", "dropout_rate"),
    "learning_rate": ("train", "learning_rate"),
    "l2_lambda": ("train", "l2_lambda"),
    "max_epochs": ("train", "max_epochs"),
    "patience": ("train", "patience"),
    "batch_size": ("train", "batch_size"),
    "k_folds": ("train", "k_folds"),
    "test_fraction": ("train", "test_fraction"),
    "final_holdout": ("train", "final_holdout"),
    "samples": (None, "samples"),
    "mesh_nodes": (None, "mesh_nodes"),
    "seed": (None, "seed"),
    "n1": (None, "n1"),
    "n_z": (None, "n_z"),
    "workers": (None, "workers"),
}

LIST_KEYS = {"p_max_range", "t_in_range", "v_in_range", "branch_hidden", "trunk_hidden"}


class RunConfig(BaseModel):
    """Effective configuration of one command invocation."""

    model_config = ConfigDict(frozen=True)

    geometry: GeometrySpec = GeometrySpec()
    fluid: FluidProperties = FluidProperties()
    ranges: InputRanges = InputRanges()
    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()
    samples: int = Field(5000, ge=1)
    mesh_nodes: int = Field(1733, ge=16)
    seed: int = Field(0, ge=0)
    n1: int = Field(100, ge=2)
    n_z: int = Field(256, ge=16)
    workers: int = Field(1, ge=1)

    def train_config(self) -> TrainConfig:
        """Train settings carrying the run seed."""
        return self.train.model_copy(update={"seed": self.seed})

    def model_for(self, n1: int, n_nodes: int) -> ModelConfig:
        """Layer widths sized to a dataset."""
        return self.model.model_copy(update={"n1": n1, "n_nodes": n_nodes})

    def echo(self) -> Dict[str, Any]:
        """Flat effective configuration, keys sorted."""
        flat = {}
        for key, (section, name) in KEY_MAP.items():
            value = getattr(self if section is None else getattr(self, section), name)
            flat[key] = list(value) if isinstance(value, tuple) else value
        return dict(sorted(flat.items()))


def _parse_value(key: str, raw: Any) -> Any:
    if key in LIST_KEYS and isinstance(raw, str):
        return [part.strip() for part in raw.split(",") if part.strip()]
    return raw


def load_run_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Merge defaults, the optional config file and command-line overrides.

    Args:
        path: Flat key=value file, optional
        overrides: Flag values by flat key; None values are ignored

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: unknown key, unreadable file or invalid value
    """
    flat: Dict[str, Any] = {}
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}")
        for key, raw in dotenv_values(path).items():
            if key not in KEY_MAP:
                raise ConfigError(f"unknown configuration key {key!r} in {path}")
            if raw is None:
                raise ConfigError(f"configuration key {key!r} in {path} has no value")
            flat[key] = raw
        logger.debug(f"Loaded {len(flat)} configuration keys from {path}")
    for key, value in (overrides or {}).items():
        if key not in KEY_MAP:
            raise ConfigError(f"unknown configuration key {key!r}")
        if value is not None:
            flat[key] = value

    nested: Dict[str, Any] = {}
    for key, raw in flat.items():
        section, name = KEY_MAP[key]
        value = _parse_value(key, raw)
        if section is None:
            nested[name] = value
        else:
            nested.setdefault(section, {})[name] = value
    try:
        return RunConfig(**nested)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {describe_validation_error(e)}") from e
