"""
Run configuration: sweep parameters and scaling grids loaded from YAML
"""
import hashlib
import json
from enum import Enum
from math import comb
from pathlib import Path
from typing import Dict, List, Optional

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from app.config.logger import get_logger
from app.config.settings import settings
from app.exceptions import ConfigurationError
from app.services.analysis import DEFAULT_CAP, Pooling
from app.services.ensemble import ROW_WEIGHT, measured_rows
from app.services.fss import ScalingGrid
from app.services.simulator import NoiseModel

logger = get_logger("sweep_config")

# Scheduling and artifact options; results do not depend on them
UNHASHED_FIELDS = {"workers", "emit_circuits_dir", "emit_circuits_samples"}


class SweepMode(str, Enum):
    SIMULATED_SHOTS = "simulated-shots"
    CLASSICAL_EXACT = "classical-exact"


class NoiseSettings(BaseModel):
    p2: float = Field(0.0, ge=0.0, le=1.0)
    p_ro: float = Field(0.0, ge=0.0, le=1.0)

    def to_model(self) -> NoiseModel:
        return NoiseModel(p2=self.p2, p_ro=self.p_ro)


class SweepConfig(BaseModel):
    L: List[int] = Field(default_factory=lambda: [8, 16, 24])
    alpha_max: float = Field(1.5, gt=0)
    matrices: int = Field(900, ge=2)
    matrices_overrides: Dict[int, int] = Field(default_factory=lambda: {24: 50})
    shots: int = Field(1000, ge=1)
    noise: NoiseSettings = Field(default_factory=NoiseSettings)
    cap: int = Field(DEFAULT_CAP, ge=1)
    min_pairs: int = Field(18, ge=1)
    batch_cap: int = Field(10, ge=1)
    seed: int = Field(0, ge=0)
    mode: SweepMode = SweepMode.CLASSICAL_EXACT
    pooling: Pooling = Pooling.UNION
    workers: int = Field(1, ge=1)
    gate_stats: bool = False
    emit_circuits_dir: Optional[str] = None
    emit_circuits_samples: int = Field(1, ge=0)

    @field_validator("L")
    @classmethod
    def check_sizes(cls, sizes: List[int]) -> List[int]:
        if not sizes:
            raise ValueError("at least one system size is required")
        if any(L < 4 for L in sizes):
            raise ValueError(f"every L must be at least 4, got {sizes}")
        return sorted(set(sizes))

    @field_validator("matrices_overrides")
    @classmethod
    def check_overrides(cls, overrides: Dict[int, int]) -> Dict[int, int]:
        if any(n < 2 for n in overrides.values()):
            raise ValueError("every matrix count must be at least 2")
        return overrides

    @model_validator(mode="after")
    def check_feasible(self) -> "SweepConfig":
        for L in self.L:
            if measured_rows(L, self.alpha_max) > comb(L, ROW_WEIGHT):
                raise ValueError(f"alpha_max={self.alpha_max} asks for more distinct rows than L={L} allows")
        return self

    def matrices_for(self, L: int) -> int:
        return self.matrices_overrides.get(L, self.matrices)

    def effective_workers(self) -> int:
        return settings.VITRIQ_THREADS if settings.VITRIQ_THREADS > 0 else self.workers

    def config_hash(self) -> str:
        """First 12 hex digits of sha256 over the canonical JSON dump of the result-bearing fields"""
        canonical = json.dumps(self.model_dump(mode="json", exclude=UNHASHED_FIELDS), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def run_dir(self, output_dir: Optional[str] = None) -> Path:
        root = Path(output_dir or settings.OUTPUT_DIR)
        return root / f"{self.config_hash()}-seed{self.seed}"


def _read_yaml(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except FileNotFoundError as e:
        raise ConfigurationError(f"{path}: file not found") from e
    except yaml.YAMLError as e:
        raise ConfigurationError(f"{path}: invalid YAML ({e})") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a mapping at the top level")
    return data


def _describe(error: ValidationError) -> str:
    first = error.errors()[0]
    where = ".".join(str(part) for part in first["loc"]) or "<root>"
    return f"{where}: {first['msg']}"


def load_sweep_config(path: str) -> SweepConfig:
    """
    Load and validate a sweep configuration file.

    Args:
        path: YAML file with any subset of SweepConfig fields

    Returns:
        Validated SweepConfig

    Raises:
        ConfigurationError: Naming the file and the first failing field
    """
    try:
        cfg = SweepConfig.model_validate(_read_yaml(path))
    except ValidationError as e:
        logger.error(f"Invalid sweep config {path}: {_describe(e)}")
        raise ConfigurationError(f"{path}: {_describe(e)}") from e
    logger.info(f"Loaded sweep config {path} (hash {cfg.config_hash()})")
    return cfg


def load_scaling_grid(path: Optional[str] = None) -> ScalingGrid:
    """The scaling grid from YAML, or the default grid when no path is given"""
    if path is None:
        return ScalingGrid()
    try:
        return ScalingGrid.model_validate(_read_yaml(path))
    except ValidationError as e:
        logger.error(f"Invalid scaling grid {path}: {_describe(e)}")
        raise ConfigurationError(f"{path}: {_describe(e)}") from e
