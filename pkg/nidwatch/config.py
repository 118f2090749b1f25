"""
config.py
Run configuration for the nidwatch pipeline.

Values resolve as: built-in defaults < JSON config file < command-line flags.
A ``.env`` file is honored for NIDWATCH_OUTPUT_DIR and NIDWATCH_LOG_LEVEL.
"""

import os
import json
import logging
from datetime import date
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator

from nidwatch.changepoint import SamplerSettings
from nidwatch.errors import ConfigError
from nidwatch.infodyn import SignalConfig
from nidwatch.io_utils import PathLike, write_json

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "NIDWATCH_OUTPUT_DIR"
LOG_LEVEL_ENV = "NIDWATCH_LOG_LEVEL"
DEFAULT_OUTPUT_DIR = "nidwatch_out"
RESOLVED_CONFIG_NAME = "resolved_config.json"

REPRESENTATIONS = ("tf", "lda", "import")
SLOPE_SIGNALS = ("document", "daily")


def load_env():
    """Load a .env file if python-dotenv finds one."""
    try:
        from dotenv import load_dotenv
        load_dotenv()
    except ImportError:
        pass


def default_output_dir() -> str:
    return os.getenv(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR


def default_log_level() -> str:
    return os.getenv(LOG_LEVEL_ENV, "INFO").upper()


class RunConfig(BaseModel):
    """
    Every knob a pipeline run can turn.

    Defaults: w = 7, 4 chains x 1000 draws after 1000 warmup, 94% HDIs,
    NID threshold 0.97 and 95% slope intervals.
    """
    input: Optional[str] = None
    series: Optional[str] = None
    representation: str = "tf"
    stopwords_path: Optional[str] = None
    lemma_path: Optional[str] = None
    min_count: int = Field(default=1, ge=1)
    smoothing: Optional[float] = Field(default=None, gt=0)

    lda_topics: int = Field(default=20, ge=2)
    lda_alpha: Optional[float] = Field(default=None, gt=0)
    lda_beta: float = Field(default=0.01, gt=0)
    lda_iterations: int = Field(default=500, ge=1)

    w: int = Field(default=7, ge=1)
    day_aggregation: bool = False
    per_document: bool = False
    pooled: bool = False
    slope_signals: str = "document"

    chains: int = Field(default=4, ge=2)
    draws: int = Field(default=1000, ge=1000)
    warmup: int = Field(default=1000, ge=0)
    seed: int = 0
    hdi_mass: float = Field(default=0.94, gt=0, le=1)
    nid_threshold: float = Field(default=0.97, gt=0.5, lt=1)
    slope_alpha: float = Field(default=0.05, gt=0, lt=1)

    tau1: Optional[str] = None
    tau2: Optional[str] = None
    start_date: str = "2019-12-01"
    output_dir: str = Field(default_factory=default_output_dir)
    jobs: int = Field(default=1, ge=1)
    chain_jobs: int = Field(default=1, ge=1)

    @field_validator("representation")
    @classmethod
    def validate_representation(cls, v):
        if v not in REPRESENTATIONS:
            raise ValueError(f"representation must be one of {', '.join(REPRESENTATIONS)}")
        return v

    @field_validator("slope_signals")
    @classmethod
    def validate_slope_signals(cls, v):
        if v not in SLOPE_SIGNALS:
            raise ValueError(f"slope_signals must be one of {', '.join(SLOPE_SIGNALS)}")
        return v

    @field_validator("tau1", "tau2", "start_date")
    @classmethod
    def validate_date(cls, v):
        if v is not None:
            try:
                date.fromisoformat(v)
            except ValueError:
                raise ValueError(f"expected an ISO date (YYYY-MM-DD), got {v!r}")
        return v

    @property
    def series_mode(self) -> str:
        if self.per_document:
            return "per_document"
        return "day_aggregated" if self.day_aggregation else "daily_mean"

    def signal_config(self) -> SignalConfig:
        return SignalConfig(w=self.w)

    def sampler_settings(self) -> SamplerSettings:
        return SamplerSettings(
            chains=self.chains,
            draws=self.draws,
            warmup=self.warmup,
            seed=self.seed,
            n_jobs=self.chain_jobs,
            hdi_mass=self.hdi_mass,
            nid_threshold=self.nid_threshold,
            series_mode=self.series_mode,
            metadata={"w": self.w, "representation": self.representation, "input": self.input},
        )

    def report_fingerprint(self) -> Dict[str, Any]:
        """Settings a stored change-point report must share to be reused by ``slopes``."""
        return {
            "seed": self.seed,
            "input": self.input,
            "representation": self.representation,
            "w": self.w,
            "series_mode": self.series_mode,
            "chains": self.chains,
            "draws": self.draws,
            "warmup": self.warmup,
        }

    def write_resolved(self, output_dir: Optional[PathLike] = None) -> Path:
        target = Path(output_dir or self.output_dir) / RESOLVED_CONFIG_NAME
        return write_json(target, self.model_dump(mode="json"))


def read_config_file(path: PathLike) -> Dict[str, Any]:
    config_path = Path(path)
    if not config_path.exists():
        raise FileNotFoundError(f"config file not found: {config_path}")
    try:
        data = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {config_path}: invalid JSON ({e.msg})")
    if not isinstance(data, dict):
        raise ConfigError(f"config file {config_path}: expected a JSON object")
    return data


def resolve_config(config_path: Optional[PathLike] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Merge defaults, an optional JSON config file and flag overrides.

    Overrides that are None are treated as "not given".

    Raises:
        ConfigError: unknown key or a value failing validation
    """
    load_env()
    values: Dict[str, Any] = {}
    if config_path is not None:
        values.update(read_config_file(config_path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})

    unknown = sorted(set(values) - set(RunConfig.model_fields))
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")

    try:
        config = RunConfig(**values)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "config"
        raise ConfigError(f"invalid config field '{field}': {first['msg']}")

    logger.debug("Resolved config: %s", config.model_dump())
    return config
