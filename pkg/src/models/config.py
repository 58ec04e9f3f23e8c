"""
Confmap Configuration Models

This module defines Pydantic models for configuration settings with validation.
Values come from model defaults, a YAML file, then CONFMAP_* environment
variables (a .env file is loaded first); command-line flags are applied on top
by the entry point.
"""

import os
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.models.confidence import ConfidenceFormula, GenerationParams, ThresholdMode
from src.models.corruption import MAX_SEED

# Load environment variables from .env file
load_dotenv()

ENV_PREFIX = "CONFMAP_"
_TRUE = ("1", "true", "yes", "on")


def _env(name: str) -> Optional[str]:
    value = os.getenv(ENV_PREFIX + name)
    return value if value not in (None, "") else None


def _env_flag(name: str, default: bool) -> bool:
    value = _env(name)
    return default if value is None else value.strip().lower() in _TRUE


class GenerationConfig(BaseModel):
    """Ground-truth generation configuration."""
    model_config = ConfigDict(extra="forbid")

    distance_threshold: float = Field(3.0, gt=0, description="Margin search radius tau")
    threshold_mode: ThresholdMode = Field(ThresholdMode.RELATIVE, description="relative or absolute")
    formula: ConfidenceFormula = Field(ConfidenceFormula.CORRECTED, description="corrected or printed")

    @classmethod
    def from_env(cls):
        """Create configuration from environment variables."""
        return cls(
            distance_threshold=float(_env("DISTANCE_THRESHOLD") or 3.0),
            threshold_mode=_env("THRESHOLD_MODE") or ThresholdMode.RELATIVE,
            formula=_env("FORMULA") or ConfidenceFormula.CORRECTED,
        )

    def to_params(self) -> GenerationParams:
        return GenerationParams(
            distance_threshold=self.distance_threshold,
            threshold_mode=self.threshold_mode,
            formula=self.formula,
        )


class MetricsConfig(BaseModel):
    """Scoring configuration."""
    model_config = ConfigDict(extra="forbid")

    w_out: float = Field(10.0, ge=1, description="Weight of zero-confidence ground-truth pixels")
    resample_n: int = Field(6, ge=2, description="Points per trajectory before scoring")

    @classmethod
    def from_env(cls):
        """Create configuration from environment variables."""
        return cls(
            w_out=float(_env("W_OUT") or 10.0),
            resample_n=int(_env("RESAMPLE_N") or 6),
        )


class CorruptionConfig(BaseModel):
    """Corruption configuration."""
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(0, ge=0, le=MAX_SEED, description="Seed of every random stream in a run")

    @classmethod
    def from_env(cls):
        """Create configuration from environment variables."""
        return cls(seed=int(_env("SEED") or 0))


class RuntimeConfig(BaseModel):
    """Execution configuration."""
    model_config = ConfigDict(extra="forbid")

    threads: int = Field(1, ge=1, description="Frames processed concurrently")
    strict: bool = Field(False, description="Treat missing counterpart frames as fatal")
    keep_partial: bool = Field(False, description="Keep outputs of a failed generate run")
    log_level: str = Field("INFO", description="Console logging level")
    log_dir: Optional[str] = Field("logs", description="Directory for log files; empty disables them")

    @field_validator("log_level")
    @classmethod
    def check_level(cls, v: str) -> str:
        level = v.upper()
        if level not in ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level '{v}'")
        return level

    @field_validator("log_dir")
    @classmethod
    def empty_disables(cls, v: Optional[str]) -> Optional[str]:
        return v or None

    @classmethod
    def from_env(cls):
        """Create configuration from environment variables."""
        return cls(
            threads=int(_env("THREADS") or 1),
            strict=_env_flag("STRICT", False),
            keep_partial=_env_flag("KEEP_PARTIAL", False),
            log_level=_env("LOG_LEVEL") or "INFO",
            log_dir=os.getenv(ENV_PREFIX + "LOG_DIR", "logs"),
        )


# Environment variable -> (section, field)
_ENV_FIELDS = {
    "DISTANCE_THRESHOLD": ("generation", "distance_threshold"),
    "THRESHOLD_MODE": ("generation", "threshold_mode"),
    "FORMULA": ("generation", "formula"),
    "W_OUT": ("metrics", "w_out"),
    "RESAMPLE_N": ("metrics", "resample_n"),
    "SEED": ("corruption", "seed"),
    "THREADS": ("runtime", "threads"),
    "STRICT": ("runtime", "strict"),
    "KEEP_PARTIAL": ("runtime", "keep_partial"),
    "LOG_LEVEL": ("runtime", "log_level"),
    "LOG_DIR": ("runtime", "log_dir"),
}


class AppConfig(BaseModel):
    """Main application configuration."""
    model_config = ConfigDict(extra="forbid")

    generation: GenerationConfig = Field(default_factory=GenerationConfig)
    metrics: MetricsConfig = Field(default_factory=MetricsConfig)
    corruption: CorruptionConfig = Field(default_factory=CorruptionConfig)
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)

    @classmethod
    def from_env(cls):
        """Create configuration from environment variables."""
        return cls(
            generation=GenerationConfig.from_env(),
            metrics=MetricsConfig.from_env(),
            corruption=CorruptionConfig.from_env(),
            runtime=RuntimeConfig.from_env(),
        )

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]):
        """Create configuration from a dictionary (loaded from YAML)."""
        return cls(
            generation=GenerationConfig(**(config_dict.get("generation", {}) or {})),
            metrics=MetricsConfig(**(config_dict.get("metrics", {}) or {})),
            corruption=CorruptionConfig(**(config_dict.get("corruption", {}) or {})),
            runtime=RuntimeConfig(**(config_dict.get("runtime", {}) or {})),
        )

    @classmethod
    def from_yaml_and_env(cls, config_dict: Dict[str, Any]):
        """Create configuration by merging YAML and environment variables.

        Environment variables take precedence over YAML configuration.
        """
        config = cls.from_dict(config_dict).to_dict()
        env_config = cls.from_env().to_dict()

        for name, (section, field) in _ENV_FIELDS.items():
            if os.getenv(ENV_PREFIX + name) is not None:
                config[section][field] = env_config[section][field]

        return cls.from_dict(config)

    def with_overrides(self, overrides: Dict[str, Dict[str, Any]]):
        """Return a copy with non-None values replaced, e.g. from command-line flags."""
        config = self.to_dict()
        for section, values in overrides.items():
            for field, value in values.items():
                if value is not None:
                    config[section][field] = value
        return AppConfig.from_dict(config)

    def to_dict(self) -> Dict[str, Any]:
        """Convert the config to plain JSON types."""
        return self.model_dump(mode="json")
