from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator


DEFAULT_CONFIG_PATH = "channel_boxes.yaml"
CONFIG_ENV_VAR = "CHANNEL_BOXES_CONFIG"

_LOG_LEVELS = {"CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"}


class LinalgSettings(BaseModel):
    """Numerical tolerances for dense linear algebra."""

    model_config = ConfigDict(extra="forbid")

    hermiticity_tol: float = Field(default=1e-10, gt=0)
    rank_tol: float = Field(default=1e-10, gt=0)


class SolverSettings(BaseModel):
    """Tolerances and limits handed to the SDP backend."""

    model_config = ConfigDict(extra="forbid")

    feasibility_tol: float = Field(default=1e-8, gt=0)
    gap_tol: float = Field(default=1e-7, gt=0)
    max_iterations: int = Field(default=200, ge=1)
    unbounded_threshold: float = Field(default=1e12, gt=0)
    # probability-like optima at or below this are read as exact zeros
    zero_floor: float = Field(default=1e-7, gt=0, lt=1)
    backend: str = Field(default="CLARABEL", pattern=r"^[A-Z_]+$")
    verbose: bool = False

    @field_validator("backend", mode="before")
    @classmethod
    def normalise_backend(cls, value: Any) -> Any:
        return value.upper() if isinstance(value, str) else value

    def tightened(self, factor: float = 100.0) -> "SolverSettings":
        return self.model_copy(
            update={
                "feasibility_tol": self.feasibility_tol / factor,
                "gap_tol": self.gap_tol / factor,
                "max_iterations": self.max_iterations * 2,
            }
        )


class HeuristicSettings(BaseModel):
    """Multi-restart local search over pure inputs."""

    model_config = ConfigDict(extra="forbid")

    restarts: int = Field(default=8, ge=1)
    max_iterations: int = Field(default=500, ge=1)
    step_tol: float = Field(default=1e-9, gt=0)
    seed: int = Field(default=0, ge=0)


class BoxSettings(BaseModel):
    """Validation and size limits for channel boxes and superchannels."""

    model_config = ConfigDict(extra="forbid")

    validation_tol: float = Field(default=1e-6, gt=0)
    tensor_dim_cap: int = Field(default=256, ge=4)
    standard_in_dim: int = Field(default=2, ge=1)


class RunSettings(BaseModel):
    """Batch execution options for the command line."""

    model_config = ConfigDict(extra="forbid")

    jobs: int = Field(default=1, ge=1)
    log_level: str = Field(default="INFO")

    @field_validator("log_level")
    @classmethod
    def ensure_log_level(cls, value: str) -> str:
        level = value.upper()
        if level not in _LOG_LEVELS:
            raise ValueError(f"Unknown log level '{value}'")
        return level


class Settings(BaseModel):
    """Full configuration model."""

    model_config = ConfigDict(extra="forbid")

    linalg: LinalgSettings = Field(default_factory=LinalgSettings)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    heuristic: HeuristicSettings = Field(default_factory=HeuristicSettings)
    boxes: BoxSettings = Field(default_factory=BoxSettings)
    run: RunSettings = Field(default_factory=RunSettings)

    @model_validator(mode="after")
    def validate_tolerances(self) -> "Settings":
        if self.solver.feasibility_tol > self.boxes.validation_tol:
            raise ValueError("solver.feasibility_tol must not exceed boxes.validation_tol")
        return self

    def with_overrides(
        self,
        *,
        tol: Optional[float] = None,
        gap_tol: Optional[float] = None,
        restarts: Optional[int] = None,
        seed: Optional[int] = None,
        jobs: Optional[int] = None,
        log_level: Optional[str] = None,
    ) -> "Settings":
        """Return a validated copy with command-line overrides applied."""

        raw = self.model_dump()
        if tol is not None:
            raw["solver"]["feasibility_tol"] = tol
        if gap_tol is not None:
            raw["solver"]["gap_tol"] = gap_tol
        if restarts is not None:
            raw["heuristic"]["restarts"] = restarts
        if seed is not None:
            raw["heuristic"]["seed"] = seed
        if jobs is not None:
            raw["run"]["jobs"] = jobs
        if log_level is not None:
            raw["run"]["log_level"] = log_level
        try:
            return Settings.model_validate(raw)
        except ValidationError as exc:
            errors = exc.errors(include_url=False)
            raise ConfigurationError(f"Invalid command-line override: {errors}") from exc


class ConfigurationError(RuntimeError):
    """Raised when configuration loading fails."""


def _load_yaml(path: Path) -> Dict[str, Any]:
    try:
        with path.open("r", encoding="utf-8") as handle:
            return yaml.safe_load(handle) or {}
    except FileNotFoundError as exc:
        raise ConfigurationError(f"Configuration file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Failed to parse YAML configuration: {exc}") from exc


def load_settings(path: Optional[str] = None) -> Settings:
    """Load settings from a YAML file, defaulting to CHANNEL_BOXES_CONFIG or channel_boxes.yaml.

    The implicit default file is optional; an explicitly named file must exist.
    """

    explicit = path or os.environ.get(CONFIG_ENV_VAR)
    resolved_path = Path(explicit or DEFAULT_CONFIG_PATH)
    if not explicit and not resolved_path.exists():
        return Settings()
    raw_config = _load_yaml(resolved_path)
    try:
        return Settings.model_validate(raw_config)
    except ValidationError as exc:
        errors = exc.errors(include_url=False)
        raise ConfigurationError(f"Configuration validation error: {errors}") from exc
