"""Experiment configuration using Pydantic settings.

Every experiment is defined by a dotenv-style file under configs/ whose keys
carry the ZENO_ prefix, e.g.

    ZENO_EXPERIMENT=fig2
    ZENO_OMEGAS=[0.002, 0.01, 0.05]
    ZENO_GAMMA_CAVS=[0, 0.001]

Sources by precedence: explicit overrides (CLI flags) > environment
variables > the config file. List values are JSON arrays.
"""

import logging
from pathlib import Path
from typing import List, Optional

import numpy as np
from dotenv.parser import parse_stream
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .data_types import InvalidInputError, PropagationConfig, PropagationMethod, SpaceConfig, SystemParams

logger = logging.getLogger(__name__)

ENV_PREFIX = "ZENO_"
EXPERIMENTS = ("fig2", "cnot", "scaling", "vsystem", "dfs")


class ConfigError(InvalidInputError):
    """Raised for unreadable config files or unknown keys."""


def _geometric(start: float, stop: float, num: int) -> List[float]:
    return np.geomspace(start, stop, num).tolist()


class ExperimentConfig(BaseSettings):
    """Settings of one experiment run.

    Attributes:
        experiment: One of fig2, cnot, scaling, vsystem, dfs
        omegas: Rabi scales of the P0 sweep
        gamma_cavs: Spontaneous emission rates of the P0 sweep (chosen values)
        scaling_omegas: Rabi scales of the emission-time scaling fit
        omega: Rabi scale of a single cnot run
        initial_state: Named gate input, e.g. 010 or 010+011
        kappa, g, n_max, branching: Cavity model
        omega_s, gamma_s, omega_ws: V-system drive and decay
        propagation_method, dt_initial, rel_tol, abs_tol: Time evolution
        n_trajectories, seed, jobs: Monte-Carlo settings
        separation_threshold: Regime ratio flag threshold
        horizon_factor: t_max = factor * (g / |omega|)^2 for pulsed runs
        out_dir: Output directory for CSV, SVG and logs
        log_level: Console log level
    """

    model_config = SettingsConfigDict(
        env_prefix=ENV_PREFIX,
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    experiment: str = Field(default="fig2", description="Experiment to run")

    # Gate sweeps
    omegas: List[float] = Field(default_factory=lambda: _geometric(0.002, 0.2, 16))
    gamma_cavs: List[float] = Field(default_factory=lambda: [0.0, 1e-4, 1e-3, 1e-2])
    scaling_omegas: List[float] = Field(default_factory=lambda: _geometric(0.005, 0.05, 6))
    omega: float = Field(default=0.01, gt=0, description="Rabi scale of a single gate run")
    initial_state: str = Field(default="010", description="Named gate input")

    # Cavity model
    kappa: float = Field(default=1.0, ge=0)
    g: float = Field(default=1.0, gt=0)
    n_max: int = Field(default=2, ge=1)
    branching: float = Field(default=1.0, ge=0, le=1)

    # V system
    omega_s: float = Field(default=1.0)
    gamma_s: float = Field(default=10.0, ge=0)
    omega_ws: List[float] = Field(default_factory=lambda: _geometric(1e-4, 1e-3, 5))

    # Time evolution
    propagation_method: PropagationMethod = PropagationMethod.EXACT
    dt_initial: float = Field(default=0.01, gt=0)
    rel_tol: float = Field(default=1e-10, gt=0)
    abs_tol: float = Field(default=1e-12, gt=0)

    # Monte Carlo
    n_trajectories: int = Field(default=2000, ge=1)
    seed: int = Field(default=1234, ge=0, lt=2**64)
    jobs: int = Field(default=1, ge=1)

    separation_threshold: float = Field(default=0.1, gt=0)
    horizon_factor: float = Field(default=50.0, gt=0)

    out_dir: str = Field(default="results")
    log_level: str = Field(default="INFO")

    @field_validator("experiment")
    @classmethod
    def validate_experiment(cls, v: str) -> str:
        v_lower = v.lower()
        if v_lower not in EXPERIMENTS:
            raise ValueError(f"Invalid experiment: {v}. Must be one of {list(EXPERIMENTS)}")
        return v_lower

    @field_validator("omegas", "scaling_omegas")
    @classmethod
    def validate_positive_grid(cls, v: List[float]) -> List[float]:
        """Rabi grids must be non-empty and strictly positive."""
        if not v:
            raise ValueError("Grid must contain at least one value")
        if any(x <= 0 for x in v):
            raise ValueError(f"Grid values must be positive, got {v}")
        return v

    @field_validator("gamma_cavs", "omega_ws")
    @classmethod
    def validate_non_negative_grid(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("Grid must contain at least one value")
        if any(x < 0 for x in v):
            raise ValueError(f"Grid values must be non-negative, got {v}")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level is one of the standard levels."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v_upper = v.upper()
        if v_upper not in valid_levels:
            raise ValueError(f"Invalid log level: {v}. Must be one of {valid_levels}")
        return v_upper

    def system_params(self, gamma_cav: float = 0.0) -> SystemParams:
        return SystemParams(g=self.g, kappa=self.kappa, gamma_cav=gamma_cav)

    def space(self, n_max: Optional[int] = None) -> SpaceConfig:
        return SpaceConfig(n_max=n_max if n_max is not None else self.n_max)

    def propagation(self) -> PropagationConfig:
        return PropagationConfig(
            method=self.propagation_method,
            dt_initial=self.dt_initial,
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
        )


def known_keys() -> set:
    return {f"{ENV_PREFIX}{name}".upper() for name in ExperimentConfig.model_fields}


def check_config_file(path: Path) -> None:
    """Reject keys the settings would silently ignore.

    Raises:
        ConfigError: If the file is missing, malformed or has unknown keys
    """
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    problems = []
    allowed = known_keys()
    with open(path, encoding="utf-8") as stream:
        for binding in parse_stream(stream):
            line = binding.original.line
            if binding.error:
                problems.append(f"line {line}: cannot parse '{binding.original.string.strip()}'")
            elif binding.key is not None and binding.key.upper() not in allowed:
                problems.append(f"line {line}: unknown key {binding.key}")
    if problems:
        raise ConfigError(f"{path}: " + "; ".join(problems))


def load_experiment_config(path: Optional[Path] = None, **overrides) -> ExperimentConfig:
    """Build an ExperimentConfig from an optional file plus overrides.

    Overrides with value None are dropped so unset CLI flags fall through to
    the file and environment.

    Raises:
        ConfigError: On file problems
        ValidationError: On invalid field values
    """
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if path is not None:
        path = Path(path)
        check_config_file(path)
        config = ExperimentConfig(_env_file=path, **overrides)
    else:
        config = ExperimentConfig(_env_file=None, **overrides)
    logger.debug(f"Loaded {config.experiment} config from {path or 'defaults'} with overrides {sorted(overrides)}")
    return config
