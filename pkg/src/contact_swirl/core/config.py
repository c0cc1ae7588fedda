"""
Run configuration.

A YAML mapping with the sections gas, profile, grid, solver, diagnostics,
output and sweep. Missing sections take their defaults; unknown keys are
rejected with the dotted key path.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Union

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from ..errors import ConfigError
from ..profiles import PROFILE_FAMILIES, EntranceProfile, create_profile
from .gas_state import GasParameters, derive_background
from .solver import SolverConfig

logger = logging.getLogger(__name__)

ConfigSource = Union[str, Path, Mapping[str, Any]]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GasConfig(_Section):
    gamma: float = Field(1.4, gt=1.0)
    p0: float = Field(1.0, gt=0.0)
    rho0_minus: float = Field(1.0, gt=0.0)
    rho0_plus: float = Field(1.5, gt=0.0)
    u0: float = Field(0.3, gt=0.0)

    @model_validator(mode="after")
    def _subsonic(self) -> "GasConfig":
        c0 = (self.gamma * self.p0 / self.rho0_minus) ** 0.5
        if self.u0 >= c0:
            raise ValueError(f"u0 not subsonic: u0={self.u0} >= c0={c0:.6g}")
        return self

    def to_parameters(self) -> GasParameters:
        return GasParameters(gamma=self.gamma, p0=self.p0, rho0_minus=self.rho0_minus,
                             u0=self.u0, rho0_plus=self.rho0_plus)


class ProfileConfig(_Section):
    """Entrance family, its parameters and the sigma scale factor."""

    family: str = "bump"
    epsilon: float = Field(0.05, gt=0.0, lt=0.1)
    scale: float = Field(1e-3, ge=0.0)
    params: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("family")
    @classmethod
    def _known_family(cls, value: str) -> str:
        if value not in PROFILE_FAMILIES:
            available = sorted(PROFILE_FAMILIES)
            raise ValueError(f"unknown family '{value}' (available: {available})")
        return value


class GridConfig(_Section):
    L: float = Field(10.0, gt=0.0)
    nx: int = Field(64, ge=16)
    nr: int = Field(32, ge=16)


class SolverSection(_Section):
    tol_inner: float = Field(1e-10, gt=0.0)
    tol_middle: float = Field(1e-9, gt=0.0)
    tol_outer: float = Field(1e-8, gt=0.0)
    max_iter_inner: int = Field(50, ge=1)
    max_iter_middle: int = Field(50, ge=1)
    max_iter_outer: int = Field(50, ge=1)
    relax_inner: float = Field(1.0, gt=0.0, le=1.0)
    relax_middle: float = Field(1.0, gt=0.0, le=1.0)
    relax_outer: float = Field(1.0, gt=0.0, le=1.0)
    quadrature: Literal["trapezoid", "simpson"] = "trapezoid"
    stagnation_window: int = Field(3, ge=1)
    max_wall_time: Optional[float] = Field(None, gt=0.0)


class DiagnosticsConfig(_Section):
    windows: int = Field(5, ge=2)
    decay_ratio: float = Field(0.25, gt=0.0, le=1.0)


class OutputConfig(_Section):
    out_dir: str = "out"


class RunConfig(_Section):
    """実行設定"""

    gas: GasConfig = Field(default_factory=GasConfig)
    profile: ProfileConfig = Field(default_factory=ProfileConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    solver: SolverSection = Field(default_factory=SolverSection)
    diagnostics: DiagnosticsConfig = Field(default_factory=DiagnosticsConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    sweep: List[float] = Field(default_factory=list)
    seed: int = 0
    max_workers: int = Field(1, ge=1)

    @field_validator("sweep")
    @classmethod
    def _non_negative_scales(cls, value: List[float]) -> List[float]:
        if any(s < 0.0 for s in value):
            raise ValueError("sigma scale factors must be non-negative")
        if len(set(value)) != len(value):
            raise ValueError("sigma scale factors must be distinct")
        return value

    @model_validator(mode="after")
    def _entrance_gates(self) -> "RunConfig":
        # support and axis gates raise SupportConditionError directly
        build_profile(self)
        return self

    def to_solver_config(self) -> SolverConfig:
        s = self.solver
        return SolverConfig(
            gas=self.gas.to_parameters(),
            L=self.grid.L, nx=self.grid.nx, nr=self.grid.nr,
            tol_inner=s.tol_inner, tol_middle=s.tol_middle, tol_outer=s.tol_outer,
            max_iter_inner=s.max_iter_inner, max_iter_middle=s.max_iter_middle,
            max_iter_outer=s.max_iter_outer,
            relax_inner=s.relax_inner, relax_middle=s.relax_middle,
            relax_outer=s.relax_outer,
            quadrature=s.quadrature,
            stagnation_window=s.stagnation_window,
            max_wall_time=s.max_wall_time,
            windows=self.diagnostics.windows,
            decay_ratio=self.diagnostics.decay_ratio,
        )


def build_profile(config: RunConfig, scale: Optional[float] = None) -> EntranceProfile:
    """Entrance profile for a config, optionally at another sigma scale."""
    params = dict(config.profile.params)
    if config.profile.family == "random":
        params.setdefault("seed", config.seed)
    background = derive_background(config.gas.to_parameters())
    try:
        return create_profile(
            config.profile.family,
            background,
            epsilon=config.profile.epsilon,
            scale=config.profile.scale if scale is None else float(scale),
            **params,
        )
    except TypeError as e:
        raise ConfigError(f"profile.params: {e}") from e


def _load_mapping(source: ConfigSource) -> Dict[str, Any]:
    if isinstance(source, Mapping):
        return dict(source)
    looks_like_path = (isinstance(source, str) and "\n" not in source
                       and (Path(source).suffix in (".yaml", ".yml")
                            or Path(source).is_file()))
    if isinstance(source, Path) or looks_like_path:
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text(encoding="utf-8")
    else:
        text = str(source)
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"config is not valid YAML: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of sections")
    return data


def _apply_override(data: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        child = node.setdefault(key, {})
        if not isinstance(child, dict):
            raise ConfigError(f"{dotted}: '{key}' is not a section")
        node = child
    node[keys[-1]] = value


def _format_validation_error(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        path = ".".join(str(k) for k in item["loc"]) or "<root>"
        lines.append(f"{path}: {item['msg']}")
    return "; ".join(lines)


def parse_config(source: Optional[ConfigSource] = None,
                 overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    設定を読み込み検証する

    Args:
        source: YAML file path, inline YAML text or a mapping (None for defaults)
        overrides: dotted key paths, e.g. {"grid.nx": 32}

    Raises:
        ConfigError: schema or invariant violation, with the key path
    """
    data = {} if source is None else _load_mapping(source)
    for key, value in (overrides or {}).items():
        if value is not None:
            _apply_override(data, key, value)
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e)) from e
    logger.debug("config parsed: %s", config.model_dump())
    return config
