"""
Run-configuration and result models for the QJH command line
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..config import Settings
from ..errors import ConfigError
from ..sampler.hmc import HMCConfig


class Subcommand(str, Enum):
    """Subcommands of the qjh CLI"""
    SAMPLE = "sample"
    BENCH_GAUSSIAN = "bench-gaussian"
    BENCH_AIRY = "bench-airy"
    RMT_SPACING = "rmt-spacing"
    SSE_VALIDATE = "sse-validate"
    LINDBLAD_EVOLVE = "lindblad-evolve"


class TargetKind(str, Enum):
    """Sampling targets available from the command line"""
    STD_NORMAL = "std-normal"
    GAUSSIAN = "gaussian"
    ILLCONDITIONED = "illconditioned"


class SpacingMethod(str, Enum):
    DIRECT = "direct"
    WALK = "walk"


class SSEScheme(str, Enum):
    """Unravelings checked by sse-validate"""
    STOCHASTIC_MASTER = "sme"
    NONLINEAR = "nonlinear"
    LINEAR = "lsse"
    COLORED = "ou"


class LindbladPreset(str, Enum):
    AMPLITUDE_DAMPING = "amplitude-damping"
    DEPHASING = "dephasing"


class InitialState(str, Enum):
    EXCITED = "excited"
    PLUS = "plus"
    MIXED = "mixed"


class StrictModel(BaseModel):
    """Config section: unknown keys are errors"""

    model_config = ConfigDict(extra="forbid", use_enum_values=True)


class TargetSettings(StrictModel):
    kind: TargetKind = Field(default=TargetKind.STD_NORMAL, description="Target family")
    dim: int = Field(default=2, ge=1, description="Dimension D")
    kappa: float = Field(default=3.0, description="Covariance eigenvalues span 10^-1 .. 10^kappa")
    variances: Optional[List[float]] = Field(default=None, description="Diagonal covariance for kind=gaussian")

    @field_validator("kappa")
    def validate_kappa(cls, v: float) -> float:
        if v > 8.0:
            raise ValueError("condition exponent kappa must be <= 8")
        return v

    @field_validator("variances")
    def validate_variances(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and any(x <= 0 for x in v):
            raise ValueError("variances must be > 0")
        return v

    @model_validator(mode="after")
    def validate_kind_requirements(self):
        if self.kind == TargetKind.ILLCONDITIONED.value and self.dim < 2:
            raise ValueError("illconditioned targets need dim >= 2")
        if self.kind == TargetKind.GAUSSIAN.value and self.variances is not None and len(self.variances) != self.dim:
            raise ValueError(f"variances has {len(self.variances)} entries, dim is {self.dim}")
        return self


class SamplerSettings(StrictModel):
    step_size: float = Field(default=0.25, description="Leapfrog step size epsilon")
    leapfrog_steps: int = Field(default=8, ge=1, description="Leapfrog steps per proposal")
    warmup: int = Field(default=100, ge=0, description="Adaptation iterations")
    iterations: int = Field(default=1100, ge=1, description="Total iterations including warmup")
    chains: int = Field(default=1, ge=1, description="Independent chains")
    divergence_threshold: float = Field(default=1000.0, gt=0, description="|dH| above this is a divergence")

    @field_validator("step_size")
    def validate_step_size(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("step size must be > 0")
        return v

    @model_validator(mode="after")
    def validate_schedule(self):
        if self.warmup >= self.iterations:
            raise ValueError(f"warmup ({self.warmup}) must be smaller than iterations ({self.iterations})")
        return self

    def to_hmc_config(self, seed: Optional[int] = None) -> HMCConfig:
        return HMCConfig(
            step_size=self.step_size,
            n_leapfrog=self.leapfrog_steps,
            warmup=self.warmup,
            iterations=self.iterations,
            seed=seed,
            divergence_threshold=self.divergence_threshold,
        )


class PreconditionerSettings(StrictModel):
    enabled: Optional[bool] = Field(default=None, description="Use the density-matrix preconditioner (default depends on the command)")
    alpha: float = Field(default=0.1, gt=0, le=1, description="Mixing rate toward the target")
    dtau: float = Field(default=0.01, ge=0, description="Unitary walk step")
    adapt_every: int = Field(default=10, ge=1, description="Iterations per adaptation epoch")
    floor: float = Field(default=1e-8, gt=0, description="Relative eigenvalue floor of M")

    def is_enabled(self, default: bool) -> bool:
        return default if self.enabled is None else self.enabled

    def options(self) -> Dict[str, Any]:
        return {"alpha": self.alpha, "dtau": self.dtau, "adapt_every": self.adapt_every, "floor": self.floor}


class GaussianBenchSettings(StrictModel):
    dims: List[int] = Field(default_factory=lambda: [10], description="Benchmark dimensions")
    kappa: float = Field(default=3.0, le=8.0, description="Condition exponent")
    first_checkpoint: int = Field(default=100, ge=1, description="First KL checkpoint (draws per chain)")
    compare_seeds: List[int] = Field(default_factory=list, description="Seeds for identity-vs-preconditioned comparison")
    threshold: float = Field(default=0.02, gt=0, description="KL threshold for iteration counts")

    @field_validator("dims")
    def validate_dims(cls, v: List[int]) -> List[int]:
        if not v or any(d < 2 for d in v):
            raise ValueError("dims must be a non-empty list of integers >= 2")
        return v


class AirySettings(StrictModel):
    slope: float = Field(default=1.0, gt=0, description="Potential slope a")
    modes: int = Field(default=5, ge=1, description="Eigenvalues to report")
    reference_step: float = Field(default=0.01, gt=0, description="Grid step at a = 1")
    infer: bool = Field(default=False, description="Run posterior inference on synthetic data")
    observed_modes: int = Field(default=20, ge=1, description="Eigenvalues observed in the synthetic data")
    true_slope: float = Field(default=1.0, gt=0, description="Slope used to synthesize data")
    noise: float = Field(default=0.01, gt=0, description="Observation noise sigma")


class RMTSettings(StrictModel):
    n: int = Field(default=4, ge=2, description="Matrix dimension N")
    sets: int = Field(default=10000, ge=1000, description="Phase sets in the histogram")
    method: SpacingMethod = Field(default=SpacingMethod.DIRECT, description="Haar sampler or unitary walk")
    dtau: float = Field(default=0.05, gt=0, description="Walk step")
    burn_in: int = Field(default=200, ge=0, description="Unrecorded walk steps")
    record_every: int = Field(default=10, ge=1, description="Walk steps between recorded sets")
    walks: int = Field(default=100, ge=1, description="Independent walks")
    bins: int = Field(default=40, ge=1, description="Histogram bins on [0, 4]")


class SSESettings(StrictModel):
    scheme: SSEScheme = Field(default=SSEScheme.STOCHASTIC_MASTER, description="Unraveling to validate")
    paths: int = Field(default=2000, ge=1, description="Trajectories")
    t_final: float = Field(default=1.0, gt=0)
    dt: float = Field(default=1e-3, gt=0)
    rate: float = Field(default=1.0, gt=0, description="Damping rate")
    gamma: float = Field(default=5.0, gt=0, description="OU rate for scheme=ou")
    store_every: int = Field(default=100, ge=1)


class LindbladSettings(StrictModel):
    model: LindbladPreset = Field(default=LindbladPreset.AMPLITUDE_DAMPING)
    rate: float = Field(default=1.0, gt=0)
    initial: InitialState = Field(default=InitialState.EXCITED)
    t_final: float = Field(default=1.0, ge=0)
    dt: float = Field(default=1e-3, gt=0)
    store_every: int = Field(default=10, ge=1)


class RunConfig(StrictModel):
    """Effective configuration of one CLI run"""

    command: Optional[Subcommand] = Field(default=None, description="Subcommand the file is meant for")
    seed: Optional[int] = Field(default=None, ge=0, description="RNG seed")
    output_dir: Optional[Path] = Field(default=None, description="Output directory")
    threads: Optional[int] = Field(default=None, ge=1, description="Worker pool size")
    svg: bool = Field(default=False, description="Emit quick-look SVG plots")

    target: TargetSettings = Field(default_factory=TargetSettings)
    sampler: SamplerSettings = Field(default_factory=SamplerSettings)
    preconditioner: PreconditionerSettings = Field(default_factory=PreconditionerSettings)
    gaussian: GaussianBenchSettings = Field(default_factory=GaussianBenchSettings)
    airy: AirySettings = Field(default_factory=AirySettings)
    rmt: RMTSettings = Field(default_factory=RMTSettings)
    sse: SSESettings = Field(default_factory=SSESettings)
    lindblad: LindbladSettings = Field(default_factory=LindbladSettings)

    def effective_seed(self, settings: Settings) -> int:
        """File value, then QJH_SEED, then 0 (flags are merged in beforehand)"""
        if self.seed is not None:
            return self.seed
        if settings.seed is not None:
            return settings.seed
        return 0

    def effective_output_dir(self, settings: Settings) -> Path:
        return self.output_dir if self.output_dir is not None else settings.output_dir

    def effective_threads(self, settings: Settings) -> int:
        return self.threads if self.threads is not None else settings.worker_count


def _format_errors(e: ValidationError) -> ConfigError:
    first = e.errors()[0]
    key = ".".join(str(p) for p in first["loc"])
    details = "; ".join(
        f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
    )
    return ConfigError(f"invalid configuration: {details}", key=key or None)


def build_config(data: Dict[str, Any]) -> RunConfig:
    """Validate a raw mapping, converting pydantic errors to ConfigError"""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise _format_errors(e) from e


def load_config(path: Path) -> RunConfig:
    """
    Read and validate a YAML run config

    Raises:
        ConfigError: on a missing file, a parse error (with line number),
            an unknown key or an out-of-range value (with key path)
    """
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}", key="config")
    try:
        data = yaml.safe_load(p.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        problem = getattr(e, "problem", None) or str(e)
        raise ConfigError(f"cannot parse {p}{where}: {problem}", key="config") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{p} must contain a mapping at the top level", key="config")
    return build_config(data)


def apply_overrides(config: RunConfig, overrides: Dict[str, Any]) -> RunConfig:
    """
    Overlay dotted-key values (flags) on a config and re-validate

    None values mean "flag not given" and are skipped.
    """
    data = config.model_dump(mode="json", exclude_none=False)
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = data
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return build_config(data)


class RunSummary(BaseModel):
    """Summary JSON printed to standard output"""

    success: bool = Field(..., description="Whether the run succeeded")
    command: str = Field(..., description="Subcommand")
    seed: Optional[int] = Field(None, description="Effective seed")
    output_dir: Optional[str] = Field(None, description="Directory holding outputs")
    outputs: Dict[str, str] = Field(default_factory=dict, description="Output name to path")
    config: Dict[str, Any] = Field(default_factory=dict, description="Effective configuration")
    results: Dict[str, Any] = Field(default_factory=dict, description="Headline numbers")
    flags: List[str] = Field(default_factory=list, description="Recoverable conditions encountered")
    error: Optional[str] = Field(None, description="Error details")
    duration_seconds: Optional[float] = Field(None, description="Wall-clock duration")

    @classmethod
    def success_result(cls, command: str, **kwargs) -> "RunSummary":
        return cls(success=True, command=command, **kwargs)

    @classmethod
    def error_result(cls, command: str, error: str, **kwargs) -> "RunSummary":
        return cls(success=False, command=command, error=error, **kwargs)
