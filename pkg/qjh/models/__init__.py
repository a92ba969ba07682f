"""
QJH Models - run configuration and summaries for the command line.
"""

from .run_models import (
    AirySettings,
    GaussianBenchSettings,
    InitialState,
    LindbladPreset,
    LindbladSettings,
    PreconditionerSettings,
    RMTSettings,
    RunConfig,
    RunSummary,
    SamplerSettings,
    SpacingMethod,
    SSEScheme,
    SSESettings,
    Subcommand,
    TargetKind,
    TargetSettings,
    apply_overrides,
    build_config,
    load_config,
)

__all__ = [
    "AirySettings",
    "GaussianBenchSettings",
    "InitialState",
    "LindbladPreset",
    "LindbladSettings",
    "PreconditionerSettings",
    "RMTSettings",
    "RunConfig",
    "RunSummary",
    "SamplerSettings",
    "SpacingMethod",
    "SSEScheme",
    "SSESettings",
    "Subcommand",
    "TargetKind",
    "TargetSettings",
    "apply_overrides",
    "build_config",
    "load_config",
]
