"""
Plumbing shared by every subcommand: common flags, the effective config,
output files and the manifest.
"""

import functools
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import click
import numpy as np

from ..config import get_settings
from ..errors import ConfigError
from ..models.run_models import RunConfig, RunSummary, Subcommand, apply_overrides, load_config
from ..utils import io, svg
from ..utils.logging import get_logger

logger = get_logger(__name__)

COMMON_KEYS = ("config_path", "seed", "output_dir", "threads", "svg")


def common_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """--config, --seed, --output-dir, --threads and --svg"""
    decorators = [
        click.option(
            "--config",
            "config_path",
            type=click.Path(exists=False, dir_okay=False, path_type=Path),
            default=None,
            help="YAML run config; flags override its values",
        ),
        click.option("--seed", type=int, default=None, help="RNG seed (fallback: QJH_SEED, then 0)"),
        click.option(
            "--output-dir",
            type=click.Path(file_okay=False, path_type=Path),
            default=None,
            help="Directory for CSV/JSON/SVG outputs",
        ),
        click.option("--threads", type=int, default=None, help="Worker pool size (default: logical cores)"),
        click.option("--svg/--no-svg", default=None, help="Also write quick-look SVG plots"),
    ]
    for decorator in reversed(decorators):
        func = decorator(func)
    return func


def sampler_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """HMC and preconditioner flags shared by sample and the benchmarks"""
    decorators = [
        click.option("--step-size", type=float, default=None, help="Leapfrog step size"),
        click.option("--leapfrog", type=int, default=None, help="Leapfrog steps per proposal"),
        click.option("--warmup", type=int, default=None, help="Warmup iterations"),
        click.option("--iters", type=int, default=None, help="Total iterations, warmup included"),
        click.option("--chains", type=int, default=None, help="Independent chains"),
        click.option("--precondition/--no-precondition", default=None, help="Density-matrix preconditioner"),
        click.option("--alpha", type=float, default=None, help="Preconditioner mixing rate"),
        click.option("--dtau", type=float, default=None, help="Preconditioner walk step"),
        click.option("--adapt-every", type=int, default=None, help="Iterations per adaptation epoch"),
    ]
    for decorator in reversed(decorators):
        func = decorator(func)
    return func


def sampler_overrides(options: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "sampler.step_size": options.pop("step_size", None),
        "sampler.leapfrog_steps": options.pop("leapfrog", None),
        "sampler.warmup": options.pop("warmup", None),
        "sampler.iterations": options.pop("iters", None),
        "sampler.chains": options.pop("chains", None),
        "preconditioner.enabled": options.pop("precondition", None),
        "preconditioner.alpha": options.pop("alpha", None),
        "preconditioner.dtau": options.pop("dtau", None),
        "preconditioner.adapt_every": options.pop("adapt_every", None),
    }


class RunContext:
    """Effective settings and collected outputs of one subcommand run"""

    def __init__(self, command: Subcommand, config: RunConfig):
        self.command = command
        self.config = config
        self.seed: int = config.seed if config.seed is not None else 0
        self.output_dir = Path(config.output_dir) if config.output_dir is not None else Path(".")
        self.threads: int = config.threads or 1
        self.outputs: List[Path] = []
        self.flags: List[str] = []

    def rng(self, *stream: int) -> np.random.Generator:
        """Generator for (seed, *stream); distinct streams never overlap chain streams"""
        return np.random.default_rng([self.seed, *stream]) if stream else np.random.default_rng(self.seed)

    def path(self, name: str) -> Path:
        return self.output_dir / name

    def write_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        target = io.write_csv(self.path(name), header, rows)
        self.outputs.append(target)
        logger.debug("Wrote CSV", extra={"path": str(target), "rows": len(rows)})
        return target

    def write_json(self, name: str, payload: Any) -> Path:
        target = io.write_json(self.path(name), payload)
        self.outputs.append(target)
        return target

    def line_plot(self, name: str, series, **kwargs: Any) -> Optional[Path]:
        if not self.config.svg:
            return None
        target = svg.line_plot(self.path(name), series, **kwargs)
        self.outputs.append(target)
        return target

    def histogram_plot(self, name: str, edges, density, **kwargs: Any) -> Optional[Path]:
        if not self.config.svg:
            return None
        target = svg.histogram_plot(self.path(name), edges, density, **kwargs)
        self.outputs.append(target)
        return target

    def flag(self, name: str) -> None:
        if name not in self.flags:
            self.flags.append(name)

    def finish(self, results: Dict[str, Any]) -> RunSummary:
        """Write the manifest and build the success summary"""
        effective = self.config.model_dump(mode="json")
        manifest = io.write_manifest(self.output_dir, self.command.value, effective, self.seed, self.outputs)
        outputs = {p.name: str(p) for p in self.outputs}
        outputs[manifest.name] = str(manifest)
        return RunSummary.success_result(
            command=self.command.value,
            seed=self.seed,
            output_dir=str(self.output_dir),
            outputs=outputs,
            config=effective,
            results=results,
            flags=list(self.flags),
        )


def prepare(command: Subcommand, options: Dict[str, Any], overrides: Dict[str, Any]) -> RunContext:
    """
    Build the effective config: flags over file values over QJH_* settings

    Args:
        command: Subcommand being run
        options: Raw click parameters; the common flags are consumed here
        overrides: Dotted config keys set by command-specific flags

    Raises:
        ConfigError: for unreadable, malformed or mismatched configs
    """
    config_path = options.pop("config_path", None)
    config = load_config(config_path) if config_path is not None else RunConfig()
    if config.command is not None and config.command != command.value:
        raise ConfigError(
            f"config is for '{config.command}', not '{command.value}'",
            key="command",
        )

    common = {
        "seed": options.pop("seed", None),
        "output_dir": options.pop("output_dir", None),
        "threads": options.pop("threads", None),
        "svg": options.pop("svg", None),
    }
    if common["output_dir"] is not None:
        common["output_dir"] = str(common["output_dir"])
    config = apply_overrides(config, {**common, **overrides})

    settings = get_settings()
    effective = config.model_copy(
        update={
            "command": command.value,
            "seed": config.effective_seed(settings),
            "output_dir": config.effective_output_dir(settings),
            "threads": config.effective_threads(settings),
        }
    )
    ctx = RunContext(command, effective)
    ctx.output_dir.mkdir(parents=True, exist_ok=True)
    logger.info(
        "Run configured",
        extra={"command": command.value, "seed": ctx.seed, "output_dir": str(ctx.output_dir), "threads": ctx.threads},
    )
    return ctx


def subcommand(state: Any, command: Subcommand) -> Callable[[Callable[..., Dict[str, Any]]], Callable[..., None]]:
    """
    Wrap a command body: count the operation, emit the summary

    The body receives (ctx-building options) and returns the summary; errors
    propagate to ``cli.run`` which maps them to exit codes.
    """

    def decorator(body: Callable[..., RunSummary]) -> Callable[..., None]:
        @functools.wraps(body)
        def wrapper(**options: Any) -> None:
            state.increment_operations()
            summary = body(**options)
            state.emit(summary)

        return wrapper

    return decorator
