"""
SSE Validate Command - ensemble means of stochastic unravelings against
their deterministic master equations
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List

import click
import numpy as np

from ..density import DensityMatrix, DensityTrajectory, project_to_density, trace_distance
from ..errors import NumericValidationError
from ..lindblad import amplitude_damping_model, evolve
from ..models.run_models import RunSummary, SSEScheme, SSESettings, Subcommand
from ..sse import (
    SSEModel,
    ensemble_density,
    integrate_lsse,
    integrate_nonlinear_sse,
    integrate_ou_sse,
    integrate_stochastic_master,
    mean_state,
    nonmarkovian_evolve,
    sample_ou_path,
    sample_wiener_path,
    time_grid,
)
from ..utils.logging import get_logger, log_operation
from .common import common_options, prepare, subcommand

logger = get_logger(__name__)

PATHS_PER_CHUNK = 250
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)

ChunkRunner = Callable[[np.random.Generator, int], np.ndarray]


def _chunk_sizes(paths: int) -> List[int]:
    full, rest = divmod(paths, PATHS_PER_CHUNK)
    return [PATHS_PER_CHUNK] * full + ([rest] if rest else [])


def _pooled_mean(run: ChunkRunner, paths: int, seed: int, threads: int) -> np.ndarray:
    """
    Sum of per-chunk density sums divided by the path count

    Chunk k always uses the k-th child of SeedSequence(seed), so the result
    does not depend on the pool size.
    """
    sizes = _chunk_sizes(paths)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(len(sizes))]

    def one(k: int) -> np.ndarray:
        return run(streams[k], sizes[k]) * sizes[k]

    if threads == 1 or len(sizes) == 1:
        parts = [one(k) for k in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    return np.sum(parts, axis=0) / paths


def _raw_mean(states: np.ndarray) -> np.ndarray:
    """Unnormalized mean of |psi><psi| over paths; the pooled mean is normalized once"""
    return np.einsum("pta,ptb->tab", states, states.conj()) / states.shape[0]


def _normalized(mean: np.ndarray) -> np.ndarray:
    trace = np.real(np.trace(mean, axis1=-2, axis2=-1))
    return np.stack([project_to_density(m / t).matrix for m, t in zip(mean, trace)])


def _markovian_runner(settings: SSESettings, scheme: str) -> ChunkRunner:
    lower = math.sqrt(settings.rate) * np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    model = SSEModel.time_independent(np.zeros((2, 2)), [lower])
    excited = np.array([0.0, 1.0], dtype=complex)
    grid = time_grid(settings.t_final, settings.dt)

    def run(rng: np.random.Generator, n_paths: int) -> np.ndarray:
        path = sample_wiener_path(grid, model.n_channels, rng, n_paths=n_paths)
        if scheme == SSEScheme.STOCHASTIC_MASTER.value:
            traj = integrate_stochastic_master(model, DensityMatrix.pure(excited), path, settings.store_every)
            return mean_state(traj).states
        if scheme == SSEScheme.NONLINEAR.value:
            traj = integrate_nonlinear_sse(model, excited, path, settings.store_every)
            return ensemble_density(traj).states
        return _raw_mean(integrate_lsse(model, excited, path, settings.store_every).states)

    return run


def _colored_runner(settings: SSESettings) -> ChunkRunner:
    l_op = math.sqrt(settings.rate / 2.0) * SIGMA_Z
    plus = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    grid = time_grid(settings.t_final, settings.dt)

    def run(rng: np.random.Generator, n_paths: int) -> np.ndarray:
        ou = sample_ou_path(settings.gamma, grid, rng, n_paths=n_paths)
        traj = integrate_ou_sse(np.zeros((2, 2)), l_op, settings.gamma, plus, ou, store_every=settings.store_every)
        return _raw_mean(traj.states)

    return run


def reference_trajectory(settings: SSESettings) -> DensityTrajectory:
    """Deterministic counterpart of the unraveling being validated"""
    if settings.scheme == SSEScheme.COLORED.value:
        plus = DensityMatrix.pure(np.array([1.0, 1.0]) / math.sqrt(2.0))
        l_op = math.sqrt(settings.rate / 2.0) * SIGMA_Z
        return nonmarkovian_evolve(
            np.zeros((2, 2)), l_op, settings.gamma, plus, settings.t_final, settings.dt, settings.store_every
        )
    excited = DensityMatrix.from_diagonal([0.0, 1.0])
    return evolve(amplitude_damping_model(settings.rate), excited, settings.t_final, settings.dt, settings.store_every)


class SSEValidateCommand:
    """Write sse_mean.csv: ensemble mean, reference and their trace distance per stored time"""

    @staticmethod
    def register(group, state):
        """Register the subcommand with the CLI group"""

        @group.command("sse-validate")
        @common_options
        @click.option(
            "--scheme", type=click.Choice([s.value for s in SSEScheme]), default=None, help="Unraveling to validate"
        )
        @click.option("--paths", type=int, default=None, help="Trajectories")
        @click.option("--t-final", type=float, default=None, help="End time")
        @click.option("--dt", type=float, default=None, help="Time step")
        @click.option("--rate", type=float, default=None, help="Damping or dephasing rate")
        @click.option("--gamma", type=float, default=None, help="OU rate for the colored-noise scheme")
        @click.option("--store-every", type=int, default=None, help="Steps between stored states")
        @subcommand(state, Subcommand.SSE_VALIDATE)
        @log_operation("sse-validate")
        def sse_validate(**options: Any) -> RunSummary:
            """
            Average many trajectories and compare with the master equation

            Markovian schemes unravel amplitude damping from the excited
            state; the colored-noise scheme unravels OU dephasing from |+>
            and is compared with the approximate memory master equation, so
            its distance measures that approximation as well as sampling error.
            """
            overrides: Dict[str, Any] = {
                f"sse.{key}": options.pop(key, None)
                for key in ("scheme", "paths", "t_final", "dt", "rate", "gamma", "store_every")
            }
            ctx = prepare(Subcommand.SSE_VALIDATE, options, overrides)
            settings = ctx.config.sse

            if settings.scheme == SSEScheme.COLORED.value:
                runner = _colored_runner(settings)
            else:
                runner = _markovian_runner(settings, settings.scheme)
            mean = _normalized(_pooled_mean(runner, settings.paths, ctx.seed, ctx.threads))
            reference = reference_trajectory(settings)
            if reference.flagged_steps:
                ctx.flag("positivity_loss")
            if mean.shape[0] != reference.times.shape[0]:
                raise NumericValidationError("ensemble and reference grids differ")

            ensemble = DensityTrajectory(times=reference.times, states=mean)
            distances = [trace_distance(a, b) for a, b in zip(ensemble.states, reference.states)]
            header, rows = ensemble.to_rows()
            _, ref_rows = reference.to_rows()
            ref_header = [f"ref_{name}" for name in header[1:]]
            ctx.write_csv(
                "sse_mean.csv",
                header + ref_header + ["trace_distance"],
                [row + ref[1:] + [dist] for row, ref, dist in zip(rows, ref_rows, distances)],
            )
            colored = settings.scheme == SSEScheme.COLORED.value
            label = "|rho_01|" if colored else "rho_11"
            pick = (lambda s: np.abs(s[:, 0, 1])) if colored else (lambda s: np.real(s[:, 1, 1]))
            ctx.line_plot(
                "sse_mean.svg",
                [(ensemble.times, pick(ensemble.states)), (reference.times, pick(reference.states))],
                title=f"{settings.scheme}: {label}",
                x_label="t",
                y_label=label,
            )
            return ctx.finish(
                {
                    "scheme": settings.scheme,
                    "paths": settings.paths,
                    "max_trace_distance": float(max(distances)),
                    "final_trace_distance": float(distances[-1]),
                    "final_coherence": abs(complex(ensemble.states[-1, 0, 1])),
                    "reference_final_coherence": abs(complex(reference.states[-1, 0, 1])),
                }
            )
