"""
Lindblad Evolve Command - RK4 master-equation trajectory for a qubit preset
"""

import math
from typing import Any, Dict

import click
import numpy as np

from ..density import DensityMatrix, trace_distance
from ..lindblad import amplitude_damping_model, dephasing_model, evolve
from ..models.run_models import InitialState, LindbladPreset, LindbladSettings, RunSummary, Subcommand
from ..utils.logging import get_logger, log_operation
from .common import common_options, prepare, subcommand

logger = get_logger(__name__)


def initial_state(kind: str) -> DensityMatrix:
    """Index 0 is |g>, index 1 is |e>"""
    if kind == InitialState.EXCITED.value:
        return DensityMatrix.from_diagonal([0.0, 1.0])
    if kind == InitialState.PLUS.value:
        return DensityMatrix.pure(np.array([1.0, 1.0]) / math.sqrt(2.0))
    return DensityMatrix.maximally_mixed(2)


def closed_form(settings: LindbladSettings, rho0: np.ndarray, t: float) -> np.ndarray:
    """Exact solution of either preset with H = 0"""
    rho = np.array(rho0, dtype=complex)
    if settings.model == LindbladPreset.AMPLITUDE_DAMPING.value:
        decay = math.exp(-settings.rate * t)
        excited = rho0[1, 1].real * decay
        rho[1, 1] = excited
        rho[0, 0] = 1.0 - excited
        rho[0, 1] = rho0[0, 1] * math.sqrt(decay)
        rho[1, 0] = rho0[1, 0] * math.sqrt(decay)
    else:
        decay = math.exp(-settings.rate * t)
        rho[0, 1] = rho0[0, 1] * decay
        rho[1, 0] = rho0[1, 0] * decay
    return rho


class LindbladEvolveCommand:
    """Write trajectory.csv (time, real/imag of every entry)"""

    @staticmethod
    def register(group, state):
        """Register the subcommand with the CLI group"""

        @group.command("lindblad-evolve")
        @common_options
        @click.option(
            "--model", type=click.Choice([m.value for m in LindbladPreset]), default=None, help="Dissipator preset"
        )
        @click.option("--rate", type=float, default=None, help="Damping or dephasing rate")
        @click.option(
            "--initial", type=click.Choice([s.value for s in InitialState]), default=None, help="Initial state"
        )
        @click.option("--t-final", type=float, default=None, help="End time")
        @click.option("--dt", type=float, default=None, help="Requested RK4 step")
        @click.option("--store-every", type=int, default=None, help="Steps between stored states")
        @subcommand(state, Subcommand.LINDBLAD_EVOLVE)
        @log_operation("lindblad-evolve")
        def lindblad_evolve(**options: Any) -> RunSummary:
            """Integrate the master equation and report the error against the closed form"""
            overrides: Dict[str, Any] = {
                f"lindblad.{key}": options.pop(key, None)
                for key in ("model", "rate", "initial", "t_final", "dt", "store_every")
            }
            ctx = prepare(Subcommand.LINDBLAD_EVOLVE, options, overrides)
            settings = ctx.config.lindblad

            if settings.model == LindbladPreset.AMPLITUDE_DAMPING.value:
                model = amplitude_damping_model(settings.rate)
            else:
                model = dephasing_model(settings.rate)
            rho0 = initial_state(settings.initial)
            traj = evolve(model, rho0, settings.t_final, settings.dt, settings.store_every)

            errors = [
                trace_distance(rho, closed_form(settings, rho0.matrix, float(t)))
                for t, rho in zip(traj.times, traj.states)
            ]
            header, rows = traj.to_rows()
            ctx.write_csv("trajectory.csv", header, rows)
            ctx.line_plot(
                "trajectory.svg",
                [(traj.times, np.real(traj.states[:, 1, 1])), (traj.times, np.abs(traj.states[:, 0, 1]))],
                title=f"{settings.model}: rho_11 and |rho_01|",
                x_label="t",
                y_label="value",
            )
            final = traj.final.matrix
            return ctx.finish(
                {
                    "steps_stored": int(traj.times.size),
                    "final_excited_population": float(final[1, 1].real),
                    "final_coherence": abs(complex(final[0, 1])),
                    "max_error_vs_closed_form": float(max(errors)),
                }
            )
