"""
Bench Airy Command - eigenvalue accuracy and slope inference for the Airy operator
"""

import math
from typing import Any, Dict

import click
import numpy as np

from ..bench.airy import (
    AiryModel,
    AiryProblem,
    airy_eigenvalues,
    airy_exact_eigenvalues,
    eigen_error_report,
    run_airy_inference,
    synthesize_airy_data,
)
from ..models.run_models import RunSummary, Subcommand
from ..sampler import summarize
from ..utils.logging import get_logger, log_operation
from .common import common_options, prepare, sampler_options, sampler_overrides, subcommand

logger = get_logger(__name__)

DATA_STREAM = 1


class BenchAiryCommand:
    """Write airy_eigs.csv and, with --infer, posterior_samples.csv"""

    @staticmethod
    def register(group, state):
        """Register the subcommand with the CLI group"""

        @group.command("bench-airy")
        @common_options
        @sampler_options
        @click.option("--slope", type=float, default=None, help="Potential slope a")
        @click.option("--modes", type=int, default=None, help="Eigenvalues to report")
        @click.option("--reference-step", type=float, default=None, help="Grid step at slope 1")
        @click.option("--infer/--no-infer", default=None, help="Sample the slope posterior from synthetic data")
        @click.option("--observed-modes", type=int, default=None, help="Eigenvalues in the synthetic data")
        @click.option("--true-slope", type=float, default=None, help="Slope used to synthesize data")
        @click.option("--noise", type=float, default=None, help="Observation noise sigma")
        @subcommand(state, Subcommand.BENCH_AIRY)
        @log_operation("bench-airy")
        def bench_airy(**options: Any) -> RunSummary:
            """Finite-difference eigenvalues against the zeros of Ai, plus optional inference"""
            overrides: Dict[str, Any] = {
                f"airy.{key}": options.pop(key, None)
                for key in ("slope", "modes", "reference_step", "infer", "observed_modes", "true_slope", "noise")
            }
            overrides.update(sampler_overrides(options))
            ctx = prepare(Subcommand.BENCH_AIRY, options, overrides)
            cfg = ctx.config
            airy = cfg.airy

            problem = AiryProblem.for_modes(airy.slope, airy.modes, airy.reference_step)
            estimates = airy_eigenvalues(problem, airy.modes)
            report = eigen_error_report(estimates, airy_exact_eigenvalues(airy.slope, airy.modes))
            header, rows = report.to_rows()
            ctx.write_csv("airy_eigs.csv", header, rows)
            ctx.line_plot(
                "airy_eigs.svg",
                [([r.index for r in report.rows], [r.rel_err for r in report.rows])],
                title="Relative eigenvalue error",
                x_label="index",
                y_label="relative error",
                log_y=True,
            )
            summary: Dict[str, Any] = {
                "grid_points": problem.n,
                "domain_length": problem.length,
                "max_rel_err": report.max_rel_err,
                "note": report.note,
            }

            if airy.infer:
                template = AiryProblem.for_modes(1.0, airy.observed_modes, airy.reference_step)
                model = AiryModel(template, airy.observed_modes)
                observed = synthesize_airy_data(airy.true_slope, airy.noise, model, ctx.rng(DATA_STREAM))
                results = run_airy_inference(
                    observed,
                    template,
                    cfg.sampler.to_hmc_config(ctx.seed),
                    ctx.seed,
                    n_chains=cfg.sampler.chains,
                    threads=ctx.threads,
                    preconditioned=cfg.preconditioner.is_enabled(default=True),
                )
                diagnostics = summarize(results)
                for name in diagnostics.flags:
                    ctx.flag(name)
                draws = np.concatenate([r.samples for r in results])
                ctx.write_csv(
                    "posterior_samples.csv",
                    ["log_slope", "log_sigma", "slope", "sigma"],
                    [[a, s, math.exp(a), math.exp(s)] for a, s in draws],
                )
                slopes = np.exp(draws[:, 0])
                summary["inference"] = {
                    "true_slope": airy.true_slope,
                    "posterior_mean_slope": float(slopes.mean()),
                    "posterior_sd_slope": float(slopes.std(ddof=1)) if slopes.size > 1 else 0.0,
                    "posterior_mean_sigma": float(np.exp(draws[:, 1]).mean()),
                    "acceptance_rate": diagnostics.acceptance_rate,
                    "ess": diagnostics.ess,
                }

            return ctx.finish(summary)
