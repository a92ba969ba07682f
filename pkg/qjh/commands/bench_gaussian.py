"""
Bench Gaussian Command - KL divergence versus iteration on ill-conditioned Gaussians
"""

from typing import Any, Dict

import click
import numpy as np

from ..bench.gaussian import compare_preconditioning, make_illconditioned_gaussian, run_gaussian_benchmark
from ..models.run_models import RunSummary, Subcommand
from ..utils.logging import get_logger, log_operation
from .common import common_options, prepare, sampler_options, sampler_overrides, subcommand

logger = get_logger(__name__)


class BenchGaussianCommand:
    """Write kl_trace.csv and, when seeds are given, comparison.csv"""

    @staticmethod
    def register(group, state):
        """Register the subcommand with the CLI group"""

        @group.command("bench-gaussian")
        @common_options
        @sampler_options
        @click.option("--dim", "dims", type=int, multiple=True, help="Benchmark dimension (repeatable)")
        @click.option("--kappa", type=float, default=None, help="Condition exponent")
        @click.option("--first-checkpoint", type=int, default=None, help="First KL checkpoint in draws")
        @click.option("--compare-seed", "compare_seeds", type=int, multiple=True, help="Seed for the paired comparison")
        @click.option("--threshold", type=float, default=None, help="KL threshold for the comparison")
        @subcommand(state, Subcommand.BENCH_GAUSSIAN)
        @log_operation("bench-gaussian")
        def bench_gaussian(**options: Any) -> RunSummary:
            """KL(N(mu, Sigma) || empirical) at geometric checkpoints for each dimension"""
            dims = options.pop("dims", ())
            seeds = options.pop("compare_seeds", ())
            overrides: Dict[str, Any] = {
                "gaussian.dims": list(dims) if dims else None,
                "gaussian.kappa": options.pop("kappa", None),
                "gaussian.first_checkpoint": options.pop("first_checkpoint", None),
                "gaussian.compare_seeds": list(seeds) if seeds else None,
                "gaussian.threshold": options.pop("threshold", None),
                **sampler_overrides(options),
            }
            ctx = prepare(Subcommand.BENCH_GAUSSIAN, options, overrides)
            cfg = ctx.config
            bench = cfg.gaussian
            hmc = cfg.sampler.to_hmc_config(ctx.seed)
            preconditioned = cfg.preconditioner.is_enabled(default=True)
            pre_options = cfg.preconditioner.options()

            result = run_gaussian_benchmark(
                bench.dims,
                bench.kappa,
                hmc,
                cfg.sampler.chains,
                ctx.seed,
                preconditioned=preconditioned,
                first_checkpoint=bench.first_checkpoint,
                threads=ctx.threads,
                preconditioner_options=pre_options,
            )
            if any(row.flagged for row in result.rows):
                ctx.flag("kl_domain")
            ctx.write_csv(
                "kl_trace.csv",
                ["dimension", "checkpoint", "iteration", "kl"],
                [[r.dimension, r.checkpoint, r.iteration, r.kl] for r in result.rows],
            )
            ctx.line_plot(
                "kl_trace.svg",
                [
                    ([r.iteration for r in result.for_dimension(d)], [r.kl for r in result.for_dimension(d)])
                    for d in bench.dims
                ],
                title="KL versus iteration",
                x_label="iteration",
                y_label="KL",
                log_y=True,
            )

            summary: Dict[str, Any] = {
                "preconditioned": preconditioned,
                "final_kl": {str(d): v for d, v in result.final_kl.items()},
                "acceptance_rate": {str(d): v for d, v in result.acceptance_rate.items()},
                "reference_kl": {str(d): v for d, v in result.reference_kl.items()},
            }

            if bench.compare_seeds:
                dim = bench.dims[0]
                target = make_illconditioned_gaussian(dim, bench.kappa, np.random.default_rng([ctx.seed, dim]))
                comparison = compare_preconditioning(
                    target,
                    hmc,
                    bench.compare_seeds,
                    n_chains=cfg.sampler.chains,
                    threshold=bench.threshold,
                    first_checkpoint=bench.first_checkpoint,
                    threads=ctx.threads,
                    preconditioner_options=pre_options,
                )
                ctx.write_csv(
                    "comparison.csv",
                    ["seed", "identity_iterations", "preconditioned_iterations"],
                    [
                        [s, "" if a is None else a, "" if b is None else b]
                        for s, a, b in zip(
                            bench.compare_seeds,
                            comparison.identity_iterations,
                            comparison.preconditioned_iterations,
                        )
                    ],
                )
                summary["comparison"] = {
                    "dimension": dim,
                    "threshold": comparison.threshold,
                    "identity_median": comparison.identity_median,
                    "preconditioned_median": comparison.preconditioned_median,
                }

            return ctx.finish(summary)
