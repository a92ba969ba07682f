"""
RMT Spacing Command - eigenphase spacing histogram of CUE(N)
"""

import math
from typing import Any, Dict

import click

from ..models.run_models import RunSummary, SpacingMethod, Subcommand
from ..rmt import (
    eigenphases,
    histogram_distance,
    histogram_sup_distance,
    reference_spacing_density,
    run_cue_walk,
    sample_cue_direct,
    spacing_statistics,
)
from ..utils.logging import get_logger, log_operation
from .common import common_options, prepare, subcommand

logger = get_logger(__name__)


class RMTSpacingCommand:
    """Write spacing_hist.csv (bin_center, density, reference)"""

    @staticmethod
    def register(group, state):
        """Register the subcommand with the CLI group"""

        @group.command("rmt-spacing")
        @common_options
        @click.option("--n", "n", type=int, default=None, help="Matrix dimension N")
        @click.option("--sets", type=int, default=None, help="Phase sets in the histogram")
        @click.option(
            "--method", type=click.Choice([m.value for m in SpacingMethod]), default=None, help="Haar sampler or walk"
        )
        @click.option("--dtau", type=float, default=None, help="Walk step")
        @click.option("--burn-in", type=int, default=None, help="Unrecorded walk steps")
        @click.option("--record-every", type=int, default=None, help="Walk steps between records")
        @click.option("--walks", type=int, default=None, help="Independent walks")
        @click.option("--bins", type=int, default=None, help="Histogram bins on [0, 4]")
        @subcommand(state, Subcommand.RMT_SPACING)
        @log_operation("rmt-spacing")
        def rmt_spacing(**options: Any) -> RunSummary:
            """Unfolded nearest-neighbour spacings against the exact CUE(2) law or the unitary Wigner surmise"""
            overrides: Dict[str, Any] = {
                f"rmt.{key}": options.pop(key, None)
                for key in ("n", "sets", "method", "dtau", "burn_in", "record_every", "walks", "bins")
            }
            ctx = prepare(Subcommand.RMT_SPACING, options, overrides)
            rmt = ctx.config.rmt
            rng = ctx.rng()

            if rmt.method == SpacingMethod.WALK.value:
                records = math.ceil(rmt.sets / rmt.walks)
                walk = run_cue_walk(
                    rmt.n,
                    rmt.dtau,
                    (records - 1) * rmt.record_every,
                    rng,
                    n_walks=rmt.walks,
                    record_every=rmt.record_every,
                    burn_in=rmt.burn_in,
                )
                phases = walk.phases
            else:
                phases = eigenphases(sample_cue_direct(rmt.n, rng, size=rmt.sets))

            hist = spacing_statistics(phases, bins=rmt.bins)
            name, reference = reference_spacing_density(rmt.n, hist.centers)
            header, rows = hist.to_rows()
            ctx.write_csv(
                "spacing_hist.csv", header + ["reference"], [row + [float(r)] for row, r in zip(rows, reference)]
            )
            ctx.histogram_plot(
                "spacing_hist.svg",
                hist.edges,
                hist.density,
                title=f"CUE({rmt.n}) spacings",
                x_label="s",
                reference=(hist.centers, reference),
            )
            return ctx.finish(
                {
                    "n_sets": hist.n_sets,
                    "mean_spacing": hist.mean_spacing,
                    "reference": name,
                    "l1_distance_to_reference": histogram_distance(hist, reference),
                    "sup_distance_to_reference": histogram_sup_distance(hist, reference),
                }
            )
