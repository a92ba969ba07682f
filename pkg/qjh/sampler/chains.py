"""
Single-chain driver with warmup adaptation, and the multi-chain worker pool.

Chains run on threads: targets are arbitrary callables and often close over
local state, which rules out process pools. Each chain owns a stream
spawned from one SeedSequence, so results do not depend on scheduling.
"""

import contextvars
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional

import numpy as np

from ..errors import SamplerError
from ..numkernel import NumericModel
from ..utils.logging import LogContext, get_logger
from .diagnostics import ChainDiagnostics, effective_sample_size, split_rhat
from .hmc import ChainState, HMCConfig, MassMatrix, TargetDensity, hmc_step
from .preconditioner import DMPreconditioner, dm_update, mass_from_rho

logger = get_logger(__name__)

PreconditionerFactory = Callable[[], DMPreconditioner]


class ChainResult(NumericModel):
    """Post-warmup draws of one chain"""

    samples: np.ndarray
    acceptance_rate: float
    divergences: int
    warmup_divergences: int
    mass_matrix: np.ndarray
    chain: int = 0


def run_chain(
    target: TargetDensity,
    config: HMCConfig,
    rng: np.random.Generator,
    preconditioner: Optional[DMPreconditioner] = None,
    initial: Optional[np.ndarray] = None,
    chain: int = 0,
    on_draw: Optional[Callable[[int, np.ndarray], None]] = None,
) -> ChainResult:
    """
    Run warmup then sampling for one chain

    During warmup every position feeds ``dm_update`` and the mass matrix
    follows rho; the preconditioner is frozen when warmup ends, or before
    the first draw when there is no warmup. Log records emitted while the
    chain runs carry its index as ``chain``.

    Args:
        target: Target density
        config: HMC settings (iterations include warmup)
        rng: Chain's private stream
        preconditioner: Optional density-matrix preconditioner
        initial: Starting position (default: origin)
        chain: Index used in log records
        on_draw: Called as on_draw(iteration, position) after every iteration

    Raises:
        SamplerError: if every warmup iteration diverged
    """
    with LogContext(logger, chain=chain):
        return _sample(target, config, rng, preconditioner, initial, chain, on_draw)


def _sample(
    target: TargetDensity,
    config: HMCConfig,
    rng: np.random.Generator,
    preconditioner: Optional[DMPreconditioner],
    initial: Optional[np.ndarray],
    chain: int,
    on_draw: Optional[Callable[[int, np.ndarray], None]],
) -> ChainResult:
    position = np.zeros(target.dim) if initial is None else np.asarray(initial, dtype=float)
    state = ChainState.start(target, position)

    mass = config.initial_mass(target.dim)
    if preconditioner is not None:
        if preconditioner.dim != target.dim:
            raise SamplerError(f"preconditioner dimension {preconditioner.dim} != target dimension {target.dim}")
        if preconditioner.anneal_epochs is None and config.warmup:
            preconditioner.anneal_epochs = max(1, config.warmup // preconditioner.adapt_every)
        if config.warmup == 0:
            preconditioner.freeze()
        mass = MassMatrix(matrix=mass_from_rho(preconditioner))

    samples = np.empty((config.iterations - config.warmup, target.dim))
    warmup_divergences = 0
    accepted_at_warmup = 0
    for i in range(config.iterations):
        previous_divergences = state.divergences
        state = hmc_step(state, target, config, rng, mass)
        if on_draw is not None:
            on_draw(i, state.position)

        if i < config.warmup:
            warmup_divergences += state.divergences - previous_divergences
            if preconditioner is not None:
                epochs = preconditioner.epochs
                dm_update(preconditioner, state.position, rng)
                if preconditioner.epochs != epochs:
                    mass = MassMatrix(matrix=mass_from_rho(preconditioner))
            if i == config.warmup - 1:
                if warmup_divergences == config.warmup:
                    raise SamplerError(
                        f"all {config.warmup} warmup iterations diverged; reduce step_size "
                        f"(currently {config.step_size}) or check the target",
                        data={"chain": chain, "last_reason": state.last_reason},
                    )
                if preconditioner is not None:
                    preconditioner.freeze()
                    mass = MassMatrix(matrix=mass_from_rho(preconditioner))
                accepted_at_warmup = state.accepted
                logger.debug("Warmup finished", extra={"warmup_divergences": warmup_divergences})
        else:
            samples[i - config.warmup] = state.position

    n_draws = config.iterations - config.warmup
    result = ChainResult(
        samples=samples,
        acceptance_rate=(state.accepted - accepted_at_warmup) / n_draws,
        divergences=state.divergences - warmup_divergences,
        warmup_divergences=warmup_divergences,
        mass_matrix=mass.matrix,
        chain=chain,
    )
    logger.info(
        "Chain finished",
        extra={"acceptance_rate": result.acceptance_rate, "divergences": result.divergences},
    )
    return result


def run_chains(
    target: TargetDensity,
    config: HMCConfig,
    n_chains: int,
    seed: int,
    preconditioner_factory: Optional[PreconditionerFactory] = None,
    threads: Optional[int] = None,
    initial: Optional[np.ndarray] = None,
) -> List[ChainResult]:
    """
    Run independent chains on a thread pool; results come back in chain order

    Chain k uses the k-th child of SeedSequence(seed). Workers run in a copy
    of the caller's context so its log fields reach chain records.
    """
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_chains)]

    def one(k: int) -> ChainResult:
        pre = preconditioner_factory() if preconditioner_factory is not None else None
        return run_chain(target, config, streams[k], pre, initial, chain=k)

    if n_chains == 1 or threads == 1:
        return [one(k) for k in range(n_chains)]
    contexts = [contextvars.copy_context() for _ in range(n_chains)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda k: contexts[k].run(one, k), range(n_chains)))


def summarize(results: List[ChainResult]) -> ChainDiagnostics:
    """Merge per-chain results into one diagnostics record"""
    draws = np.stack([r.samples for r in results])
    n_chains, n_draws, dim = draws.shape
    flags: List[str] = []

    ess = []
    for k in range(dim):
        coordinate = draws[:, :, k]
        if np.ptp(coordinate) == 0.0:
            flags.append(f"constant_series:{k}")
        ess.append(float(sum(effective_sample_size(c) for c in coordinate)))

    rhat = None
    if n_chains > 1 and n_draws >= 4:
        rhat = [split_rhat(draws[:, :, k]) for k in range(dim)]

    total = sum(r.acceptance_rate * r.samples.shape[0] for r in results)
    divergences = sum(r.divergences for r in results)
    if divergences:
        flags.append("divergences")
    return ChainDiagnostics(
        n_chains=n_chains,
        draws_per_chain=n_draws,
        acceptance_rate=total / (n_chains * n_draws),
        divergences=divergences,
        ess=ess,
        rhat=rhat,
        final_mass=results[0].mass_matrix.tolist(),
        flags=flags,
    )
