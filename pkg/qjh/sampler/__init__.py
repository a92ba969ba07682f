"""HMC engine, density-matrix preconditioner and chain diagnostics"""

from .chains import ChainResult, run_chain, run_chains, summarize
from .diagnostics import ChainDiagnostics, autocorrelation, effective_sample_size, split_rhat
from .hmc import (
    ChainState,
    HMCConfig,
    LeapfrogResult,
    MassMatrix,
    TargetDensity,
    acceptance_probability,
    hamiltonian,
    hmc_step,
    leapfrog,
)
from .preconditioner import DMPreconditioner, adapt_density, dm_update, mass_from_rho

__all__ = [
    "ChainDiagnostics",
    "ChainResult",
    "ChainState",
    "DMPreconditioner",
    "HMCConfig",
    "LeapfrogResult",
    "MassMatrix",
    "TargetDensity",
    "acceptance_probability",
    "adapt_density",
    "autocorrelation",
    "dm_update",
    "effective_sample_size",
    "hamiltonian",
    "hmc_step",
    "leapfrog",
    "mass_from_rho",
    "run_chain",
    "run_chains",
    "split_rhat",
    "summarize",
]
