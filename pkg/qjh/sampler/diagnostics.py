"""Chain diagnostics: effective sample size and split R-hat"""

from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from ..errors import NumericValidationError
from ..utils.logging import get_logger

logger = get_logger(__name__)

MIN_SERIES_LENGTH = 10


class ChainDiagnostics(BaseModel):
    """Per-run summary written next to the samples"""

    n_chains: int
    draws_per_chain: int
    acceptance_rate: float
    divergences: int
    ess: List[float]
    rhat: Optional[List[float]] = None
    final_mass: List[List[float]] = Field(default_factory=list)
    flags: List[str] = Field(default_factory=list)


def autocorrelation(series: np.ndarray) -> np.ndarray:
    """Normalized autocorrelation at every lag, via zero-padded FFT"""
    x = np.asarray(series, dtype=float)
    n = x.size
    centered = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centered, size)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), size)[:n] / n
    return acov / acov[0]


def _is_constant(x: np.ndarray) -> bool:
    return float(np.ptp(x)) <= 1e-14 * max(1.0, float(np.max(np.abs(x))))


def effective_sample_size(series: Sequence[float]) -> float:
    """
    ESS = N / tau with Geyer's initial positive sequence estimate of tau

    Autocorrelations are summed in adjacent pairs until the first
    non-positive pair, and tau is floored at 1 so ESS never exceeds N.
    A constant series returns 1.0 and logs a warning.

    Raises:
        NumericValidationError: for fewer than 10 draws
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if n < MIN_SERIES_LENGTH:
        raise NumericValidationError(f"ESS needs at least {MIN_SERIES_LENGTH} draws, got {n}")
    if _is_constant(x):
        logger.warning("Constant series; ESS reported as 1", extra={"flag": "constant_series", "length": n})
        return 1.0

    rho = autocorrelation(x)
    n_pairs = n // 2
    pairs = rho[: 2 * n_pairs : 2] + rho[1 : 2 * n_pairs : 2]
    positive = pairs > 0.0
    cutoff = int(np.argmin(positive)) if not np.all(positive) else n_pairs
    tau = -1.0 + 2.0 * float(np.sum(pairs[:cutoff]))
    tau = max(tau, 1.0)
    return float(n / tau)


def split_rhat(chains: np.ndarray) -> float:
    """
    Split potential scale reduction for one coordinate

    Args:
        chains: Draws of shape (n_chains, n_draws); each chain is split in half

    Returns:
        R-hat; nan when the within-chain variance is zero
    """
    draws = np.asarray(chains, dtype=float)
    if draws.ndim != 2 or draws.shape[1] < 4:
        raise NumericValidationError("split R-hat needs draws shaped (chains, n >= 4)")
    half = draws.shape[1] // 2
    halves = np.concatenate([draws[:, :half], draws[:, -half:]], axis=0)
    n = halves.shape[1]
    within = float(np.mean(np.var(halves, axis=1, ddof=1)))
    if within == 0.0:
        return float("nan")
    between = n * float(np.var(np.mean(halves, axis=1), ddof=1))
    pooled = (n - 1) / n * within + between / n
    return float(np.sqrt(pooled / within))
