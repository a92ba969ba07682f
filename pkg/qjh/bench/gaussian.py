"""
Ill-conditioned Gaussian benchmark.

Chains sample a zero-mean Gaussian whose covariance has log-spaced
eigenvalues 10^-1 .. 10^kappa in a random orthogonal basis; the pooled
post-warmup draws are scored by KL divergence at geometric checkpoints.
"""

import math
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, PrivateAttr, model_validator
from scipy import linalg as sla
from scipy.stats import ortho_group

from ..errors import DomainError, NumericValidationError
from ..numkernel import NumericModel
from ..sampler import DMPreconditioner, HMCConfig, TargetDensity, run_chains
from ..utils.logging import get_logger

logger = get_logger(__name__)

MAX_CONDITION_EXPONENT = 8.0
CHECKPOINT_RATIO = 2

# Published KL at full scale (10^7 steps, 100 chains) by dimension
PUBLISHED_KL: Dict[int, float] = {
    10: 4e-5,
    50: 7.2e-4,
    150: 0.0146,
    200: 0.0234,
    500: 0.04563,
}


class GaussianTarget(NumericModel):
    """N(mean, covariance) with cached Cholesky factor and precision"""

    mean: np.ndarray
    covariance: np.ndarray

    _chol: np.ndarray = PrivateAttr()
    _precision: np.ndarray = PrivateAttr()

    @model_validator(mode="after")
    def factor(self) -> "GaussianTarget":
        self.mean = np.asarray(self.mean, dtype=float)
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (self.mean.size, self.mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean length {self.mean.size}")
        self.covariance = 0.5 * (cov + cov.T)
        try:
            self._chol = sla.cholesky(self.covariance, lower=True)
        except np.linalg.LinAlgError as e:
            raise DomainError(f"covariance is not positive definite: {e}") from e
        self._precision = sla.cho_solve((self._chol, True), np.eye(self.dim))
        return self

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def precision(self) -> np.ndarray:
        return self._precision

    def log_density(self, x: np.ndarray) -> float:
        r = np.asarray(x, dtype=float) - self.mean
        return -0.5 * float(r @ self._precision @ r)

    def grad_log_density(self, x: np.ndarray) -> np.ndarray:
        return -self._precision @ (np.asarray(x, dtype=float) - self.mean)

    def as_target(self, name: str = "gaussian") -> TargetDensity:
        return TargetDensity(
            dim=self.dim, log_density=self.log_density, grad_log_density=self.grad_log_density, name=name
        )


class KLRow(BaseModel):
    dimension: int
    checkpoint: int
    iteration: int
    kl: float
    flagged: bool = False


class GaussianBenchmarkResult(BaseModel):
    rows: List[KLRow] = Field(default_factory=list)
    final_kl: Dict[int, float] = Field(default_factory=dict)
    acceptance_rate: Dict[int, float] = Field(default_factory=dict)
    reference_kl: Dict[int, Optional[float]] = Field(default_factory=dict)

    def for_dimension(self, dim: int) -> List[KLRow]:
        return [r for r in self.rows if r.dimension == dim]


class PreconditioningComparison(BaseModel):
    threshold: float
    identity_iterations: List[Optional[int]]
    preconditioned_iterations: List[Optional[int]]

    @staticmethod
    def _median(values: List[Optional[int]]) -> float:
        return float(np.median([math.inf if v is None else v for v in values]))

    @property
    def identity_median(self) -> float:
        return self._median(self.identity_iterations)

    @property
    def preconditioned_median(self) -> float:
        return self._median(self.preconditioned_iterations)


def make_illconditioned_gaussian(dim: int, kappa: float, rng: np.random.Generator) -> GaussianTarget:
    """
    Zero-mean Gaussian with covariance eigenvalues logspace(-1, kappa, dim)

    Raises:
        NumericValidationError: if dim < 2
        DomainError: if kappa > 8
    """
    if dim < 2:
        raise NumericValidationError(f"dimension must be >= 2, got {dim}")
    if kappa > MAX_CONDITION_EXPONENT:
        raise DomainError(f"condition exponent {kappa} exceeds {MAX_CONDITION_EXPONENT}")
    if kappa <= -1.0:
        raise NumericValidationError(f"condition exponent must be > -1, got {kappa}")
    eigenvalues = np.logspace(-1.0, kappa, dim)
    basis = ortho_group.rvs(dim, random_state=rng)
    covariance = (basis * eigenvalues) @ basis.T
    return GaussianTarget(mean=np.zeros(dim), covariance=covariance)


def kl_gaussian(mu: np.ndarray, sigma: np.ndarray, mu_hat: np.ndarray, sigma_hat: np.ndarray) -> float:
    """
    1/2 (tr(Sigma^-1 Sigma_hat) + (mu - mu_hat)^T Sigma^-1 (mu - mu_hat) - k + ln(det Sigma / det Sigma_hat))

    Raises:
        DomainError: if either covariance is not symmetric positive definite
    """
    m = np.atleast_1d(np.asarray(mu, dtype=float))
    m_hat = np.atleast_1d(np.asarray(mu_hat, dtype=float))
    s = np.atleast_2d(np.asarray(sigma, dtype=float))
    s_hat = np.atleast_2d(np.asarray(sigma_hat, dtype=float))
    k = m.size
    try:
        chol = sla.cholesky(0.5 * (s + s.T), lower=True)
        chol_hat = sla.cholesky(0.5 * (s_hat + s_hat.T), lower=True)
    except np.linalg.LinAlgError as e:
        raise DomainError(f"covariance is not positive definite: {e}") from e

    trace_term = float(np.trace(sla.cho_solve((chol, True), s_hat)))
    z = sla.solve_triangular(chol, m - m_hat, lower=True)
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    log_det_hat = 2.0 * float(np.sum(np.log(np.diag(chol_hat))))
    kl = 0.5 * (trace_term + float(z @ z) - k + log_det - log_det_hat)
    return max(kl, 0.0)


def checkpoints(n_draws: int, first: int = 100) -> List[int]:
    """first, 2 first, 4 first, ... and always n_draws"""
    points = []
    c = min(first, n_draws)
    while c < n_draws:
        points.append(c)
        c *= CHECKPOINT_RATIO
    points.append(n_draws)
    return points


def kl_trace(
    target: GaussianTarget, draws: np.ndarray, first_checkpoint: int = 100, warmup: int = 0
) -> List[KLRow]:
    """KL of the pooled empirical Gaussian at each checkpoint; draws shaped (chains, n, D)"""
    rows = []
    for c in checkpoints(draws.shape[1], first_checkpoint):
        pooled = draws[:, :c, :].reshape(-1, target.dim)
        mu_hat = pooled.mean(axis=0)
        sigma_hat = np.atleast_2d(np.cov(pooled, rowvar=False))
        try:
            kl = kl_gaussian(target.mean, target.covariance, mu_hat, sigma_hat)
            flagged = False
        except DomainError as e:
            logger.warning(
                "Empirical covariance not SPD at checkpoint",
                extra={"flag": "kl_domain", "checkpoint": c, "error": str(e)},
            )
            kl, flagged = float("nan"), True
        rows.append(KLRow(dimension=target.dim, checkpoint=c, iteration=warmup + c, kl=kl, flagged=flagged))
    return rows


def _sample(
    target: GaussianTarget,
    config: HMCConfig,
    n_chains: int,
    seed: int,
    preconditioned: bool,
    threads: Optional[int],
    preconditioner_options: Optional[dict],
) -> tuple[np.ndarray, float]:
    options = preconditioner_options or {}
    factory = (lambda: DMPreconditioner(dim=target.dim, **options)) if preconditioned else None
    results = run_chains(target.as_target(), config, n_chains, seed, factory, threads)
    draws = np.stack([r.samples for r in results])
    acceptance = float(np.mean([r.acceptance_rate for r in results]))
    return draws, acceptance


def run_gaussian_benchmark(
    dims: Sequence[int],
    kappa: float,
    config: HMCConfig,
    n_chains: int,
    seed: int,
    preconditioned: bool = True,
    first_checkpoint: int = 100,
    threads: Optional[int] = None,
    preconditioner_options: Optional[dict] = None,
) -> GaussianBenchmarkResult:
    """
    KL-versus-iteration table for each requested dimension

    The target for dimension D is drawn from the stream seeded by (seed, D);
    chains use SeedSequence(seed) children.
    """
    result = GaussianBenchmarkResult()
    for dim in dims:
        target = make_illconditioned_gaussian(dim, kappa, np.random.default_rng([seed, dim]))
        draws, acceptance = _sample(target, config, n_chains, seed, preconditioned, threads, preconditioner_options)
        rows = kl_trace(target, draws, first_checkpoint, config.warmup)
        result.rows.extend(rows)
        result.final_kl[dim] = rows[-1].kl
        result.acceptance_rate[dim] = acceptance
        result.reference_kl[dim] = PUBLISHED_KL.get(dim)
        logger.info(
            "Gaussian benchmark dimension finished",
            extra={"dimension": dim, "final_kl": rows[-1].kl, "acceptance_rate": acceptance},
        )
    return result


def iterations_to_threshold(rows: Sequence[KLRow], threshold: float) -> Optional[int]:
    """First checkpoint iteration (warmup included) with KL below threshold"""
    for row in rows:
        if not row.flagged and row.kl < threshold:
            return row.iteration
    return None


def compare_preconditioning(
    target: GaussianTarget,
    config: HMCConfig,
    seeds: Sequence[int],
    n_chains: int = 1,
    threshold: float = 0.02,
    first_checkpoint: int = 50,
    threads: Optional[int] = None,
    preconditioner_options: Optional[dict] = None,
) -> PreconditioningComparison:
    """Identity-mass versus preconditioned HMC on the same seeds"""
    identity, preconditioned = [], []
    for seed in seeds:
        for flag, bucket in ((False, identity), (True, preconditioned)):
            draws, _ = _sample(target, config, n_chains, seed, flag, threads, preconditioner_options)
            bucket.append(iterations_to_threshold(kl_trace(target, draws, first_checkpoint, config.warmup), threshold))
    return PreconditioningComparison(
        threshold=threshold, identity_iterations=identity, preconditioned_iterations=preconditioned
    )
