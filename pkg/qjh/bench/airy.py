"""
Airy-operator eigenvalue benchmark and Bayesian slope inference.

The operator -d^2/dx^2 + a x on [0, L] with Dirichlet ends is discretized
by second-order central differences (h = L / (n + 1)) and the smallest
eigenvalues are Richardson-extrapolated from grids h and h/2. The exact
half-line eigenvalues are a^(2/3) |z_i| with z_i the zeros of Ai.

Inference runs on theta = (log a, log sigma). Substituting x = a^(-1/3) y
shows lambda_i(a) = a^(2/3) lambda_i(1), so the posterior evaluates the
model by rescaling one solved template.
"""

import math
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.linalg import eigh_tridiagonal
from scipy.special import ai_zeros

from ..density import classical_fim
from ..errors import DomainError, NumericValidationError
from ..numkernel import NumericModel
from ..sampler import ChainResult, DMPreconditioner, HMCConfig, TargetDensity, run_chains
from ..utils.logging import get_logger

logger = get_logger(__name__)

MIN_GRID = 100
DECAY_MARGIN = 10.0
REFERENCE_STEP = 0.01
GRADIENT_STEP = 1e-5


class AiryProblem(BaseModel):
    """Slope a, domain [0, L] and n interior grid points"""

    slope: float = Field(..., gt=0)
    length: float = Field(..., gt=0)
    n: int = Field(..., ge=MIN_GRID)

    @property
    def step(self) -> float:
        return self.length / (self.n + 1)

    @property
    def grid(self) -> np.ndarray:
        return self.step * np.arange(1, self.n + 1)

    def refined(self) -> "AiryProblem":
        """Same domain with the step halved"""
        return AiryProblem(slope=self.slope, length=self.length, n=2 * self.n + 1)

    @classmethod
    def for_modes(cls, slope: float, modes: int, reference_step: float = REFERENCE_STEP) -> "AiryProblem":
        """
        Domain and grid sized for the first ``modes`` eigenpairs

        L = lambda_m / a + 10 a^(-1/3) puts the m-th turning point well inside
        the box; the step scales as a^(-1/3) so every slope sees the same
        scaled grid.
        """
        length = airy_domain_length(slope, modes)
        step = reference_step * slope ** (-1.0 / 3.0)
        n = max(MIN_GRID, 10 * modes, math.ceil(length / step) - 1)
        return cls(slope=slope, length=length, n=n)


class TridiagonalMatrix(NumericModel):
    """Symmetric tridiagonal matrix by its diagonals"""

    diagonal: np.ndarray
    off_diagonal: np.ndarray

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diagonal) + np.diag(self.off_diagonal, 1) + np.diag(self.off_diagonal, -1)


class AiryPrior(BaseModel):
    """Independent normal priors on log a and log sigma"""

    log_slope_mean: float = 0.0
    log_slope_sd: float = Field(default=1.0, gt=0)
    log_sigma_mean: float = math.log(0.05)
    log_sigma_sd: float = Field(default=1.5, gt=0)

    def log_density(self, theta: np.ndarray) -> float:
        za = (theta[0] - self.log_slope_mean) / self.log_slope_sd
        zs = (theta[1] - self.log_sigma_mean) / self.log_sigma_sd
        return -0.5 * (za * za + zs * zs)

    @property
    def precision(self) -> np.ndarray:
        return np.diag([self.log_slope_sd**-2, self.log_sigma_sd**-2])


class EigenErrorRow(BaseModel):
    index: int
    exact: float
    estimate: float
    abs_err: float
    rel_err: float


class EigenErrorReport(BaseModel):
    rows: List[EigenErrorRow]
    max_rel_err: float
    note: str

    def to_rows(self) -> tuple[list[str], list[list[float]]]:
        header = ["index", "exact", "estimate", "abs_err", "rel_err"]
        return header, [[r.index, r.exact, r.estimate, r.abs_err, r.rel_err] for r in self.rows]


class AiryModel:
    """lambda(a) for the first m modes by rescaling one solved template"""

    def __init__(self, template: AiryProblem, modes: int):
        self.template = template
        self.modes = modes

    @cached_property
    def reference(self) -> np.ndarray:
        return airy_eigenvalues(self.template, self.modes)

    def eigenvalues(self, slope: float) -> np.ndarray:
        values = (slope / self.template.slope) ** (2.0 / 3.0) * self.reference
        if not np.all(np.isfinite(values)):
            raise DomainError(f"non-finite eigenvalues at slope {slope}")
        return values


def airy_domain_length(slope: float, modes: int) -> float:
    """lambda_m(a) / a + 10 a^(-1/3)"""
    if slope <= 0.0 or modes < 1:
        raise NumericValidationError("need slope > 0 and at least one mode")
    top = airy_exact_eigenvalues(slope, modes)[-1]
    return top / slope + DECAY_MARGIN * slope ** (-1.0 / 3.0)


def airy_discretize(prob: AiryProblem) -> TridiagonalMatrix:
    """Diagonal 2/h^2 + a x_i, off-diagonal -1/h^2"""
    h = prob.step
    diagonal = 2.0 / h**2 + prob.slope * prob.grid
    off = np.full(prob.n - 1, -1.0 / h**2)
    return TridiagonalMatrix(diagonal=diagonal, off_diagonal=off)


def _smallest(prob: AiryProblem, count: int) -> np.ndarray:
    mat = airy_discretize(prob)
    values = eigh_tridiagonal(
        mat.diagonal, mat.off_diagonal, eigvals_only=True, select="i", select_range=(0, count - 1)
    )
    return np.sort(values)


def _check_resolution(prob: AiryProblem, count: int) -> None:
    if count < 1:
        raise NumericValidationError("eigenvalue count must be >= 1")
    if count > prob.n // 10:
        raise NumericValidationError(f"{count} eigenvalues need n >= {10 * count} grid points, got {prob.n}")


def airy_eigenvalues(prob: AiryProblem, count: int, extrapolate: bool = True) -> np.ndarray:
    """
    Smallest ``count`` eigenvalues, Richardson-extrapolated over h and h/2

    Raises:
        NumericValidationError: if count > n / 10
    """
    _check_resolution(prob, count)
    coarse = _smallest(prob, count)
    if not extrapolate:
        return coarse
    fine = _smallest(prob.refined(), count)
    return (4.0 * fine - coarse) / 3.0


def airy_convergence_order(prob: AiryProblem, index: int = 0) -> float:
    """Observed order in h of the raw eigenvalue from grids h, h/2, h/4"""
    count = index + 1
    _check_resolution(prob, count)
    grids = [prob, prob.refined(), prob.refined().refined()]
    values = [_smallest(g, count)[index] for g in grids]
    return math.log2(abs(values[0] - values[1]) / abs(values[1] - values[2]))


def airy_exact_eigenvalues(slope: float, count: int) -> np.ndarray:
    """a^(2/3) |z_i| with z_i the first zeros of Ai"""
    zeros = ai_zeros(count)[0]
    return slope ** (2.0 / 3.0) * np.abs(zeros)


def synthesize_airy_data(
    slope: float, sigma: float, model: AiryModel, rng: np.random.Generator
) -> np.ndarray:
    """Y = lambda(a) + sigma * N(0, I)"""
    return model.eigenvalues(slope) + sigma * rng.standard_normal(model.modes)


def airy_fisher_information(theta: np.ndarray, model: AiryModel) -> np.ndarray:
    """
    Fisher information in (log a, log sigma)

    The slope block is S^T Sigma^-1 S with S = d lambda / d log a = (2/3) lambda
    and Sigma = sigma^2 I; the noise-scale entry is 2m.
    """
    slope, sigma = math.exp(theta[0]), math.exp(theta[1])
    sensitivity = (2.0 / 3.0) * model.eigenvalues(slope)
    fim = np.zeros((2, 2))
    fim[0, 0] = classical_fim(sensitivity, sigma**2 * np.eye(model.modes))[0, 0]
    fim[1, 1] = 2.0 * model.modes
    return fim


def airy_posterior(
    observed: Sequence[float], prior: AiryPrior, template: AiryProblem, model: Optional[AiryModel] = None
) -> TargetDensity:
    """
    Posterior over theta = (log a, log sigma)

    log p = log prior - m log sigma - 1/2 sum (Y_i - lambda_i(a))^2 / sigma^2;
    the gradient is taken by central differences.

    Raises:
        NumericValidationError: if the observation count does not fit the template
    """
    y = np.asarray(observed, dtype=float)
    model = model or AiryModel(template, y.size)
    if model.modes != y.size:
        raise NumericValidationError(f"{y.size} observations but the model has {model.modes} modes")
    m = y.size

    def log_density(theta: np.ndarray) -> float:
        log_a, log_sigma = float(theta[0]), float(theta[1])
        resid = y - model.eigenvalues(math.exp(log_a))
        return prior.log_density(theta) - m * log_sigma - 0.5 * float(resid @ resid) * math.exp(-2.0 * log_sigma)

    def grad_log_density(theta: np.ndarray) -> np.ndarray:
        x = np.asarray(theta, dtype=float)
        grad = np.empty(2)
        for k in range(2):
            e = np.zeros(2)
            e[k] = GRADIENT_STEP
            grad[k] = (log_density(x + e) - log_density(x - e)) / (2.0 * GRADIENT_STEP)
        return grad

    return TargetDensity(dim=2, log_density=log_density, grad_log_density=grad_log_density, name="airy-posterior")


def airy_initial_guess(observed: Sequence[float], model: AiryModel) -> np.ndarray:
    """Least-squares slope and residual scale as a starting point"""
    y = np.asarray(observed, dtype=float)
    ref = model.eigenvalues(model.template.slope)
    scale = max(float(y @ ref) / float(ref @ ref), 1e-12)
    slope = model.template.slope * scale**1.5
    resid = y - model.eigenvalues(slope)
    sigma = max(float(np.sqrt(np.mean(resid**2))), 1e-8)
    return np.array([math.log(slope), math.log(sigma)])


def run_airy_inference(
    observed: Sequence[float],
    template: AiryProblem,
    config: HMCConfig,
    seed: int,
    n_chains: int = 1,
    prior: Optional[AiryPrior] = None,
    threads: Optional[int] = None,
    preconditioned: bool = True,
    dtau: float = 1e-8,
) -> List[ChainResult]:
    """
    Sample the slope posterior

    The preconditioner is seeded with the Fisher information plus prior
    precision at the least-squares start, so the first momenta already
    follow the posterior's scales.
    """
    prior = prior or AiryPrior()
    y = np.asarray(observed, dtype=float)
    model = AiryModel(template, y.size)
    target = airy_posterior(y, prior, template, model)
    start = airy_initial_guess(y, model)

    factory = None
    if preconditioned:
        precision = airy_fisher_information(start, model) + prior.precision
        factory = lambda: DMPreconditioner.from_precision(precision, dtau=dtau)  # noqa: E731

    results = run_chains(target, config, n_chains, seed, factory, threads, initial=start)
    logger.info(
        "Airy inference finished",
        extra={"chains": n_chains, "acceptance_rate": float(np.mean([r.acceptance_rate for r in results]))},
    )
    return results


def eigen_error_report(estimated: Sequence[float], exact: Sequence[float]) -> EigenErrorReport:
    """
    Absolute and relative errors per index, in input order

    Raises:
        NumericValidationError: for unequal lengths
    """
    est = np.asarray(estimated, dtype=float)
    ref = np.asarray(exact, dtype=float)
    if est.shape != ref.shape:
        raise NumericValidationError(f"length mismatch: {est.size} estimates, {ref.size} exact values")
    abs_err = np.abs(est - ref)
    denom = np.where(ref != 0.0, np.abs(ref), 1.0)
    rel_err = abs_err / denom
    rows = [
        EigenErrorRow(index=i + 1, exact=float(r), estimate=float(e), abs_err=float(a), rel_err=float(q))
        for i, (r, e, a, q) in enumerate(zip(ref, est, abs_err, rel_err))
    ]
    worst = float(np.max(rel_err)) if rel_err.size else 0.0
    roundoff = 10.0 * np.finfo(float).eps
    if worst <= roundoff:
        note = f"max relative error {worst:.3e}: at unit-roundoff level"
    else:
        note = (
            f"max relative error {worst:.3e}: second-order finite differences with Richardson "
            f"extrapolation; not at unit roundoff ({np.finfo(float).eps:.1e})"
        )
    return EigenErrorReport(rows=rows, max_rel_err=worst, note=note)
