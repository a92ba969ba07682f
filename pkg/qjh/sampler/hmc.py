"""
Hamiltonian Monte Carlo with a fixed (per-iteration) mass matrix.

Momentum p ~ N(0, M), position velocity M^-1 p, and

    H(theta, p) = -log p(theta) + 1/2 log((2 pi)^D |M|) + 1/2 p^T M^-1 p.
"""

import math
from typing import Callable, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator
from scipy import linalg as sla

from ..errors import ConfigError, NumericValidationError
from ..numkernel import NumericModel
from ..utils.logging import get_logger

logger = get_logger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
GRADIENT_CHECK_TOL = 1e-5


class TargetDensity(NumericModel):
    """Unnormalized log density on R^D with its gradient"""

    dim: int = Field(..., ge=1)
    log_density: Callable[[np.ndarray], float]
    grad_log_density: Callable[[np.ndarray], np.ndarray]
    name: str = "target"

    def gradient_error(self, theta: np.ndarray, h: float = 1e-5) -> float:
        """Largest relative gap between the gradient and central differences at theta"""
        x = np.asarray(theta, dtype=float)
        analytic = np.asarray(self.grad_log_density(x), dtype=float)
        numeric = np.empty(self.dim)
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = h
            numeric[k] = (self.log_density(x + e) - self.log_density(x - e)) / (2.0 * h)
        scale = max(1.0, float(np.max(np.abs(numeric))))
        return float(np.max(np.abs(analytic - numeric))) / scale

    def check_gradient(self, rng: np.random.Generator, n_points: int = 3, scale: float = 1.0) -> float:
        """
        Compare the gradient with central differences at random points

        Raises:
            NumericValidationError: if any point disagrees beyond 1e-5 relative
        """
        worst = 0.0
        for _ in range(n_points):
            worst = max(worst, self.gradient_error(scale * rng.standard_normal(self.dim)))
        if worst > GRADIENT_CHECK_TOL:
            raise NumericValidationError(
                f"gradient of {self.name} disagrees with finite differences (relative error {worst:.2e})"
            )
        return worst


class MassMatrix(NumericModel):
    """SPD mass matrix with its Cholesky factor M = L L^T"""

    matrix: np.ndarray

    _chol: np.ndarray = PrivateAttr()

    @model_validator(mode="after")
    def factor(self) -> "MassMatrix":
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if m.shape[0] != m.shape[1] or not np.allclose(m, m.T, rtol=1e-10, atol=1e-12):
            raise ConfigError("mass matrix must be square and symmetric", key="mass_matrix")
        try:
            self._chol = sla.cholesky(m, lower=True)
        except np.linalg.LinAlgError as e:
            raise ConfigError(f"mass matrix is not positive definite: {e}", key="mass_matrix") from e
        self.matrix = m
        return self

    @classmethod
    def identity(cls, dim: int) -> "MassMatrix":
        return cls(matrix=np.eye(dim))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def log_det(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self._chol))))

    @property
    def inverse(self) -> np.ndarray:
        return sla.cho_solve((self._chol, True), np.eye(self.dim))

    def sample_momentum(self, rng: np.random.Generator) -> np.ndarray:
        return self._chol @ rng.standard_normal(self.dim)

    def velocity(self, p: np.ndarray) -> np.ndarray:
        """M^-1 p"""
        return sla.cho_solve((self._chol, True), p)

    def kinetic(self, p: np.ndarray) -> float:
        """1/2 p^T M^-1 p"""
        z = sla.solve_triangular(self._chol, p, lower=True)
        return 0.5 * float(z @ z)


class HMCConfig(BaseModel):
    """Fixed HMC settings; ``iterations`` counts warmup iterations too"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    step_size: float = Field(..., gt=0)
    n_leapfrog: int = Field(..., ge=1)
    mass_matrix: Optional[np.ndarray] = None
    warmup: int = Field(default=0, ge=0)
    iterations: int = Field(..., ge=1)
    seed: Optional[int] = None
    divergence_threshold: float = Field(default=1000.0, gt=0)

    @model_validator(mode="after")
    def check_schedule(self) -> "HMCConfig":
        if self.warmup >= self.iterations:
            raise ValueError(f"warmup ({self.warmup}) must be < iterations ({self.iterations})")
        return self

    def initial_mass(self, dim: int) -> MassMatrix:
        if self.mass_matrix is None:
            return MassMatrix.identity(dim)
        mass = MassMatrix(matrix=self.mass_matrix)
        if mass.dim != dim:
            raise ConfigError(f"mass matrix is {mass.dim}x{mass.dim}, target dimension is {dim}", key="mass_matrix")
        return mass


class ChainState(NumericModel):
    """Current position with cached log density and gradient"""

    position: np.ndarray
    log_density: float
    gradient: np.ndarray
    iteration: int = 0
    accepted: int = 0
    divergences: int = 0
    last_reason: Optional[str] = None

    @classmethod
    def start(cls, target: TargetDensity, position: np.ndarray) -> "ChainState":
        x = np.asarray(position, dtype=float)
        return cls(
            position=x,
            log_density=float(target.log_density(x)),
            gradient=np.asarray(target.grad_log_density(x), dtype=float),
        )


class LeapfrogResult(NamedTuple):
    position: np.ndarray
    momentum: np.ndarray
    gradient: np.ndarray
    diverged: bool


def hamiltonian(theta: np.ndarray, p: np.ndarray, target: TargetDensity, mass: MassMatrix) -> float:
    """-log p(theta) + 1/2 log((2 pi)^D |M|) + 1/2 p^T M^-1 p"""
    return _energy(float(target.log_density(theta)), p, mass)


def _energy(log_density: float, p: np.ndarray, mass: MassMatrix) -> float:
    return -log_density + 0.5 * (mass.dim * LOG_2PI + mass.log_det) + mass.kinetic(p)


def leapfrog(
    theta: np.ndarray,
    p: np.ndarray,
    target: TargetDensity,
    mass: MassMatrix,
    step_size: float,
    n_steps: int,
    gradient: Optional[np.ndarray] = None,
) -> LeapfrogResult:
    """
    Half kick, drift, half kick; repeated n_steps times

    A non-finite gradient stops the trajectory and sets ``diverged``.
    """
    x = np.array(theta, dtype=float)
    mom = np.array(p, dtype=float)
    grad = np.asarray(target.grad_log_density(x) if gradient is None else gradient, dtype=float)
    for _ in range(n_steps):
        mom = mom + 0.5 * step_size * grad
        x = x + step_size * mass.velocity(mom)
        grad = np.asarray(target.grad_log_density(x), dtype=float)
        if not np.all(np.isfinite(grad)):
            return LeapfrogResult(x, mom, grad, True)
        mom = mom + 0.5 * step_size * grad
    return LeapfrogResult(x, mom, grad, False)


def acceptance_probability(h_current: float, h_proposed: float) -> float:
    """min(1, exp(H_current - H_proposed)); 0 for a non-finite proposal"""
    delta = h_current - h_proposed
    if not math.isfinite(delta):
        return 0.0
    return 1.0 if delta >= 0.0 else math.exp(delta)


def hmc_step(
    state: ChainState,
    target: TargetDensity,
    config: HMCConfig,
    rng: np.random.Generator,
    mass: Optional[MassMatrix] = None,
) -> ChainState:
    """
    One HMC transition with a full momentum refresh

    Exactly one momentum draw and one uniform draw are consumed per call,
    accepted or not, so chains replay deterministically from a seed.
    """
    mass = config.initial_mass(target.dim) if mass is None else mass
    p0 = mass.sample_momentum(rng)
    h0 = _energy(state.log_density, p0, mass)

    result = leapfrog(state.position, p0, target, mass, config.step_size, config.n_leapfrog, state.gradient)
    u = rng.uniform()

    reason: Optional[str] = None
    log_density = float("nan")
    if result.diverged:
        reason = "non-finite gradient"
    else:
        log_density = float(target.log_density(result.position))
        h1 = _energy(log_density, result.momentum, mass)
        if not math.isfinite(h1) or abs(h1 - h0) > config.divergence_threshold:
            reason = f"energy error {h1 - h0:.3g} above threshold"

    update = {"iteration": state.iteration + 1}
    if reason is not None:
        update.update(divergences=state.divergences + 1, last_reason=reason)
        return state.model_copy(update=update)

    if u < acceptance_probability(h0, h1):
        update.update(
            position=result.position,
            log_density=log_density,
            gradient=result.gradient,
            accepted=state.accepted + 1,
            last_reason=None,
        )
    else:
        update["last_reason"] = "rejected"
    return state.model_copy(update=update)
