"""
Density-matrix preconditioner for the HMC momentum proposal.

rho tracks the normalized posterior precision. Every adaptation epoch it is
conjugated by one circular-unitary walk increment V and contracted toward
the target:

    rho <- project((1 - alpha) V rho V^H + alpha rho_target),
    rho_target = Sigma^-1 / tr(Sigma^-1),

with Sigma the regularized running covariance of the chain. The mass matrix
is M = s (Re rho + floor I) with s = tr(Sigma^-1).
"""

from typing import Optional

import numpy as np
from pydantic import Field, model_validator

from ..density import DensityMatrix, project_to_density
from ..errors import DomainError, SamplerError
from ..numkernel import NumericModel, dagger, hermitize
from ..rmt import UnitaryWalkState, cue_increment
from ..utils.logging import get_logger

logger = get_logger(__name__)

SCATTER_REGULARIZATION = 1e-6


class DMPreconditioner(NumericModel):
    """Adaptive density-matrix state; mutable until frozen"""

    dim: int = Field(..., ge=1)
    rho: Optional[DensityMatrix] = None
    walk: Optional[UnitaryWalkState] = None
    alpha: float = Field(default=0.1, gt=0, le=1)
    dtau: float = Field(default=0.01, ge=0)
    adapt_every: int = Field(default=10, ge=1)
    floor: float = Field(default=1e-8, gt=0)
    min_samples: Optional[int] = None
    anneal_epochs: Optional[int] = None
    fallback_scale: Optional[float] = None

    count: int = 0
    mean: Optional[np.ndarray] = None
    scatter: Optional[np.ndarray] = None
    epochs: int = 0
    frozen: bool = False

    @model_validator(mode="after")
    def initialize(self) -> "DMPreconditioner":
        if self.rho is None:
            self.rho = DensityMatrix.maximally_mixed(self.dim)
        if self.rho.dim != self.dim:
            raise ValueError("rho dimension differs from dim")
        if self.walk is None:
            self.walk = UnitaryWalkState.identity(self.dim, self.dtau)
        if self.min_samples is None:
            self.min_samples = self.dim + 1
        if self.mean is None:
            self.mean = np.zeros(self.dim)
        if self.scatter is None:
            self.scatter = np.zeros((self.dim, self.dim))
        return self

    @classmethod
    def from_precision(cls, precision: np.ndarray, **kwargs) -> "DMPreconditioner":
        """Seed rho with P / tr P and use tr P as the scale until data arrive"""
        p = np.atleast_2d(np.asarray(precision, dtype=float))
        p = 0.5 * (p + p.T)
        trace = float(np.trace(p))
        if trace <= 0.0:
            raise DomainError("seed precision must have positive trace")
        rho = project_to_density(p / trace)
        return cls(dim=p.shape[0], rho=rho, fallback_scale=trace, **kwargs)

    def covariance(self) -> Optional[np.ndarray]:
        """Regularized running covariance, or None before min_samples draws"""
        if self.count < max(2, self.min_samples or 2):
            return None
        cov = self.scatter / (self.count - 1)
        cov = 0.5 * (cov + cov.T)
        cov = cov + SCATTER_REGULARIZATION * float(np.trace(cov)) / self.dim * np.eye(self.dim)
        return cov

    def precision(self) -> Optional[np.ndarray]:
        cov = self.covariance()
        if cov is None:
            return None
        try:
            return np.linalg.inv(cov)
        except np.linalg.LinAlgError:
            return None

    def target_density(self) -> DensityMatrix:
        """Normalized precision, or I/D while the scatter is not usable"""
        precision = self.precision()
        if precision is None or not np.all(np.isfinite(precision)) or np.trace(precision) <= 0:
            return DensityMatrix.maximally_mixed(self.dim)
        return project_to_density(precision / np.trace(precision))

    def scale(self) -> float:
        precision = self.precision()
        if precision is not None and np.all(np.isfinite(precision)) and np.trace(precision) > 0:
            return float(np.trace(precision))
        return float(self.dim if self.fallback_scale is None else self.fallback_scale)

    def current_dtau(self) -> float:
        """Walk step for the current epoch, annealed quadratically to zero"""
        if not self.anneal_epochs:
            return self.dtau
        frac = min(self.epochs / self.anneal_epochs, 1.0)
        return self.dtau * (1.0 - frac) ** 2

    def record(self, theta: np.ndarray) -> None:
        """Welford update of count, mean and scatter"""
        x = np.asarray(theta, dtype=float)
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.scatter = self.scatter + np.outer(delta, x - self.mean)

    def freeze(self) -> None:
        """Collapse rho onto its target and lock it; without usable draws rho is kept as is"""
        if self.frozen:
            return
        if self.precision() is not None:
            self.rho = self.target_density()
        self.frozen = True
        logger.info("Preconditioner frozen", extra={"samples": self.count, "epochs": self.epochs})


def adapt_density(
    pre: DMPreconditioner, rng: np.random.Generator, increment: Optional[np.ndarray] = None
) -> DensityMatrix:
    """One adaptation epoch: conjugate by a walk increment, then contract toward the target"""
    if increment is None:
        dtau = pre.current_dtau()
        increment = cue_increment(pre.dim, dtau, rng) if dtau > 0.0 else np.eye(pre.dim, dtype=complex)
        pre.walk = UnitaryWalkState(
            unitary=pre.walk.unitary @ increment,
            tau=pre.walk.tau + dtau,
            dtau=pre.dtau,
            steps=pre.walk.steps + 1,
        )
    rotated = increment @ pre.rho.matrix @ dagger(increment)
    mixed = (1.0 - pre.alpha) * rotated + pre.alpha * pre.target_density().matrix
    return project_to_density(hermitize(mixed))


def dm_update(
    pre: DMPreconditioner,
    theta: np.ndarray,
    rng: np.random.Generator,
    increment: Optional[np.ndarray] = None,
) -> DMPreconditioner:
    """
    Record a new position and adapt rho at the end of each epoch

    Args:
        pre: Preconditioner (mutated and returned)
        theta: Newest chain position
        rng: Stream for the walk increment
        increment: Fixed unitary V in place of a walk draw

    Raises:
        SamplerError: if the preconditioner is frozen
    """
    if pre.frozen:
        raise SamplerError("preconditioner is frozen; updates after warmup are not allowed")
    pre.record(theta)
    if pre.count % pre.adapt_every == 0:
        pre.rho = adapt_density(pre, rng, increment)
        pre.epochs += 1
    return pre


def mass_from_rho(pre: DMPreconditioner) -> np.ndarray:
    """M = s (Re rho + floor I), symmetric positive definite"""
    real = np.real(pre.rho.matrix)
    real = 0.5 * (real + real.T)
    return pre.scale() * (real + pre.floor * np.eye(pre.dim))
