"""
Lindblad (GKSL) master-equation evolution.

The generator is applied in canonical form
    -i[H, X] + sum_k (L_k X L_k^H - 1/2 {L_k^H L_k, X})
and integrated with fixed-step classical RK4.
"""

import math
from typing import Callable, List, Optional

import numpy as np
from pydantic import Field, PrivateAttr, model_validator

from .density import DensityMatrix, DensityTrajectory, StateLike, project_to_density
from .errors import IntegrationError, NumericValidationError
from .numkernel import NumericModel, as_hermitian, as_matrix, dagger, hermitize
from .utils.logging import get_logger

logger = get_logger(__name__)

TRACE_DRIFT_LIMIT = 1e-6


class LindbladModel(NumericModel):
    """Hamiltonian plus jump operators"""

    hamiltonian: np.ndarray
    jumps: List[np.ndarray] = Field(default_factory=list)

    _loss: np.ndarray = PrivateAttr()

    @model_validator(mode="after")
    def check_operators(self) -> "LindbladModel":
        self.hamiltonian = as_hermitian(self.hamiltonian)
        d = self.hamiltonian.shape[0]
        jumps = [as_matrix(j) for j in self.jumps]
        for k, jump in enumerate(jumps):
            if jump.shape != (d, d):
                raise ValueError(f"jump operator {k} has shape {jump.shape}, expected {(d, d)}")
        self.jumps = jumps
        loss = np.zeros((d, d), dtype=complex)
        for jump in jumps:
            loss += dagger(jump) @ jump
        self._loss = loss
        return self

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def loss_operator(self) -> np.ndarray:
        """sum_k L_k^H L_k"""
        return self._loss


def apply_generator(model: LindbladModel, x: np.ndarray) -> np.ndarray:
    """
    Action of the Lindblad superoperator on an arbitrary operand

    The operand need not be a state; this is also how memory-kernel
    operands are propagated.
    """
    if x.shape[-2:] != (model.dim, model.dim):
        raise NumericValidationError(
            f"operand shape {x.shape} does not match model dimension {model.dim}"
        )
    h = model.hamiltonian
    out = -1j * (h @ x - x @ h)
    for jump in model.jumps:
        out = out + jump @ x @ dagger(jump)
    out = out - 0.5 * (model.loss_operator @ x + x @ model.loss_operator)
    return out


def lindblad_rhs(model: LindbladModel, rho: StateLike) -> np.ndarray:
    """d rho / dt; Hermitian and traceless"""
    m = rho.matrix if isinstance(rho, DensityMatrix) else as_matrix(rho)
    return hermitize(apply_generator(model, m))


def rk4_step(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of the autonomous system x' = f(x)"""
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def propagate_operator(
    model: LindbladModel, x: np.ndarray, duration: float, n_sub: int = 4
) -> np.ndarray:
    """exp(L duration) X by sub-stepped RK4; X may be any operand"""
    if duration == 0.0:
        return x
    h = duration / n_sub
    for _ in range(n_sub):
        x = rk4_step(lambda y: apply_generator(model, y), x, h)
    return x


def _step_count(t_final: float, dt: float) -> int:
    if dt <= 0.0:
        raise NumericValidationError(f"time step must be > 0, got {dt}")
    if t_final < 0.0:
        raise NumericValidationError(f"final time must be >= 0, got {t_final}")
    if t_final == 0.0:
        return 0
    return max(1, math.ceil(t_final / dt - 1e-9))


def evolve(
    model: LindbladModel,
    rho0: StateLike,
    t_final: float,
    dt: float,
    store_every: int = 1,
) -> DensityTrajectory:
    """
    Integrate the master equation with fixed-step RK4

    The step is adjusted to t_final / ceil(t_final / dt) so the grid ends
    exactly on t_final. Integration runs on the raw iterate; each stored
    state is a projected copy.

    Args:
        model: Lindblad model
        rho0: Initial density matrix
        t_final: End time (>= 0)
        dt: Requested step (> 0)
        store_every: Keep every n-th state (the final state is always kept)

    Returns:
        DensityTrajectory

    Raises:
        NumericValidationError: for a bad schedule or dimension mismatch
        IntegrationError: on non-finite values or trace drift beyond 1e-6
    """
    start = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(matrix=rho0)
    if start.dim != model.dim:
        raise NumericValidationError(
            f"state dimension {start.dim} does not match model dimension {model.dim}"
        )
    n_steps = _step_count(t_final, dt)
    h = t_final / n_steps if n_steps else 0.0

    def rhs(x: np.ndarray) -> np.ndarray:
        return hermitize(apply_generator(model, x))

    rho = start.matrix.copy()
    times = [0.0]
    states = [start.matrix]
    for step in range(1, n_steps + 1):
        rho = rk4_step(rhs, rho, h)
        if not np.all(np.isfinite(rho)):
            raise IntegrationError(
                f"non-finite state at step {step}; reduce dt (currently {h:g})", step=step
            )
        drift = abs(float(np.trace(rho).real) - 1.0)
        if drift > TRACE_DRIFT_LIMIT:
            raise IntegrationError(
                f"trace drift {drift:.2e} at step {step}; reduce dt (currently {h:g})",
                step=step,
            )
        if step % store_every == 0 or step == n_steps:
            times.append(step * h)
            states.append(project_to_density(rho).matrix)

    logger.debug(
        "Lindblad evolution finished",
        extra={"steps": n_steps, "dt": h, "final_trace_drift": abs(float(np.trace(rho).real) - 1.0)},
    )
    return DensityTrajectory(times=np.asarray(times), states=np.stack(states))


def amplitude_damping_model(rate: float = 1.0, hamiltonian: Optional[np.ndarray] = None) -> LindbladModel:
    """Two-level decay with L = sqrt(rate) |g><e|; index 0 is |g>, index 1 is |e>"""
    lower = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    h = np.zeros((2, 2), dtype=complex) if hamiltonian is None else hamiltonian
    return LindbladModel(hamiltonian=h, jumps=[math.sqrt(rate) * lower])


def dephasing_model(rate: float = 1.0, hamiltonian: Optional[np.ndarray] = None) -> LindbladModel:
    """Pure dephasing with L = sqrt(rate / 2) sigma_z; coherences decay as exp(-rate t)"""
    sigma_z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    h = np.zeros((2, 2), dtype=complex) if hamiltonian is None else hamiltonian
    return LindbladModel(hamiltonian=h, jumps=[math.sqrt(rate / 2.0) * sigma_z])
