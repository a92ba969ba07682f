"""
Stochastic Schrodinger equations and the colored-noise master equation.

Noise is reified: Wiener and Ornstein-Uhlenbeck paths are values, so every
integrator here is a deterministic function of (model, initial state, path).
All integrators accept paths with a leading path axis and then propagate the
whole ensemble at once.

Conventions for a model with Hamiltonian H(t) and noise operators R_j(t):

    K(t) = -i H(t) - 1/2 sum_j R_j(t)^H R_j(t)
    linear:      d psi = K psi dt + sum_j R_j psi dW_j
    nonlinear:   d psi = [K + sum_j (Re eta_j R_j - 1/2 (Re eta_j)^2)] psi dt
                         + sum_j (R_j - Re eta_j) psi dW_j,   eta_j = <psi|R_j psi>
"""

import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field, PrivateAttr, model_validator

from .config import get_settings
from .density import DensityMatrix, DensityTrajectory, StateLike
from .errors import ConfigError, IntegrationError, NumericValidationError
from .lindblad import LindbladModel, apply_generator, propagate_operator
from .numkernel import NumericModel, as_hermitian, as_matrix, commutator, dagger, hermitize
from .utils.logging import get_logger
from .utils.validation import validate_hermitian

logger = get_logger(__name__)

DEGENERATE_NORM = 1e-14
POSITIVITY_FLAG = 1e-6
UNIT_NORM_TOL = 1e-10

OperatorFn = Callable[[float], np.ndarray]


class SSEModel(NumericModel):
    """Time-dependent Hamiltonian and noise operators of a stochastic Schrodinger equation"""

    dim: int = Field(..., ge=1)
    hamiltonian: OperatorFn
    noise_ops: List[OperatorFn] = Field(default_factory=list)

    _cache: Optional[Tuple[np.ndarray, np.ndarray]] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def check_at_origin(self) -> "SSEModel":
        h, rs = self._evaluate(0.0)
        valid, message = validate_hermitian(h)
        if not valid:
            raise ValueError(f"H(0): {message}")
        return self

    @classmethod
    def time_independent(
        cls, hamiltonian: np.ndarray, noise_ops: Sequence[np.ndarray] = ()
    ) -> "SSEModel":
        h = as_hermitian(hamiltonian)
        rs = [as_matrix(r) for r in noise_ops]
        model = cls(
            dim=h.shape[0],
            hamiltonian=lambda t: h,
            noise_ops=[(lambda t, r=r: r) for r in rs],
        )
        model._cache = model._evaluate(0.0)
        return model

    def _evaluate(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        h = np.asarray(self.hamiltonian(t), dtype=complex)
        if h.shape != (self.dim, self.dim):
            raise ValueError(f"H({t}) has shape {h.shape}, expected {(self.dim, self.dim)}")
        if self.noise_ops:
            rs = np.stack([np.asarray(r(t), dtype=complex) for r in self.noise_ops])
            if rs.shape[1:] != (self.dim, self.dim):
                raise ValueError(f"noise operators at t={t} have shape {rs.shape[1:]}")
        else:
            rs = np.zeros((0, self.dim, self.dim), dtype=complex)
        return h, rs

    def operators(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        """(H(t), stack of R_j(t))"""
        if self._cache is not None:
            return self._cache
        try:
            return self._evaluate(t)
        except ValueError as e:
            raise NumericValidationError(str(e)) from e

    @property
    def n_channels(self) -> int:
        return len(self.noise_ops)


class WienerPath(NumericModel):
    """Gaussian increments dW_j ~ N(0, dt) on a time grid, shape (..., n_steps, channels)"""

    times: np.ndarray
    increments: np.ndarray

    @model_validator(mode="after")
    def check_grid(self) -> "WienerPath":
        if self.increments.ndim < 2 or self.increments.shape[-2] != self.times.shape[0] - 1:
            raise ValueError("increments need one row per time step")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time grid must be strictly increasing")
        return self

    @property
    def n_steps(self) -> int:
        return self.times.shape[0] - 1

    @property
    def n_channels(self) -> int:
        return self.increments.shape[-1]

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.increments.shape[:-2]

    def values(self) -> np.ndarray:
        """W(t) on the grid, W(0) = 0"""
        zero = np.zeros(self.batch_shape + (1, self.n_channels))
        return np.concatenate([zero, np.cumsum(self.increments, axis=-2)], axis=-2)


class OUPath(NumericModel):
    """Stationary Ornstein-Uhlenbeck values X(t) with the Wiener path that drives them"""

    gamma: float = Field(..., ge=0)
    times: np.ndarray
    values: np.ndarray
    wiener: WienerPath


class StateTrajectory(NumericModel):
    """State vectors on (a subsample of) the grid; shape (..., n_stored, dim)"""

    times: np.ndarray
    states: np.ndarray
    norms: np.ndarray
    degenerate_steps: List[int] = Field(default_factory=list)

    def to_rows(self) -> tuple[list[str], list[list[float]]]:
        d = self.states.shape[-1]
        header = ["time"] + [f"{part}_{k}" for k in range(d) for part in ("re", "im")] + ["norm"]
        rows = []
        for t, psi, nrm in zip(self.times, self.states, self.norms):
            row = [float(t)]
            for z in psi:
                row += [float(z.real), float(z.imag)]
            rows.append(row + [float(nrm)])
        return header, rows


def time_grid(t_final: float, dt: float) -> np.ndarray:
    """Uniform grid from 0 to t_final with step as close to dt as divides evenly"""
    if dt <= 0.0 or t_final <= 0.0:
        raise NumericValidationError(f"need dt > 0 and t_final > 0, got dt={dt}, t_final={t_final}")
    n = max(1, math.ceil(t_final / dt - 1e-9))
    return np.linspace(0.0, t_final, n + 1)


def sample_wiener_path(
    grid: np.ndarray,
    n_channels: int,
    rng: np.random.Generator,
    n_paths: Optional[int] = None,
) -> WienerPath:
    """Independent N(0, dt) increments per channel and step"""
    times = np.asarray(grid, dtype=float)
    dt = np.diff(times)
    shape = (len(dt), n_channels) if n_paths is None else (n_paths, len(dt), n_channels)
    increments = rng.standard_normal(shape) * np.sqrt(dt)[:, None]
    return WienerPath(times=times, increments=increments)


def sample_ou_path(
    gamma: float,
    grid: np.ndarray,
    rng: np.random.Generator,
    n_paths: Optional[int] = None,
) -> OUPath:
    """
    Exact discretization of dX = -gamma X dt + dW from the stationary law

    Each step draws (X increment innovation, dW) jointly: with a = exp(-gamma dt),
    Var(I) = (1 - a^2) / (2 gamma), Var(dW) = dt and Cov(I, dW) = (1 - a) / gamma,
    where X_{n+1} = a X_n + I. X(0) ~ N(0, 1/(2 gamma)).

    Raises:
        NumericValidationError: if gamma <= 0
    """
    if gamma <= 0.0:
        raise NumericValidationError(f"OU rate must be > 0, got {gamma}")
    times = np.asarray(grid, dtype=float)
    dt = np.diff(times)
    batch = () if n_paths is None else (n_paths,)

    a = np.exp(-gamma * dt)
    var_i = (1.0 - a**2) / (2.0 * gamma)
    cov = (1.0 - a) / gamma
    slope = cov / dt
    resid = np.sqrt(np.clip(var_i - cov**2 / dt, 0.0, None))

    dw = rng.standard_normal(batch + (len(dt),)) * np.sqrt(dt)
    xi = rng.standard_normal(batch + (len(dt),))
    innovations = slope * dw + resid * xi

    values = np.empty(batch + (len(times),))
    values[..., 0] = rng.standard_normal(batch) / math.sqrt(2.0 * gamma)
    for k in range(len(dt)):
        values[..., k + 1] = a[k] * values[..., k] + innovations[..., k]

    wiener = WienerPath(times=times, increments=dw[..., None])
    return OUPath(gamma=gamma, times=times, values=values, wiener=wiener)


def drift_operator(model: SSEModel, t: float) -> np.ndarray:
    """K(t) = -i H(t) - 1/2 sum_j R_j(t)^H R_j(t)"""
    h, rs = model.operators(t)
    loss = np.einsum("jba,jbc->ac", rs.conj(), rs)
    return -1j * h - 0.5 * loss


def _apply(op: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """op @ psi over a batch of row vectors"""
    return psi @ op.T


def _apply_each(rs: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """R_j psi for every channel; shape (..., channels, dim)"""
    return np.einsum("jab,...b->...ja", rs, psi)


def _initial_vector(model_dim: int, psi0: Sequence[complex]) -> np.ndarray:
    psi = np.asarray(psi0, dtype=complex)
    if psi.shape[-1] != model_dim:
        raise NumericValidationError(f"state has length {psi.shape[-1]}, model dimension is {model_dim}")
    if np.any(np.linalg.norm(psi, axis=-1) <= 0.0):
        raise NumericValidationError("initial state has zero norm")
    return psi


def _check_finite(x: np.ndarray, step: int) -> None:
    if not np.all(np.isfinite(x)):
        raise IntegrationError(f"non-finite state at step {step}; reduce dt", step=step)


def _broadcast(psi: np.ndarray, batch: Tuple[int, ...]) -> np.ndarray:
    return np.broadcast_to(psi, batch + psi.shape[-1:]).copy()


class _Recorder:
    """Collects every n-th iterate plus the last"""

    def __init__(self, times: np.ndarray, n_steps: int, store_every: int):
        if store_every < 1:
            raise NumericValidationError("store_every must be >= 1")
        self.times = times
        self.n_steps = n_steps
        self.store_every = store_every
        self.kept_times: List[float] = []
        self.kept: List[np.ndarray] = []

    def offer(self, step: int, value: np.ndarray) -> None:
        if step == 0 or step % self.store_every == 0 or step == self.n_steps:
            self.kept_times.append(float(self.times[step]))
            self.kept.append(value.copy())


def _stack_vectors(kept: List[np.ndarray]) -> np.ndarray:
    return np.stack(kept, axis=-2)


def _stack_matrices(kept: List[np.ndarray]) -> np.ndarray:
    return np.stack(kept, axis=-3)


def _vector_trajectory(rec: _Recorder, degenerate: List[int]) -> StateTrajectory:
    states = _stack_vectors(rec.kept)
    return StateTrajectory(
        times=np.asarray(rec.kept_times),
        states=states,
        norms=np.linalg.norm(states, axis=-1),
        degenerate_steps=degenerate,
    )


def integrate_lsse(
    model: SSEModel, psi0: Sequence[complex], path: WienerPath, store_every: int = 1
) -> StateTrajectory:
    """
    Euler-Maruyama for the linear SSE: psi += K psi dt + sum_j R_j psi dW_j

    Args:
        model: SSE model
        psi0: Initial vector (norm > 0)
        path: Wiener path with model.n_channels channels (optionally batched)
        store_every: Keep every n-th state

    Returns:
        StateTrajectory; states are not normalized

    Raises:
        IntegrationError: on overflow or NaN, naming the step
    """
    _check_channels(model, path)
    psi = _broadcast(_initial_vector(model.dim, psi0), path.batch_shape)
    times = path.times
    rec = _Recorder(times, path.n_steps, store_every)
    rec.offer(0, psi)
    for k in range(path.n_steps):
        dt = times[k + 1] - times[k]
        _, rs = model.operators(times[k])
        kmat = drift_operator(model, times[k])
        dw = path.increments[..., k, :]
        noise = np.einsum("...ja,...j->...a", _apply_each(rs, psi), dw)
        psi = psi + dt * _apply(kmat, psi) + noise
        _check_finite(psi, k + 1)
        rec.offer(k + 1, psi)
    return _vector_trajectory(rec, [])


def integrate_nonlinear_sse(
    model: SSEModel, psi0: Sequence[complex], path: WienerPath, store_every: int = 1
) -> StateTrajectory:
    """
    Euler-Maruyama for the normalized (nonlinear) SSE, renormalizing every step

    The path increments play the role of the reweighted-measure Wiener
    process. A state whose norm collapses below 1e-14 is replaced by the
    first basis vector and the step is recorded in ``degenerate_steps``.

    Raises:
        NumericValidationError: if psi0 is not unit norm
        IntegrationError: on overflow or NaN
    """
    _check_channels(model, path)
    psi = _initial_vector(model.dim, psi0)
    if np.any(np.abs(np.linalg.norm(psi, axis=-1) - 1.0) > UNIT_NORM_TOL):
        raise NumericValidationError("nonlinear SSE needs a unit-norm initial state")
    psi = _broadcast(psi, path.batch_shape)
    fallback = np.zeros(model.dim, dtype=complex)
    fallback[0] = 1.0

    times = path.times
    degenerate: List[int] = []
    rec = _Recorder(times, path.n_steps, store_every)
    rec.offer(0, psi)
    for k in range(path.n_steps):
        dt = times[k + 1] - times[k]
        _, rs = model.operators(times[k])
        kmat = drift_operator(model, times[k])
        dw = path.increments[..., k, :]

        r_psi = _apply_each(rs, psi)
        re_eta = np.real(np.einsum("...a,...ja->...j", psi.conj(), r_psi))
        drift = (
            _apply(kmat, psi)
            + np.einsum("...j,...ja->...a", re_eta, r_psi)
            - 0.5 * np.sum(re_eta**2, axis=-1)[..., None] * psi
        )
        diffusion = np.einsum("...ja,...j->...a", r_psi - re_eta[..., None] * psi[..., None, :], dw)
        psi = psi + dt * drift + diffusion
        _check_finite(psi, k + 1)

        norms = np.linalg.norm(psi, axis=-1, keepdims=True)
        collapsed = norms[..., 0] < DEGENERATE_NORM
        if np.any(collapsed):
            degenerate.append(k + 1)
            logger.warning(
                "Degenerate state norm; substituting first basis vector",
                extra={"flag": "degenerate_norm", "step": k + 1},
            )
            psi[collapsed] = fallback
            norms[collapsed] = 1.0
        psi = psi / norms
        rec.offer(k + 1, psi)
    return _vector_trajectory(rec, degenerate)


def _gksl_batch(h: np.ndarray, rs: np.ndarray, rho: np.ndarray) -> np.ndarray:
    loss = np.einsum("jba,jbc->ac", rs.conj(), rs)
    out = -1j * (h @ rho - rho @ h)
    out = out + np.einsum("jab,...bc,jdc->...ad", rs, rho, rs.conj())
    return out - 0.5 * (loss @ rho + rho @ loss)


def _project_batch(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hermitize(rho))
    w = np.clip(w, 0.0, None)
    w = w / np.sum(w, axis=-1, keepdims=True)
    return hermitize((v * w[..., None, :]) @ dagger(v))


def integrate_stochastic_master(
    model: SSEModel, rho0: StateLike, path: WienerPath, store_every: int = 1
) -> DensityTrajectory:
    """
    Euler-Maruyama for the nonlinear stochastic master equation

        d rho = L[rho] dt + sum_j (R_j rho + rho R_j^H - v_j rho) dW_j,
        v_j = tr((R_j + R_j^H) rho)

    with L the Lindblad generator of (H, R_j). Each step is Hermitized and
    renormalized; a minimum eigenvalue below -1e-6 flags the step and the
    iterate is replaced by its projection. Stored states are projections.
    """
    _check_channels(model, path)
    start = rho0 if isinstance(rho0, DensityMatrix) else DensityMatrix(matrix=rho0)
    if start.dim != model.dim:
        raise NumericValidationError("initial state and model dimensions differ")
    rho = np.broadcast_to(start.matrix, path.batch_shape + start.matrix.shape).copy()

    times = path.times
    flagged: List[int] = []
    kept_times = [float(times[0])]
    kept = [rho.copy()]
    for k in range(path.n_steps):
        dt = times[k + 1] - times[k]
        h, rs = model.operators(times[k])
        dw = path.increments[..., k, :]

        r_rho = np.einsum("jab,...bc->...jac", rs, rho)
        kick = r_rho + dagger(r_rho)
        v = np.real(np.trace(kick, axis1=-2, axis2=-1))
        kick = kick - v[..., None, None] * rho[..., None, :, :]
        rho = rho + dt * _gksl_batch(h, rs, rho) + np.einsum("...jac,...j->...ac", kick, dw)
        _check_finite(rho, k + 1)

        rho = hermitize(rho)
        rho = rho / np.real(np.trace(rho, axis1=-2, axis2=-1))[..., None, None]
        lowest = np.linalg.eigvalsh(rho)[..., 0]
        bad = lowest < -POSITIVITY_FLAG
        if np.any(bad):
            flagged.append(k + 1)
            logger.warning(
                "Positivity lost in stochastic master equation; projecting",
                extra={"flag": "positivity_loss", "step": k + 1, "min_eigenvalue": float(np.min(lowest))},
            )
            rho[bad] = _project_batch(rho[bad])

        step = k + 1
        if step % store_every == 0 or step == path.n_steps:
            kept_times.append(float(times[step]))
            kept.append(_project_batch(rho))
    return DensityTrajectory(
        times=np.asarray(kept_times), states=_stack_matrices(kept), flagged_steps=flagged
    )


def integrate_ou_sse(
    h0: np.ndarray,
    l_op: np.ndarray,
    gamma: float,
    psi0: Sequence[complex],
    ou: OUPath,
    path: Optional[WienerPath] = None,
    store_every: int = 1,
) -> StateTrajectory:
    """
    Linear SSE driven by colored noise: H(t) = H0 - gamma X(t) L, R = -i L

    Euler-Maruyama with K(t) = -i(H0 - gamma X(t) L) - 1/2 L^2. The Wiener
    path defaults to the one that generated ``ou``; for the memory
    construction both must be the same. gamma = 0 is accepted as the
    memoryless limit.

    Raises:
        NumericValidationError: if L is not Hermitian or the grids differ
    """
    h = as_hermitian(h0)
    lh = as_hermitian(l_op)
    if h.shape != lh.shape:
        raise NumericValidationError("H0 and L dimensions differ")
    if gamma < 0.0:
        raise NumericValidationError(f"gamma must be >= 0, got {gamma}")
    path = ou.wiener if path is None else path
    if path.times.shape != ou.times.shape or not np.allclose(path.times, ou.times):
        raise NumericValidationError("OU path and Wiener path grids differ")
    if path.n_channels != 1:
        raise NumericValidationError("colored-noise SSE takes a single Wiener channel")

    d = h.shape[0]
    psi = _broadcast(_initial_vector(d, psi0), path.batch_shape)
    base = -1j * h - 0.5 * (lh @ lh)
    times = path.times
    rec = _Recorder(times, path.n_steps, store_every)
    rec.offer(0, psi)
    for k in range(path.n_steps):
        dt = times[k + 1] - times[k]
        l_psi = _apply(lh, psi)
        x = ou.values[..., k][..., None]
        dw = path.increments[..., k, 0][..., None]
        psi = psi + dt * (_apply(base, psi) + 1j * gamma * x * l_psi) - 1j * l_psi * dw
        _check_finite(psi, k + 1)
        rec.offer(k + 1, psi)
    return _vector_trajectory(rec, [])


def nonmarkovian_evolve(
    h0: np.ndarray,
    l_op: np.ndarray,
    gamma: float,
    eta0: StateLike,
    t_final: float,
    dt: float,
    store_every: int = 1,
    n_sub: int = 4,
    max_history_bytes: Optional[int] = None,
) -> DensityTrajectory:
    """
    Approximate colored-noise master equation

        d eta/dt = L_M[eta] + (gamma/2) [L, T(t)],
        T(t) = int_0^t exp((L_M - gamma)(t - s)) [L, eta(s)] ds,

    with L_M[x] = -i[H0, x] - 1/2 [L, [L, x]]. The memory integral is the
    trapezoidal rule over the whole history, accumulated recursively (the
    propagator composes), and exp(L_M tau) acts on operands through
    sub-stepped RK4. Time stepping is Heun predictor-corrector.

    Raises:
        ConfigError: if the stored history would exceed max_history_bytes
        IntegrationError: on non-finite values
    """
    h = as_hermitian(h0)
    lh = as_hermitian(l_op)
    start = eta0 if isinstance(eta0, DensityMatrix) else DensityMatrix(matrix=eta0)
    if start.dim != h.shape[0]:
        raise NumericValidationError("initial state and operator dimensions differ")
    if gamma <= 0.0:
        raise NumericValidationError(f"gamma must be > 0, got {gamma}")

    grid = time_grid(t_final, dt)
    n_steps = len(grid) - 1
    d = start.dim
    limit = get_settings().max_history_bytes if max_history_bytes is None else max_history_bytes
    needed = (n_steps + 1) * d * d * 16 * 3
    if needed > limit:
        raise ConfigError(
            f"memory history needs {needed} bytes, limit is {limit}; use a coarser dt or shorter t_final",
            key="max_history_bytes",
        )

    markov = LindbladModel(hamiltonian=h, jumps=[lh])
    step = grid[1] - grid[0]
    decay = math.exp(-gamma * step)

    def propagate(x: np.ndarray) -> np.ndarray:
        return decay * propagate_operator(markov, x, step, n_sub)

    def rhs(eta: np.ndarray, memory: np.ndarray) -> np.ndarray:
        return hermitize(apply_generator(markov, eta) + 0.5 * gamma * commutator(lh, memory))

    eta = start.matrix.copy()
    memory = np.zeros_like(eta)
    source = commutator(lh, eta)
    flagged: List[int] = []
    kept_times = [0.0]
    kept = [start.matrix]
    for k in range(n_steps):
        carried = propagate(memory + 0.5 * step * source)
        slope = rhs(eta, memory)

        trial = eta + step * slope
        trial_memory = carried + 0.5 * step * commutator(lh, trial)
        eta = eta + 0.5 * step * (slope + rhs(trial, trial_memory))

        source = commutator(lh, eta)
        memory = carried + 0.5 * step * source
        _check_finite(eta, k + 1)

        n = k + 1
        if n % store_every == 0 or n == n_steps:
            lowest = float(np.linalg.eigvalsh(eta)[0])
            if lowest < -POSITIVITY_FLAG:
                flagged.append(n)
                logger.warning(
                    "Approximate master equation left the state space; stored state is projected",
                    extra={"flag": "positivity_loss", "step": n, "min_eigenvalue": lowest},
                )
            kept_times.append(float(grid[n]))
            kept.append(_project_batch(eta))
    return DensityTrajectory(
        times=np.asarray(kept_times), states=_stack_matrices(kept), flagged_steps=flagged
    )


def _check_channels(model: SSEModel, path: WienerPath) -> None:
    if path.n_channels != model.n_channels:
        raise NumericValidationError(
            f"path has {path.n_channels} channels, model has {model.n_channels} noise operators"
        )


def norm_process(traj: StateTrajectory, model: SSEModel) -> np.ndarray:
    """m_j(t) = 2 Re <psi_hat|R_j(t) psi_hat> at every stored time; shape (..., n, channels)"""
    nrm = np.linalg.norm(traj.states, axis=-1, keepdims=True)
    unit = traj.states / np.where(nrm > 0, nrm, 1.0)
    out = []
    for i, t in enumerate(traj.times):
        _, rs = model.operators(float(t))
        psi = unit[..., i, :]
        out.append(2.0 * np.real(np.einsum("...a,...ja->...j", psi.conj(), _apply_each(rs, psi))))
    return np.stack(out, axis=-2)


def exponential_norm(traj: StateTrajectory, model: SSEModel, path: WienerPath) -> np.ndarray:
    """
    ||psi0||^2 exp{sum_j [int m_j dW_j - 1/2 int m_j^2 ds]} as a left-point Ito sum

    The trajectory must be stored on every step of the path's grid.
    """
    if traj.times.shape != path.times.shape:
        raise NumericValidationError("trajectory must be stored on every step of the path")
    m = norm_process(traj, model)[..., :-1, :]
    dt = np.diff(path.times)[:, None]
    exponent = np.sum(m * path.increments - 0.5 * m**2 * dt, axis=-1)
    cumulative = np.concatenate(
        [np.zeros(exponent.shape[:-1] + (1,)), np.cumsum(exponent, axis=-1)], axis=-1
    )
    return traj.norms[..., :1] ** 2 * np.exp(cumulative)


def ensemble_density(traj: StateTrajectory, weighted: bool = False) -> DensityTrajectory:
    """
    Mean of |psi><psi| over the path axis at each stored time

    With weighted=True the unnormalized outer products are averaged (the
    linear-SSE reweighting) and the mean is divided by its trace; otherwise
    states are normalized first.
    """
    states = traj.states
    if states.ndim != 3:
        raise NumericValidationError("ensemble_density needs a batched trajectory (paths, times, dim)")
    if not weighted:
        states = states / np.linalg.norm(states, axis=-1, keepdims=True)
    outer = np.einsum("pta,ptb->tab", states, states.conj()) / states.shape[0]
    trace = np.real(np.trace(outer, axis1=-2, axis2=-1))
    return DensityTrajectory(times=traj.times, states=_project_batch(outer / trace[:, None, None]))


def mean_state(traj: DensityTrajectory) -> DensityTrajectory:
    """Average a batched density trajectory over its leading path axis"""
    if traj.states.ndim != 4:
        return traj
    return DensityTrajectory(
        times=traj.times, states=_project_batch(traj.states.mean(axis=0)), flagged_steps=traj.flagged_steps
    )
