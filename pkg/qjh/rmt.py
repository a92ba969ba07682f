"""
Random-matrix ensembles: GUE sampling, the incremental circular-unitary walk
U <- U exp(i sqrt(dtau) M) with GUE M, and eigenphase spacing statistics.

GUE scaling: off-diagonal real and imaginary parts N(0, 1/(2N)), diagonal
N(0, 1/N), so E[(1/N) tr M^2] = 1.
"""

import math
from typing import Optional, Tuple

import numpy as np
from pydantic import Field, model_validator
from scipy.stats import unitary_group

from .errors import NumericValidationError
from .numkernel import NumericModel, expm_skew_hermitian, hermitize, polar_unitary, unitarity_error
from .utils.logging import get_logger
from .utils.validation import validate_unitary

logger = get_logger(__name__)

UNITARITY_TOL = 1e-8
REUNITARIZE_EVERY = 100
MIN_SPACING_SETS = 1000


class GUESample(NumericModel):
    """One GUE matrix, or a stack of them"""

    dim: int = Field(..., ge=1)
    matrix: np.ndarray


class UnitaryWalkState(NumericModel):
    """Position of a circular-unitary walk (or a stack of independent walks)"""

    unitary: np.ndarray
    tau: float = 0.0
    dtau: float = Field(..., ge=0)
    steps: int = 0

    @model_validator(mode="after")
    def check_unitary(self) -> "UnitaryWalkState":
        valid, message = validate_unitary(self.unitary, UNITARITY_TOL)
        if not valid:
            raise ValueError(message)
        return self

    @property
    def dim(self) -> int:
        return self.unitary.shape[-1]

    @classmethod
    def identity(cls, dim: int, dtau: float, n_walks: Optional[int] = None) -> "UnitaryWalkState":
        eye = np.eye(dim, dtype=complex)
        if n_walks is not None:
            eye = np.broadcast_to(eye, (n_walks, dim, dim)).copy()
        return cls(unitary=eye, dtau=dtau)


class CUEWalkRecord(NumericModel):
    """Eigenphases recorded along a walk; phases have shape (..., n_records, N)"""

    taus: np.ndarray
    phases: np.ndarray
    final: UnitaryWalkState


class SpacingHistogram(NumericModel):
    """Unfolded nearest-neighbour spacings and their density estimate"""

    edges: np.ndarray
    density: np.ndarray
    spacings: np.ndarray
    n_sets: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def mean_spacing(self) -> float:
        return float(np.mean(self.spacings))

    def to_rows(self) -> tuple[list[str], list[list[float]]]:
        return ["bin_center", "density"], [[float(c), float(p)] for c, p in zip(self.centers, self.density)]


def sample_gue(n: int, rng: np.random.Generator, size: Optional[int] = None) -> GUESample:
    """M = (A + A^H) / (2 sqrt(N)) with A a standard complex Gaussian matrix"""
    if n < 1:
        raise NumericValidationError(f"GUE dimension must be >= 1, got {n}")
    shape = (n, n) if size is None else (size, n, n)
    a = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    m = hermitize(a) / math.sqrt(n)
    return GUESample(dim=n, matrix=m)


def cue_increment(n: int, dtau: float, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """exp(i sqrt(dtau) M) for a fresh GUE draw M"""
    m = sample_gue(n, rng, size).matrix
    return expm_skew_hermitian(m, -math.sqrt(dtau))


def cue_step(state: UnitaryWalkState, rng: np.random.Generator) -> UnitaryWalkState:
    """
    Advance the walk by one step of size state.dtau

    The product is re-unitarized through its polar factor every 100 steps,
    or sooner if the unitarity error exceeds 1e-8. A zero step returns the
    state unchanged.
    """
    if state.dtau == 0.0:
        return state
    batch = state.unitary.shape[0] if state.unitary.ndim == 3 else None
    u = state.unitary @ cue_increment(state.dim, state.dtau, rng, batch)
    steps = state.steps + 1
    if steps % REUNITARIZE_EVERY == 0 or unitarity_error(u) > UNITARITY_TOL:
        u = polar_unitary(u)
    return UnitaryWalkState(unitary=u, tau=state.tau + state.dtau, dtau=state.dtau, steps=steps)


def run_cue_walk(
    n: int,
    dtau: float,
    n_steps: int,
    rng: np.random.Generator,
    n_walks: Optional[int] = None,
    record_every: int = 1,
    burn_in: int = 0,
    start: Optional[UnitaryWalkState] = None,
) -> CUEWalkRecord:
    """
    Run one walk (or a stack of independent walks) from the identity

    After ``burn_in`` unrecorded steps, eigenphases are recorded every
    ``record_every`` steps for ``n_steps`` further steps.
    """
    if record_every < 1:
        raise NumericValidationError("record_every must be >= 1")
    state = start if start is not None else UnitaryWalkState.identity(n, dtau, n_walks)
    for _ in range(burn_in):
        state = cue_step(state, rng)

    taus = [state.tau]
    phases = [eigenphases(state.unitary)]
    for k in range(1, n_steps + 1):
        state = cue_step(state, rng)
        if k % record_every == 0:
            taus.append(state.tau)
            phases.append(eigenphases(state.unitary))
    return CUEWalkRecord(taus=np.asarray(taus), phases=np.stack(phases, axis=-2), final=state)


def eigenphases(u: np.ndarray, tol: float = UNITARITY_TOL) -> np.ndarray:
    """
    Eigenphases of a unitary matrix in (-pi, pi], ascending

    Raises:
        NumericValidationError: if u is not unitary within tol
    """
    m = np.asarray(u, dtype=complex)
    valid, message = validate_unitary(m, tol)
    if not valid:
        raise NumericValidationError(message)
    theta = np.angle(np.linalg.eigvals(m))
    theta = np.where(theta <= -math.pi, math.pi, theta)
    return np.sort(theta, axis=-1)


def spacing_statistics(
    phases: np.ndarray,
    bins: int = 40,
    upper: float = 4.0,
    min_sets: int = MIN_SPACING_SETS,
) -> SpacingHistogram:
    """
    Histogram of unfolded nearest-neighbour eigenphase spacings

    Gaps include the wrap-around gap, so each set of N phases gives N
    spacings with mean exactly 2 pi / N; spacings are multiplied by N / 2 pi.

    Args:
        phases: Phase sets, shape (..., N), N >= 2
        bins: Number of histogram bins on [0, upper]
        upper: Right edge of the histogram
        min_sets: Minimum number of phase sets

    Raises:
        NumericValidationError: with fewer than min_sets sets or N < 2
    """
    sets = np.asarray(phases, dtype=float)
    n = sets.shape[-1]
    sets = np.sort(sets.reshape(-1, n), axis=-1)
    if n < 2:
        raise NumericValidationError("spacings need at least two phases per set")
    if sets.shape[0] < min_sets:
        raise NumericValidationError(f"need at least {min_sets} phase sets, got {sets.shape[0]}")

    wrapped = np.concatenate([sets, sets[:, :1] + 2.0 * math.pi], axis=1)
    spacings = (np.diff(wrapped, axis=1) * n / (2.0 * math.pi)).reshape(-1)
    counts, edges = np.histogram(spacings, bins=bins, range=(0.0, upper))
    width = edges[1] - edges[0]
    density = counts / (spacings.size * width)
    return SpacingHistogram(edges=edges, density=density, spacings=spacings, n_sets=sets.shape[0])


def sample_cue_direct(n: int, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Haar-distributed unitary (QR of a complex Gaussian with phase correction)"""
    if n < 1:
        raise NumericValidationError(f"dimension must be >= 1, got {n}")
    if n == 1:
        shape: Tuple[int, ...] = (1, 1) if size is None else (size, 1, 1)
        return np.exp(1j * rng.uniform(-math.pi, math.pi, size=shape))
    draws = unitary_group.rvs(n, size=1 if size is None else size, random_state=rng)
    if size is not None and size == 1:
        draws = draws[None, ...]
    return draws


def unitary_surmise(s: np.ndarray) -> np.ndarray:
    """Wigner surmise for unitary symmetry, (32 / pi^2) s^2 exp(-4 s^2 / pi)"""
    x = np.asarray(s, dtype=float)
    return (32.0 / math.pi**2) * x**2 * np.exp(-4.0 * x**2 / math.pi)


def histogram_distance(hist: SpacingHistogram, reference: np.ndarray) -> float:
    """L1 distance between the binned density and a reference evaluated at bin centers"""
    width = np.diff(hist.edges)
    return float(np.sum(np.abs(hist.density - np.asarray(reference, dtype=float)) * width))


def cue2_spacing_density(s: np.ndarray) -> np.ndarray:
    """
    Exact unfolded spacing density of CUE(2), sin^2(pi s / 2) on [0, 2]

    The eigenphase gap of a Haar 2x2 unitary has density sin^2(theta / 2) / pi
    on [0, 2 pi); unfolding by the mean gap pi gives the form above.
    """
    x = np.asarray(s, dtype=float)
    return np.where((x >= 0.0) & (x <= 2.0), np.sin(0.5 * math.pi * x) ** 2, 0.0)


def reference_spacing_density(n: int, s: np.ndarray) -> Tuple[str, np.ndarray]:
    """Exact law for N = 2, the unitary Wigner surmise otherwise; returns (name, density)"""
    if n == 2:
        return "cue2-exact", cue2_spacing_density(s)
    return "wigner-surmise", unitary_surmise(s)


def histogram_sup_distance(hist: SpacingHistogram, reference: np.ndarray) -> float:
    """Largest absolute gap between the binned density and a reference"""
    return float(np.max(np.abs(hist.density - np.asarray(reference, dtype=float))))
