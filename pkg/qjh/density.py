"""
Density matrices and information-geometric quantities.

Covers the eigen-ensemble form of a state, the quantum Fisher information
of a unitary family, quantum relative entropy and the Bogolubov-Kubo-Mori
metric obtained from its Hessian, the generalized covariance, and the
classical Fisher information of a Gaussian model.
"""

from typing import Callable, List, Sequence, Union

import numpy as np
from pydantic import Field, model_validator
from scipy import linalg as sla

from .errors import DomainError, NumericValidationError
from .numkernel import (
    NumericModel,
    anticommutator,
    as_hermitian,
    as_matrix,
    commutator,
    dagger,
    expm_skew_hermitian,
    hermitian_eig,
    hermitize,
)
from .utils.logging import get_logger
from .utils.validation import validate_probability_vector, validate_unitary

logger = get_logger(__name__)

TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-12
QFI_PAIR_FLOOR = 1e-12
RELATIVE_ENTROPY_FLOOR = 1e-15
BKM_PSD_TOL = 1e-5


class DensityMatrix(NumericModel):
    """Hermitian, positive semidefinite, unit-trace matrix"""

    matrix: np.ndarray

    @model_validator(mode="after")
    def check_state(self) -> "DensityMatrix":
        m = as_hermitian(self.matrix, tol=1e-10)
        trace = float(np.trace(m).real)
        if abs(trace - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {trace!r}, not 1")
        lowest = float(np.linalg.eigvalsh(m)[0])
        if lowest < -POSITIVITY_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {lowest:.3e}")
        self.matrix = m
        return self

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(matrix=np.eye(dim, dtype=complex) / dim)

    @classmethod
    def pure(cls, psi: Sequence[complex]) -> "DensityMatrix":
        """|psi><psi| / <psi|psi>"""
        v = np.asarray(psi, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(matrix=np.outer(v, v.conj()))

    @classmethod
    def from_diagonal(cls, probabilities: Sequence[float]) -> "DensityMatrix":
        return cls(matrix=np.diag(np.asarray(probabilities, dtype=complex)))


StateLike = Union[DensityMatrix, np.ndarray]


def _matrix_of(state: StateLike) -> np.ndarray:
    if isinstance(state, DensityMatrix):
        return state.matrix
    return as_matrix(state)


class EigenEnsemble(NumericModel):
    """Probabilities lambda_i with orthonormal states |psi_i> as columns"""

    probabilities: np.ndarray
    states: np.ndarray

    @model_validator(mode="after")
    def check_ensemble(self) -> "EigenEnsemble":
        valid, message = validate_probability_vector(self.probabilities)
        if not valid:
            raise ValueError(message)
        valid, message = validate_unitary(self.states, tol=1e-10)
        if not valid:
            raise ValueError(message)
        return self

    def reconstruct(self) -> np.ndarray:
        """sum_i lambda_i |psi_i><psi_i|"""
        v = self.states
        return (v * self.probabilities[None, :]) @ dagger(v)


class UnitaryFamily(NumericModel):
    """rho_theta = U_theta rho_0 U_theta^H with U_theta = exp(-i theta A)"""

    generator: np.ndarray
    base_state: DensityMatrix

    @model_validator(mode="after")
    def check_family(self) -> "UnitaryFamily":
        self.generator = as_hermitian(self.generator)
        if self.generator.shape[0] != self.base_state.dim:
            raise ValueError("generator and base state dimensions differ")
        return self

    def unitary(self, theta: float) -> np.ndarray:
        return expm_skew_hermitian(self.generator, theta)

    def state(self, theta: float) -> DensityMatrix:
        u = self.unitary(theta)
        return DensityMatrix(matrix=hermitize(u @ self.base_state.matrix @ dagger(u)))


class DensityTrajectory(NumericModel):
    """Density matrices on a time grid; ``flagged_steps`` lists repaired steps"""

    times: np.ndarray
    states: np.ndarray
    flagged_steps: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_lengths(self) -> "DensityTrajectory":
        if self.states.shape[-3] != self.times.shape[0]:
            raise ValueError("one state per time point is required")
        return self

    @property
    def final(self) -> DensityMatrix:
        return DensityMatrix(matrix=self.states[..., -1, :, :])

    def at(self, index: int) -> DensityMatrix:
        return DensityMatrix(matrix=self.states[index])

    def to_rows(self) -> tuple[list[str], list[list[float]]]:
        """Header and rows: time, then real/imag part of every entry"""
        d = self.states.shape[-1]
        header = ["time"]
        for j in range(d):
            for k in range(d):
                header += [f"re_{j}{k}", f"im_{j}{k}"]
        rows = []
        for t, rho in zip(self.times, self.states):
            flat = rho.reshape(-1)
            row = [float(t)]
            for z in flat:
                row += [float(z.real), float(z.imag)]
            rows.append(row)
        return header, rows


def project_to_density(a: np.ndarray) -> DensityMatrix:
    """
    Clamp the spectrum of a Hermitian matrix at zero and renormalize

    Args:
        a: Hermitian matrix

    Returns:
        Nearest valid density matrix in the clamp-and-rescale sense

    Raises:
        DomainError: if no eigenvalue is positive
    """
    eig = hermitian_eig(np.asarray(a), tol=1e-10)
    p = np.clip(eig.eigenvalues, 0.0, None)
    total = float(np.sum(p))
    if total <= 0.0:
        raise DomainError("spectrum has no positive part; cannot normalize")
    p = p / total
    v = eig.eigenvectors
    return DensityMatrix(matrix=hermitize((v * p[None, :]) @ dagger(v)))


def eigen_ensemble(rho: StateLike) -> EigenEnsemble:
    """Eigen-ensemble form rho = sum_i lambda_i |psi_i><psi_i|"""
    eig = hermitian_eig(_matrix_of(rho))
    p = np.clip(eig.eigenvalues, 0.0, None)
    return EigenEnsemble(probabilities=p / np.sum(p), states=eig.eigenvectors)


def trace_distance(rho: StateLike, sigma: StateLike) -> float:
    """1/2 ||rho - sigma||_1"""
    diff = hermitize(_matrix_of(rho) - _matrix_of(sigma))
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def qfim(rho: StateLike, h: np.ndarray) -> float:
    """
    Quantum Fisher information of the family generated by H

    J = sum_i 4 p_i Var_i(H) - sum_{i!=j} 8 p_i p_j / (p_i + p_j) |<psi_i|H|psi_j>|^2,
    where pairs with p_i + p_j below 1e-12 are skipped.

    Args:
        rho: State
        h: Hermitian generator

    Returns:
        Nonnegative scalar QFI
    """
    ens = eigen_ensemble(rho)
    gen = as_hermitian(h)
    v = ens.states
    p = ens.probabilities

    h_eig = dagger(v) @ gen @ v
    h2_diag = np.real(np.diagonal(dagger(v) @ (gen @ gen) @ v))
    variances = h2_diag - np.real(np.diagonal(h_eig)) ** 2
    total = float(np.sum(4.0 * p * variances))

    pair_sum = p[:, None] + p[None, :]
    keep = pair_sum >= QFI_PAIR_FLOOR
    np.fill_diagonal(keep, False)
    weights = np.zeros_like(pair_sum)
    weights[keep] = 8.0 * (p[:, None] * p[None, :])[keep] / pair_sum[keep]
    total -= float(np.sum(weights * np.abs(h_eig) ** 2))
    return max(total, 0.0)


def generator_from_family(
    unitary: Callable[[float], np.ndarray], theta0: float, h: float = 1e-5
) -> np.ndarray:
    """
    H = i (d/dtheta U^H) U at theta0 by central differences, Hermitized

    For U = exp(-i theta A) this returns -A.

    Args:
        unitary: theta -> unitary matrix
        theta0: Evaluation point
        h: Central-difference step

    Returns:
        Hermitian generator

    Raises:
        NumericValidationError: if a sampled matrix is not unitary
    """
    samples = [as_matrix(unitary(theta0 + s)) for s in (h, -h, 0.0)]
    for u in samples:
        valid, message = validate_unitary(u)
        if not valid:
            raise NumericValidationError(message)
    u_plus, u_minus, u0 = samples
    d_udag = (dagger(u_plus) - dagger(u_minus)) / (2.0 * h)
    return hermitize(1j * d_udag @ u0)


def quantum_relative_entropy(rho: StateLike, sigma: StateLike) -> float:
    """
    D(rho || sigma) = tr rho (log rho - log sigma), natural log, 0 log 0 = 0

    Returns +inf (and logs a warning) when rho has weight on the kernel of sigma.
    """
    r_spec = hermitian_eig(_matrix_of(rho), tol=1e-10)
    s_spec = hermitian_eig(_matrix_of(sigma), tol=1e-10)
    p = np.clip(r_spec.eigenvalues, 0.0, None)
    q = np.clip(s_spec.eigenvalues, 0.0, None)

    # weight[k] = <phi_k| rho |phi_k>
    overlap = np.abs(dagger(r_spec.eigenvectors) @ s_spec.eigenvectors) ** 2
    weight = p @ overlap

    support = p > RELATIVE_ENTROPY_FLOOR
    entropy_term = float(np.sum(p[support] * np.log(p[support])))

    dead = q < RELATIVE_ENTROPY_FLOOR
    if np.any(weight[dead] > RELATIVE_ENTROPY_FLOOR):
        logger.warning(
            "Relative entropy support violation",
            extra={"flag": "support_violation", "lost_weight": float(np.sum(weight[dead]))},
        )
        return float("inf")
    cross_term = float(np.sum(weight[~dead] * np.log(q[~dead])))
    return max(entropy_term - cross_term, 0.0)


def bkm_metric(
    family: Callable[[np.ndarray], StateLike], theta0: Sequence[float], h: float = 1e-3
) -> np.ndarray:
    """
    Bogolubov-Kubo-Mori metric as the Hessian of theta -> D(rho_theta0 || rho_theta)

    Second-order central differences; the result is symmetrized. An
    eigenvalue below -1e-5 (relative) is logged as an indefinite result,
    which usually means h is too large.

    Args:
        family: theta vector -> state
        theta0: Base point
        h: Difference step

    Returns:
        Symmetric matrix of shape (k, k)
    """
    base = np.atleast_1d(np.asarray(theta0, dtype=float))
    k = base.size
    rho0 = _matrix_of(family(base))

    def divergence(shift: np.ndarray) -> float:
        return quantum_relative_entropy(rho0, family(base + shift))

    f0 = divergence(np.zeros(k))
    eye = np.eye(k) * h
    metric = np.zeros((k, k))
    for j in range(k):
        metric[j, j] = (divergence(eye[j]) - 2.0 * f0 + divergence(-eye[j])) / h**2
        for m in range(j + 1, k):
            mixed = (
                divergence(eye[j] + eye[m])
                - divergence(eye[j] - eye[m])
                - divergence(-eye[j] + eye[m])
                + divergence(-eye[j] - eye[m])
            ) / (4.0 * h**2)
            metric[j, m] = metric[m, j] = mixed

    metric = 0.5 * (metric + metric.T)
    lowest = float(np.linalg.eigvalsh(metric)[0])
    if lowest < -BKM_PSD_TOL * max(1.0, float(np.max(np.abs(metric)))):
        logger.warning(
            "BKM metric is indefinite; reduce the difference step",
            extra={"flag": "indefinite_metric", "min_eigenvalue": lowest, "step": h},
        )
    return metric


def generalized_covariance(rho: StateLike, a: np.ndarray, b: np.ndarray) -> float:
    """kappa_rho(A, B) = 1/2 tr(rho {A, B})"""
    m = _matrix_of(rho)
    return 0.5 * float(np.trace(m @ anticommutator(as_hermitian(a), as_hermitian(b))).real)


def unitary_family_derivative(family: UnitaryFamily, theta: float) -> np.ndarray:
    """
    d/dtheta rho_theta = i U_theta [H, rho_0] U_theta^H with H = -A

    The generator sign follows ``generator_from_family``; the result is
    traceless and Hermitian.
    """
    u = family.unitary(theta)
    h = -family.generator
    return hermitize(1j * u @ commutator(h, family.base_state.matrix) @ dagger(u))


def classical_fim(s: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """
    Fisher information S^T Sigma^-1 S of a Gaussian model with sensitivity S

    Args:
        s: Sensitivity matrix (n x k); a vector is treated as one column
        sigma: Symmetric positive definite covariance (n x n)

    Returns:
        Symmetric (k x k) matrix

    Raises:
        DomainError: if Sigma is not symmetric positive definite
    """
    sens = np.asarray(s, dtype=float)
    if sens.ndim == 1:
        sens = sens[:, None]
    cov = np.atleast_2d(np.asarray(sigma, dtype=float))
    if cov.shape != (sens.shape[0], sens.shape[0]):
        raise NumericValidationError(
            f"covariance shape {cov.shape} does not match sensitivity rows {sens.shape[0]}"
        )
    if not np.allclose(cov, cov.T, rtol=1e-12, atol=1e-12):
        raise DomainError("covariance is not symmetric")
    try:
        factor = sla.cho_factor(cov)
    except np.linalg.LinAlgError as e:
        raise DomainError(f"covariance is not positive definite: {e}") from e
    fim = sens.T @ sla.cho_solve(factor, sens)
    return 0.5 * (fim + fim.T)
