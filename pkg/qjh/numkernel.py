"""
Dense complex linear algebra shared by every QJH module.

Matrices are plain ``numpy`` arrays; the trailing two axes are the matrix
axes so most helpers also accept stacks. The eigendecomposition of a
Hermitian matrix is the single primitive behind the matrix exponential and
logarithm, which keeps unitarity and Hermiticity exact by construction.
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import DomainError, NumericValidationError
from .utils.validation import (
    validate_conformable,
    validate_finite,
    validate_hermitian,
    validate_square,
)

HERMITIAN_TOL = 1e-12
LOG_REJECT_FLOOR = 1e-300


class NumericModel(BaseModel):
    """Base for models that carry numpy arrays"""

    model_config = ConfigDict(arbitrary_types_allowed=True)


class Spectrum(NumericModel):
    """Eigenvalues (ascending) and the unitary matrix of eigenvector columns"""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @model_validator(mode="after")
    def check_shapes(self) -> "Spectrum":
        if self.eigenvectors.shape[-1] != self.eigenvalues.shape[-1]:
            raise ValueError("one eigenvector column per eigenvalue is required")
        return self

    def reconstruct(self) -> np.ndarray:
        """V diag(lambda) V^H"""
        v = self.eigenvectors
        return (v * self.eigenvalues[..., None, :]) @ dagger(v)


def as_matrix(a: np.ndarray) -> np.ndarray:
    """Coerce to a finite complex square matrix (or stack)"""
    m = np.asarray(a, dtype=complex)
    for check in (validate_square, validate_finite):
        valid, message = check(m)
        if not valid:
            raise NumericValidationError(message)
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose of the trailing two axes"""
    return np.swapaxes(a, -1, -2).conj()


def hermitize(a: np.ndarray) -> np.ndarray:
    """(A + A^H) / 2"""
    return 0.5 * (a + dagger(a))


def as_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate Hermiticity and return the exactly Hermitian part"""
    m = as_matrix(a)
    valid, message = validate_hermitian(m, tol)
    if not valid:
        raise NumericValidationError(message)
    return hermitize(m)


def frobenius_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def unitarity_error(u: np.ndarray) -> float:
    """Largest ||U^H U - I||_F over a stack"""
    n = u.shape[-1]
    return float(np.max(np.linalg.norm(dagger(u) @ u - np.eye(n), axis=(-2, -1))))


def hermitian_eig(a: np.ndarray, tol: float = HERMITIAN_TOL) -> Spectrum:
    """
    Eigendecomposition of a Hermitian matrix

    Args:
        a: Hermitian matrix (or stack)
        tol: Hermiticity tolerance relative to max(1, max|a_ij|)

    Returns:
        Spectrum with ascending eigenvalues

    Raises:
        NumericValidationError: if the input is not Hermitian within tol
    """
    h = as_hermitian(a, tol)
    w, v = np.linalg.eigh(h)
    return Spectrum(eigenvalues=w, eigenvectors=v)


def expm_skew_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """
    exp(-i t H) for Hermitian H, via eigendecomposition

    Args:
        h: Hermitian generator (or stack)
        t: Time (may be negative)

    Returns:
        Unitary matrix
    """
    eig = hermitian_eig(h)
    phases = np.exp(-1j * t * eig.eigenvalues)
    v = eig.eigenvectors
    return (v * phases[..., None, :]) @ dagger(v)


def logm_positive_definite(a: np.ndarray, floor: Optional[float] = None) -> np.ndarray:
    """
    Principal logarithm of a positive definite Hermitian matrix

    Eigenvalues below ``floor`` are raised to ``floor`` before the log; the
    default floor is 1e-12 * trace / dim.

    Args:
        a: Hermitian positive (semi)definite matrix
        floor: Eigenvalue floor

    Returns:
        Hermitian logarithm

    Raises:
        DomainError: if an eigenvalue is negative beyond the floor or the
            floored spectrum still touches zero
    """
    eig = hermitian_eig(a)
    w = eig.eigenvalues
    dim = w.shape[-1]
    if floor is None:
        floor = 1e-12 * float(np.sum(w)) / dim

    if np.any(w < -abs(floor)):
        raise DomainError(f"matrix has negative eigenvalue {float(np.min(w)):.3e}")
    w = np.maximum(w, floor)
    if np.any(w <= LOG_REJECT_FLOOR):
        raise DomainError("matrix is singular; logarithm undefined")

    v = eig.eigenvectors
    return hermitize((v * np.log(w)[..., None, :]) @ dagger(v))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """AB - BA"""
    valid, message = validate_conformable(np.asarray(a), np.asarray(b))
    if not valid:
        raise NumericValidationError(message)
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """AB + BA"""
    valid, message = validate_conformable(np.asarray(a), np.asarray(b))
    if not valid:
        raise NumericValidationError(message)
    return a @ b + b @ a


def polar_unitary(u: np.ndarray) -> np.ndarray:
    """Closest unitary (polar factor) of a matrix or stack, via SVD"""
    w, _, vh = np.linalg.svd(u)
    return w @ vh
