"""
Validation utilities for QJH numerics

Each check returns (valid, error_message) and never raises; callers decide
which exception to raise.
"""

from typing import Optional, Tuple

import numpy as np


def validate_square(a: np.ndarray) -> Tuple[bool, Optional[str]]:
    """
    Validate that the trailing two axes form a square matrix

    Args:
        a: Array to check

    Returns:
        Tuple of (valid, error_message)
    """
    if a.ndim < 2:
        return False, f"expected a matrix, got array of shape {a.shape}"
    if a.shape[-1] != a.shape[-2]:
        return False, f"expected a square matrix, got shape {a.shape}"
    return True, None


def validate_finite(a: np.ndarray) -> Tuple[bool, Optional[str]]:
    """Validate that every entry is finite"""
    if not np.all(np.isfinite(a)):
        return False, "matrix contains non-finite entries"
    return True, None


def validate_hermitian(a: np.ndarray, tol: float = 1e-12) -> Tuple[bool, Optional[str]]:
    """
    Validate Hermiticity within tol relative to max(1, |a|)

    Args:
        a: Square matrix (or stack of matrices)
        tol: Tolerance on the anti-Hermitian part and on diagonal imaginary parts

    Returns:
        Tuple of (valid, error_message)
    """
    valid, message = validate_square(a)
    if not valid:
        return valid, message

    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    skew = float(np.max(np.abs(a - np.swapaxes(a, -1, -2).conj()))) if a.size else 0.0
    if skew > tol * scale:
        return False, f"matrix is not Hermitian (max |A - A^H| = {skew:.3e})"

    diag_imag = float(np.max(np.abs(np.diagonal(a, axis1=-2, axis2=-1).imag))) if a.size else 0.0
    if diag_imag > tol * scale:
        return False, f"Hermitian diagonal has imaginary part {diag_imag:.3e}"
    return True, None


def validate_unitary(u: np.ndarray, tol: float = 1e-8) -> Tuple[bool, Optional[str]]:
    """
    Validate ||U^H U - I|| < tol (Frobenius, per matrix)

    Args:
        u: Square matrix (or stack of matrices)
        tol: Allowed deviation from unitarity

    Returns:
        Tuple of (valid, error_message)
    """
    valid, message = validate_square(u)
    if not valid:
        return valid, message

    n = u.shape[-1]
    gram = np.swapaxes(u, -1, -2).conj() @ u
    err = float(np.max(np.linalg.norm(gram - np.eye(n), axis=(-2, -1))))
    if err > tol:
        return False, f"matrix is not unitary (||U^H U - I|| = {err:.3e})"
    return True, None


def validate_conformable(a: np.ndarray, b: np.ndarray) -> Tuple[bool, Optional[str]]:
    """Validate that two square matrices have the same shape"""
    for m in (a, b):
        valid, message = validate_square(m)
        if not valid:
            return valid, message
    if a.shape[-2:] != b.shape[-2:]:
        return False, f"shape mismatch: {a.shape} vs {b.shape}"
    return True, None


def validate_probability_vector(p: np.ndarray, tol: float = 1e-12) -> Tuple[bool, Optional[str]]:
    """
    Validate nonnegative entries summing to one

    Args:
        p: Candidate probability vector
        tol: Tolerance on negativity and on the sum

    Returns:
        Tuple of (valid, error_message)
    """
    if p.ndim != 1:
        return False, "probabilities must be a vector"
    if np.any(p < -tol):
        return False, f"negative probability {float(p.min()):.3e}"
    total = float(np.sum(p))
    if abs(total - 1.0) > tol * max(1, p.size):
        return False, f"probabilities sum to {total!r}, not 1"
    return True, None
