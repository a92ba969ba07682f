import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qjh.errors import DomainError, NumericValidationError
from qjh.numkernel import (
    anticommutator,
    as_hermitian,
    as_matrix,
    commutator,
    dagger,
    expm_skew_hermitian,
    hermitize,
    hermitian_eig,
    logm_positive_definite,
    polar_unitary,
    unitarity_error,
)

from .helpers import SIGMA_X, SIGMA_Y, SIGMA_Z, random_hermitian, random_spd


class TestHermitianEig:
    def test_identity(self):
        eig = hermitian_eig(np.eye(3))
        np.testing.assert_allclose(eig.eigenvalues, [1.0, 1.0, 1.0])

    def test_diagonal_is_sorted_with_permuted_basis(self):
        eig = hermitian_eig(np.diag([2.0, 1.0]))
        np.testing.assert_allclose(eig.eigenvalues, [1.0, 2.0])
        np.testing.assert_allclose(np.abs(eig.eigenvectors), [[0.0, 1.0], [1.0, 0.0]], atol=1e-15)

    def test_pauli_x(self):
        np.testing.assert_allclose(hermitian_eig(SIGMA_X).eigenvalues, [-1.0, 1.0])

    def test_rejects_non_hermitian(self):
        with pytest.raises(NumericValidationError, match="not Hermitian"):
            hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))

    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 8))
    @settings(max_examples=40, deadline=None)
    def test_reconstruction_error(self, seed, d):
        a = random_hermitian(np.random.default_rng(seed), d)
        eig = hermitian_eig(a)
        assert np.linalg.norm(eig.reconstruct() - a) < 1e-10 * max(np.linalg.norm(a), 1.0)
        assert unitarity_error(eig.eigenvectors) < 1e-10


class TestExpm:
    def test_zero_time_is_identity(self, rng):
        u = expm_skew_hermitian(random_hermitian(rng, 4), 0.0)
        np.testing.assert_allclose(u, np.eye(4), atol=1e-14)

    def test_pauli_rotation(self):
        u = expm_skew_hermitian(SIGMA_X, -math.pi / 2)
        np.testing.assert_allclose(u, 1j * SIGMA_X, atol=1e-14)

    def test_diagonal(self):
        u = expm_skew_hermitian(np.diag([0.3, -1.2]), -1.0)
        np.testing.assert_allclose(u, np.diag(np.exp(1j * np.array([0.3, -1.2]))), atol=1e-14)

    @given(seed=st.integers(0, 2**32 - 1), t=st.floats(-5, 5))
    @settings(max_examples=30, deadline=None)
    def test_unitary_and_matches_scipy(self, seed, t):
        h = random_hermitian(np.random.default_rng(seed), 3)
        u = expm_skew_hermitian(h, t)
        assert unitarity_error(u) < 1e-10
        np.testing.assert_allclose(u, expm(-1j * t * h), atol=1e-8)


class TestLogm:
    def test_identity(self):
        np.testing.assert_allclose(logm_positive_definite(np.eye(3)), np.zeros((3, 3)), atol=1e-15)

    def test_diagonal(self):
        log = logm_positive_definite(np.diag([math.e, math.e**2]))
        np.testing.assert_allclose(log, np.diag([1.0, 2.0]), atol=1e-12)

    def test_round_trip(self, rng):
        a = random_spd(rng, 5)
        back = expm(logm_positive_definite(a))
        assert np.linalg.norm(back - a) < 1e-9 * np.linalg.norm(a)

    def test_negative_eigenvalue(self):
        with pytest.raises(DomainError, match="negative eigenvalue"):
            logm_positive_definite(np.diag([1.0, -0.5]))

    def test_zero_matrix(self):
        with pytest.raises(DomainError):
            logm_positive_definite(np.zeros((2, 2)))


class TestCommutators:
    def test_pauli_algebra(self):
        np.testing.assert_allclose(commutator(SIGMA_X, SIGMA_Y), 2j * SIGMA_Z)
        np.testing.assert_allclose(anticommutator(SIGMA_X, SIGMA_X), 2 * np.eye(2))

    def test_self_commutator_vanishes(self, rng):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        np.testing.assert_allclose(commutator(a, a), np.zeros((4, 4)), atol=1e-14)

    def test_dagger_acts_on_trailing_axes(self, rng):
        a = rng.normal(size=(4, 3, 3)) + 1j * rng.normal(size=(4, 3, 3))
        np.testing.assert_array_equal(dagger(a)[2], a[2].conj().T)

    def test_hermitize(self):
        a = np.array([[1.0, 2.0j], [0.0, 3.0]])
        np.testing.assert_allclose(hermitize(a), [[1.0, 1.0j], [-1.0j, 3.0]])
        np.testing.assert_array_equal(hermitize(SIGMA_Y), SIGMA_Y)

    def test_shape_mismatch(self):
        with pytest.raises(NumericValidationError, match="shape mismatch"):
            commutator(np.eye(2), np.eye(3))


def test_as_matrix_rejects_bad_input():
    with pytest.raises(NumericValidationError, match="square"):
        as_matrix(np.ones((2, 3)))
    with pytest.raises(NumericValidationError, match="non-finite"):
        as_matrix(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_as_hermitian_removes_roundoff():
    a = np.array([[1.0, 2.0 + 1e-14j], [2.0, 3.0]])
    h = as_hermitian(a)
    np.testing.assert_array_equal(h, h.conj().T)


def test_polar_unitary_repairs_drift(rng):
    u = expm_skew_hermitian(random_hermitian(rng, 4), 1.3)
    drifted = u + 1e-6 * rng.standard_normal((4, 4))
    assert unitarity_error(drifted) > 1e-8
    repaired = polar_unitary(drifted)
    assert unitarity_error(repaired) < 1e-12
    assert np.linalg.norm(repaired - u) < 1e-5
