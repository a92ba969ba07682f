import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from qjh.density import (
    DensityMatrix,
    DensityTrajectory,
    UnitaryFamily,
    bkm_metric,
    classical_fim,
    eigen_ensemble,
    generalized_covariance,
    generator_from_family,
    project_to_density,
    qfim,
    quantum_relative_entropy,
    trace_distance,
    unitary_family_derivative,
)
from qjh.errors import DomainError
from qjh.numkernel import expm_skew_hermitian

from .helpers import SIGMA_X, SIGMA_Z, random_density, random_hermitian


class TestDensityMatrix:
    def test_rejects_bad_trace(self):
        with pytest.raises(ValidationError, match="trace"):
            DensityMatrix(matrix=np.diag([0.5, 0.6]))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValidationError, match="negative eigenvalue"):
            DensityMatrix(matrix=np.diag([1.1, -0.1]))

    def test_constructors(self):
        np.testing.assert_allclose(DensityMatrix.maximally_mixed(3).matrix, np.eye(3) / 3)
        plus = DensityMatrix.pure([1.0, 1.0])
        np.testing.assert_allclose(plus.matrix, np.full((2, 2), 0.5))
        assert DensityMatrix.from_diagonal([0.25, 0.75]).dim == 2


class TestProjection:
    def test_valid_states_unchanged(self):
        for rho in (np.eye(3) / 3, np.diag([1.0, 0.0])):
            np.testing.assert_allclose(project_to_density(rho).matrix, rho, atol=1e-15)

    def test_clamp_and_renormalize(self):
        projected = project_to_density(np.diag([0.5, 0.6, -0.1]))
        np.testing.assert_allclose(np.diag(projected.matrix).real, [0.5 / 1.1, 0.6 / 1.1, 0.0], atol=1e-15)

    def test_no_positive_part(self):
        with pytest.raises(DomainError, match="no positive part"):
            project_to_density(-np.eye(2))

    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 6))
    @settings(max_examples=40, deadline=None)
    def test_projection_is_a_state(self, seed, d):
        a = random_hermitian(np.random.default_rng(seed), d) + 0.5 * np.eye(d)
        if np.linalg.eigvalsh(a)[-1] <= 0:
            return
        rho = project_to_density(a).matrix
        assert abs(np.trace(rho).real - 1.0) < 1e-12
        assert np.linalg.eigvalsh(rho)[0] > -1e-12


class TestEigenEnsemble:
    def test_maximally_mixed(self):
        np.testing.assert_allclose(eigen_ensemble(np.eye(2) / 2).probabilities, [0.5, 0.5])

    def test_pure(self):
        np.testing.assert_allclose(eigen_ensemble(np.diag([1.0, 0.0])).probabilities, [0.0, 1.0], atol=1e-15)

    def test_reconstruction(self, rng):
        rho = random_density(rng, 5)
        assert np.linalg.norm(eigen_ensemble(rho).reconstruct() - rho) < 1e-10


class TestQFI:
    def test_maximally_mixed_is_zero(self, rng):
        assert qfim(np.eye(3) / 3, random_hermitian(rng, 3)) < 1e-10

    def test_pure_state_is_four_variance(self):
        assert qfim(np.diag([1.0, 0.0]), SIGMA_X) == pytest.approx(4.0, abs=1e-12)

    def test_commuting_generator(self):
        assert qfim(np.diag([0.3, 0.7]), SIGMA_Z) == pytest.approx(0.0, abs=1e-12)

    def test_mixed_qubit_closed_form(self):
        # (p - q)^2 * 4 for sigma_x on diag(p, q)
        assert qfim(np.diag([0.8, 0.2]), SIGMA_X) == pytest.approx(4 * 0.6**2, rel=1e-12)

    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 5), rank=st.integers(1, 5))
    @settings(max_examples=40, deadline=None)
    def test_bounded_by_pure_state_value(self, seed, d, rank):
        gen = np.random.default_rng(seed)
        rho = random_density(gen, d, min(rank, d))
        h = random_hermitian(gen, d)
        value = qfim(rho, h)
        variance = np.trace(rho @ h @ h).real - np.trace(rho @ h).real ** 2
        assert value >= -1e-10
        assert value <= 4 * variance + 1e-9


class TestGenerator:
    def test_constant_family(self, rng):
        u0 = expm_skew_hermitian(random_hermitian(rng, 3), 0.7)
        np.testing.assert_allclose(generator_from_family(lambda t: u0, 0.2), np.zeros((3, 3)), atol=1e-9)

    def test_sigma_z_rotation(self):
        h = generator_from_family(lambda t: expm_skew_hermitian(SIGMA_Z, t), 0.4)
        np.testing.assert_allclose(h, -SIGMA_Z, atol=1e-8)

    def test_result_is_hermitian(self, rng):
        a, b = random_hermitian(rng, 3), random_hermitian(rng, 3)
        h = generator_from_family(lambda t: expm_skew_hermitian(a, t) @ expm_skew_hermitian(b, t * t), 0.3)
        np.testing.assert_array_equal(h, h.conj().T)


class TestRelativeEntropy:
    def test_identical_states(self, rng):
        rho = random_density(rng, 4)
        assert quantum_relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-10)

    def test_pure_against_mixed(self):
        assert quantum_relative_entropy(np.diag([1.0, 0.0]), np.eye(2) / 2) == pytest.approx(math.log(2), abs=1e-12)

    def test_mixed_against_biased(self):
        expected = 0.5 * (math.log(0.5 / 0.9) + math.log(0.5 / 0.1))
        assert quantum_relative_entropy(np.eye(2) / 2, np.diag([0.9, 0.1])) == pytest.approx(expected, abs=1e-12)

    def test_support_violation_is_infinite(self, caplog):
        assert math.isinf(quantum_relative_entropy(np.eye(2) / 2, np.diag([1.0, 0.0])))
        assert any("support violation" in r.getMessage() for r in caplog.records)

    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 4))
    @settings(max_examples=30, deadline=None)
    def test_nonnegative(self, seed, d):
        gen = np.random.default_rng(seed)
        assert quantum_relative_entropy(random_density(gen, d), random_density(gen, d)) >= 0.0


class TestBKM:
    def test_constant_family(self):
        rho = np.diag([0.7, 0.3])
        np.testing.assert_allclose(bkm_metric(lambda th: rho, [0.1, 0.2]), np.zeros((2, 2)), atol=1e-8)

    def test_qubit_rotation(self):
        rho0 = np.diag([0.8, 0.2]).astype(complex)

        def family(theta):
            u = expm_skew_hermitian(SIGMA_X, theta[0])
            return u @ rho0 @ u.conj().T

        metric = bkm_metric(family, [0.0])
        # sum_{i != j} |A_ij|^2 (p_i - p_j)(ln p_i - ln p_j)
        expected = 2 * 0.6 * math.log(4.0)
        assert metric[0, 0] == pytest.approx(expected, rel=1e-4)

    def test_grid_fit_oracle(self):
        rho0 = np.diag([0.8, 0.2]).astype(complex)

        def family(theta):
            u = expm_skew_hermitian(SIGMA_X, theta[0])
            return u @ rho0 @ u.conj().T

        grid = np.linspace(-0.02, 0.02, 41)
        values = [quantum_relative_entropy(rho0, family([t])) for t in grid]
        curvature = 2 * np.polyfit(grid, values, 2)[0]
        assert bkm_metric(family, [0.0])[0, 0] == pytest.approx(curvature, rel=1e-3)

    def test_two_parameter_symmetric(self, rng):
        rho0 = random_density(rng, 3)
        a, b = random_hermitian(rng, 3), random_hermitian(rng, 3)

        def family(theta):
            u = expm_skew_hermitian(a, theta[0]) @ expm_skew_hermitian(b, theta[1])
            return u @ rho0 @ u.conj().T

        metric = bkm_metric(family, [0.1, -0.2])
        assert abs(metric[0, 1] - metric[1, 0]) < 1e-6


class TestCovarianceAndDerivative:
    def test_generalized_covariance(self, rng):
        rho = random_density(rng, 2)
        assert generalized_covariance(rho, np.eye(2), np.eye(2)) == pytest.approx(1.0)
        assert generalized_covariance(np.eye(2) / 2, SIGMA_X, SIGMA_X) == pytest.approx(1.0)
        a, b = random_hermitian(rng, 2), random_hermitian(rng, 2)
        assert generalized_covariance(rho, a, b) == pytest.approx(generalized_covariance(rho, b, a))

    def test_invariant_state(self):
        family = UnitaryFamily(generator=SIGMA_X, base_state=DensityMatrix.maximally_mixed(2))
        np.testing.assert_allclose(unitary_family_derivative(family, 0.5), np.zeros((2, 2)), atol=1e-15)

    def test_matches_finite_difference(self):
        family = UnitaryFamily(generator=SIGMA_X, base_state=DensityMatrix.from_diagonal([0.8, 0.2]))
        h = 1e-5
        fd = (family.state(0.3 + h).matrix - family.state(0.3 - h).matrix) / (2 * h)
        exact = unitary_family_derivative(family, 0.3)
        np.testing.assert_allclose(exact, fd, atol=1e-6)
        assert abs(np.trace(exact)) < 1e-14


class TestClassicalFIM:
    def test_identity(self):
        np.testing.assert_allclose(classical_fim(np.eye(3), np.eye(3)), np.eye(3))

    def test_scaling(self):
        np.testing.assert_allclose(classical_fim(2 * np.eye(2), np.eye(2)), 4 * np.eye(2))

    def test_column_sensitivity(self):
        np.testing.assert_allclose(classical_fim(np.array([1.0, 1.0]), np.eye(2)), [[2.0]])

    def test_not_positive_definite(self):
        with pytest.raises(DomainError, match="positive definite"):
            classical_fim(np.eye(2), np.diag([1.0, -1.0]))

    def test_not_symmetric(self):
        with pytest.raises(DomainError, match="symmetric"):
            classical_fim(np.eye(2), np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_trace_distance():
    assert trace_distance(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == pytest.approx(1.0)
    assert trace_distance(np.eye(2) / 2, np.eye(2) / 2) == 0.0


def test_trajectory_rows():
    traj = DensityTrajectory(times=np.array([0.0, 1.0]), states=np.stack([np.eye(2) / 2, np.diag([1.0, 0.0])]))
    header, rows = traj.to_rows()
    assert header == ["time", "re_00", "im_00", "re_01", "im_01", "re_10", "im_10", "re_11", "im_11"]
    assert rows[1] == [1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    np.testing.assert_allclose(traj.final.matrix, np.diag([1.0, 0.0]))
