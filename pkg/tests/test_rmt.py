import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.integrate import trapezoid
from scipy.stats import chisquare

from qjh.errors import NumericValidationError
from qjh.numkernel import unitarity_error
from qjh.rmt import (
    UnitaryWalkState,
    cue2_spacing_density,
    cue_increment,
    cue_step,
    eigenphases,
    histogram_distance,
    histogram_sup_distance,
    reference_spacing_density,
    run_cue_walk,
    sample_cue_direct,
    sample_gue,
    spacing_statistics,
    unitary_surmise,
)


def binned_sin_squared(edges: np.ndarray) -> np.ndarray:
    """Bin averages of sin^2(pi s / 2), the unfolded spacing density for N = 2"""
    a, b = edges[:-1], edges[1:]
    return 0.5 - (np.sin(np.pi * b) - np.sin(np.pi * a)) / (2 * np.pi * (b - a))


class TestGUE:
    def test_normalization(self, rng):
        m = sample_gue(6, rng, size=4000).matrix
        np.testing.assert_array_equal(m, np.swapaxes(m, -1, -2).conj())
        second_moment = np.real(np.trace(m @ m, axis1=-2, axis2=-1)) / 6
        assert np.mean(second_moment) == pytest.approx(1.0, rel=0.02)

    def test_entry_moments(self, rng):
        n, draws = 3, 10000
        m = sample_gue(n, rng, size=draws).matrix
        parts = {
            "diagonal": (np.real(m[:, np.arange(n), np.arange(n)]).ravel(), 1.0 / n),
            "off-diagonal real": (np.real(m[:, 0, 1:]).ravel(), 1.0 / (2 * n)),
            "off-diagonal imaginary": (np.imag(m[:, 0, 1:]).ravel(), 1.0 / (2 * n)),
        }
        for name, (values, variance) in parts.items():
            se = math.sqrt(variance / values.size)
            assert abs(values.mean()) < 4 * se, name
            assert values.var() == pytest.approx(variance, rel=0.06), name

    def test_rejects_empty(self, rng):
        with pytest.raises(NumericValidationError):
            sample_gue(0, rng)


class TestWalk:
    def test_increment_is_unitary(self, rng):
        u = cue_increment(5, 0.01, rng, size=3)
        assert u.shape == (3, 5, 5)
        assert unitarity_error(u) < 1e-10
        assert np.linalg.norm(u[0] - np.eye(5)) < 2.0

    def test_zero_step_is_identity(self, rng):
        state = UnitaryWalkState.identity(3, 0.0)
        assert cue_step(state, rng) is state

    def test_state_rejects_non_unitary(self):
        with pytest.raises(ValidationError, match="unitary"):
            UnitaryWalkState(unitary=2 * np.eye(2), dtau=0.1)

    def test_long_walk_stays_unitary(self, rng):
        record = run_cue_walk(5, 0.1, 250, rng, n_walks=3, record_every=50)
        assert record.final.steps == 250
        assert record.final.tau == pytest.approx(25.0)
        assert unitarity_error(record.final.unitary) < 1e-8
        assert record.phases.shape == (3, 6, 5)
        np.testing.assert_allclose(record.taus, [0.0, 5.0, 10.0, 15.0, 20.0, 25.0])

    @pytest.mark.slow
    def test_unitary_after_ten_thousand_steps(self, rng):
        record = run_cue_walk(3, 0.05, 10000, rng, record_every=10000)
        assert record.final.steps == 10000
        assert unitarity_error(record.final.unitary) < 1e-8

    def test_burn_in_shifts_first_record(self, rng):
        record = run_cue_walk(2, 0.01, 10, rng, record_every=5, burn_in=20)
        np.testing.assert_allclose(record.taus, [0.2, 0.25, 0.3])

    def test_early_phase_diffusion(self, rng):
        # for small tau the eigenphases spread like a Hermitian Brownian motion
        record = run_cue_walk(4, 0.001, 200, rng, n_walks=200, record_every=20)
        spread = np.mean(np.mean(record.phases**2, axis=-1), axis=0)
        slope = np.polyfit(record.taus, spread, 1)[0]
        assert slope == pytest.approx(1.0, rel=0.1)

    def test_bad_record_interval(self, rng):
        with pytest.raises(NumericValidationError, match="record_every"):
            run_cue_walk(2, 0.1, 10, rng, record_every=0)


class TestEigenphases:
    def test_sorted_and_in_range(self):
        u = np.diag(np.exp(1j * np.array([2.0, -1.0, 0.5, math.pi])))
        np.testing.assert_allclose(eigenphases(u), [-1.0, 0.5, 2.0, math.pi])

    def test_minus_one_maps_to_pi(self):
        assert eigenphases(-np.eye(1))[0] == pytest.approx(math.pi)

    def test_rejects_non_unitary(self):
        with pytest.raises(NumericValidationError):
            eigenphases(np.diag([1.0, 0.5]))

    def test_global_phase_shift(self, rng):
        u = sample_cue_direct(5, rng)
        alpha = 0.7
        expected = np.sort(np.angle(np.exp(1j * (eigenphases(u) + alpha))))
        np.testing.assert_allclose(eigenphases(np.exp(1j * alpha) * u), expected, atol=1e-10)

    def test_batches(self, rng):
        assert eigenphases(sample_cue_direct(3, rng, size=7)).shape == (7, 3)


class TestDirectSampling:
    def test_shapes(self, rng):
        assert sample_cue_direct(3, rng).shape == (3, 3)
        assert sample_cue_direct(3, rng, size=1).shape == (1, 3, 3)
        assert sample_cue_direct(3, rng, size=5).shape == (5, 3, 3)
        assert sample_cue_direct(1, rng, size=4).shape == (4, 1, 1)

    def test_unitary(self, rng):
        assert unitarity_error(sample_cue_direct(6, rng, size=10)) < 1e-12

    def test_eigenphases_are_uniform(self, rng):
        phases = eigenphases(sample_cue_direct(4, rng, size=25000)).ravel()
        counts, _ = np.histogram(phases, bins=16, range=(-math.pi, math.pi))
        assert chisquare(counts).pvalue > 0.01


class TestSpacings:
    def test_mean_spacing_is_one(self, rng):
        phases = eigenphases(sample_cue_direct(5, rng, size=1000))
        assert spacing_statistics(phases).mean_spacing == pytest.approx(1.0, abs=1e-12)

    def test_too_few_sets(self, rng):
        phases = eigenphases(sample_cue_direct(4, rng, size=10))
        with pytest.raises(NumericValidationError, match="at least 1000"):
            spacing_statistics(phases)

    def test_needs_two_phases(self):
        with pytest.raises(NumericValidationError, match="two phases"):
            spacing_statistics(np.zeros((2000, 1)))

    def test_two_by_two_density(self, rng):
        phases = eigenphases(sample_cue_direct(2, rng, size=100000))
        hist = spacing_statistics(phases, bins=10, upper=2.0)
        assert histogram_sup_distance(hist, binned_sin_squared(hist.edges)) < 0.03

    def test_small_spacings_are_rare(self, rng):
        phases = eigenphases(sample_cue_direct(8, rng, size=12500))
        hist = spacing_statistics(phases)
        assert hist.spacings.size == 100000
        assert np.mean(hist.spacings < 0.1) < 0.002

    def test_direct_cue_near_surmise(self, rng):
        phases = eigenphases(sample_cue_direct(4, rng, size=10000))
        hist = spacing_statistics(phases)
        assert histogram_distance(hist, unitary_surmise(hist.centers)) < 0.1

    @pytest.mark.slow
    def test_walk_matches_direct_sampling(self, rng):
        walk = run_cue_walk(4, 0.05, 3960, rng, n_walks=100, record_every=40, burn_in=200)
        walk_hist = spacing_statistics(walk.phases, bins=16)
        direct_hist = spacing_statistics(eigenphases(sample_cue_direct(4, rng, size=10000)), bins=16)
        assert walk_hist.n_sets == 10000
        assert histogram_sup_distance(walk_hist, direct_hist.density) < 0.05


class TestSurmise:
    def test_normalized_with_unit_mean(self):
        s = np.linspace(0.0, 10.0, 20001)
        p = unitary_surmise(s)
        assert trapezoid(p, s) == pytest.approx(1.0, abs=1e-6)
        assert trapezoid(s * p, s) == pytest.approx(1.0, abs=1e-6)

    def test_histogram_distance_to_itself(self, rng):
        hist = spacing_statistics(eigenphases(sample_cue_direct(3, rng, size=1000)))
        assert histogram_distance(hist, hist.density) == 0.0

    def test_two_by_two_law_normalized_with_unit_mean(self):
        s = np.linspace(0.0, 2.0, 20001)
        p = cue2_spacing_density(s)
        assert trapezoid(p, s) == pytest.approx(1.0, abs=1e-6)
        assert trapezoid(s * p, s) == pytest.approx(1.0, abs=1e-6)
        assert cue2_spacing_density(np.array([2.5]))[0] == 0.0

    def test_reference_selection(self):
        s = np.array([0.5, 1.0])
        name, density = reference_spacing_density(2, s)
        assert name == "cue2-exact"
        np.testing.assert_allclose(density, [0.5, 1.0])
        name, density = reference_spacing_density(4, s)
        assert name == "wigner-surmise"
        np.testing.assert_allclose(density, unitary_surmise(s))

    def test_sup_distance(self, rng):
        hist = spacing_statistics(eigenphases(sample_cue_direct(3, rng, size=1000)), bins=8)
        shifted = hist.density.copy()
        shifted[3] += 0.25
        assert histogram_sup_distance(hist, shifted) == pytest.approx(0.25)
