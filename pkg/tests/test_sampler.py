import logging
import math

import numpy as np
import pytest
from pydantic import ValidationError

from qjh.errors import ConfigError, NumericValidationError, SamplerError
from qjh.sampler import (
    ChainResult,
    ChainState,
    DMPreconditioner,
    HMCConfig,
    MassMatrix,
    TargetDensity,
    acceptance_probability,
    adapt_density,
    autocorrelation,
    dm_update,
    effective_sample_size,
    hamiltonian,
    hmc_step,
    leapfrog,
    mass_from_rho,
    run_chain,
    run_chains,
    split_rhat,
    summarize,
)
from qjh.utils.logging import LogContext, get_logger


def gaussian_target(variances, name="gaussian") -> TargetDensity:
    var = np.asarray(variances, dtype=float)
    return TargetDensity(
        dim=var.size,
        log_density=lambda x: -0.5 * float(np.sum(x**2 / var)),
        grad_log_density=lambda x: -x / var,
        name=name,
    )


def broken_target(dim: int = 2) -> TargetDensity:
    return TargetDensity(
        dim=dim,
        log_density=lambda x: 0.0,
        grad_log_density=lambda x: np.full(dim, np.nan),
        name="broken",
    )


def quartic_target() -> TargetDensity:
    var = np.array([1.0, 4.0])
    return TargetDensity(
        dim=2,
        log_density=lambda x: -0.5 * float(np.sum(x**2 / var)) - 0.1 * float(np.sum(x**4)),
        grad_log_density=lambda x: -x / var - 0.4 * x**3,
        name="quartic",
    )


def config(**overrides) -> HMCConfig:
    values = dict(step_size=0.25, n_leapfrog=8, warmup=100, iterations=1100, seed=None)
    values.update(overrides)
    return HMCConfig(**values)


class TestTarget:
    def test_gradient_check_passes(self, rng):
        assert gaussian_target([1.0, 4.0]).check_gradient(rng) < 1e-5

    def test_gradient_check_catches_sign_error(self, rng):
        target = TargetDensity(
            dim=2, log_density=lambda x: -0.5 * float(x @ x), grad_log_density=lambda x: x, name="wrong"
        )
        with pytest.raises(NumericValidationError, match="wrong"):
            target.check_gradient(rng)


class TestMassMatrix:
    def test_rejects_indefinite(self):
        with pytest.raises(ConfigError, match="positive definite"):
            MassMatrix(matrix=np.diag([1.0, -1.0]))

    def test_rejects_asymmetric(self):
        with pytest.raises(ConfigError, match="symmetric"):
            MassMatrix(matrix=np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_kinetic_and_velocity(self):
        mass = MassMatrix(matrix=np.diag([2.0, 8.0]))
        p = np.array([2.0, 4.0])
        np.testing.assert_allclose(mass.velocity(p), [1.0, 0.5])
        assert mass.kinetic(p) == pytest.approx(0.5 * (4 / 2 + 16 / 8))
        assert mass.log_det == pytest.approx(math.log(16.0))

    def test_config_dimension_mismatch(self):
        with pytest.raises(ConfigError, match="target dimension"):
            config(mass_matrix=np.eye(3)).initial_mass(2)


class TestConfig:
    def test_warmup_must_be_shorter(self):
        with pytest.raises(ValidationError, match="warmup"):
            config(warmup=10, iterations=10)

    def test_step_size_positive(self):
        with pytest.raises(ValidationError):
            config(step_size=-0.1)


class TestLeapfrog:
    def test_reversible(self, rng):
        target = gaussian_target([1.0, 9.0])
        mass = MassMatrix(matrix=np.diag([1.0, 0.2]))
        x0, p0 = rng.standard_normal(2), rng.standard_normal(2)
        forward = leapfrog(x0, p0, target, mass, 0.1, 25)
        back = leapfrog(forward.position, -forward.momentum, target, mass, 0.1, 25)
        np.testing.assert_allclose(back.position, x0, atol=1e-12)
        np.testing.assert_allclose(-back.momentum, p0, atol=1e-12)

    def test_unit_jacobian(self, rng):
        target = quartic_target()
        mass = MassMatrix(matrix=np.diag([1.0, 0.5]))

        def flow(z):
            out = leapfrog(z[:2], z[2:], target, mass, 0.1, 10)
            return np.concatenate([out.position, out.momentum])

        z0, h = 0.5 * rng.standard_normal(4), 1e-5
        jacobian = np.empty((4, 4))
        for k in range(4):
            e = np.zeros(4)
            e[k] = h
            jacobian[:, k] = (flow(z0 + e) - flow(z0 - e)) / (2 * h)
        assert np.linalg.det(jacobian) == pytest.approx(1.0, abs=1e-6)

    def test_energy_error_is_second_order(self, rng):
        target = gaussian_target([1.0, 1.0, 1.0])
        mass = MassMatrix.identity(3)
        x0, p0 = rng.standard_normal(3), rng.standard_normal(3)
        h0 = hamiltonian(x0, p0, target, mass)
        errors = []
        for eps in (0.1, 0.05):
            out = leapfrog(x0, p0, target, mass, eps, int(round(1.0 / eps)))
            errors.append(abs(hamiltonian(out.position, out.momentum, target, mass) - h0))
        assert errors[1] < errors[0] / 3

    def test_hamiltonian_value(self):
        target = gaussian_target([1.0, 1.0])
        value = hamiltonian(np.array([1.0, 0.0]), np.array([0.0, 2.0]), target, MassMatrix.identity(2))
        assert value == pytest.approx(0.5 + math.log(2 * math.pi) + 2.0)

    def test_non_finite_gradient_diverges(self):
        out = leapfrog(np.zeros(2), np.ones(2), broken_target(), MassMatrix.identity(2), 0.1, 5, np.zeros(2))
        assert out.diverged


class TestStep:
    def test_acceptance_probability(self):
        assert acceptance_probability(1.0, 2.0) == pytest.approx(math.exp(-1.0))
        assert acceptance_probability(2.0, 1.0) == 1.0
        assert acceptance_probability(0.0, float("inf")) == 0.0
        assert acceptance_probability(0.0, 0.0) == 1.0
        assert acceptance_probability(0.0, math.log(2.0)) == pytest.approx(0.5, abs=1e-15)

    def test_constant_offset_changes_nothing(self):
        for h0, h1 in ((1.0, 2.0), (2.0, 1.0), (0.3, 0.3 + math.log(2.0))):
            assert acceptance_probability(h0 + 123.0, h1 + 123.0) == pytest.approx(acceptance_probability(h0, h1))
        target = quartic_target()
        shifted = TargetDensity(
            dim=2,
            log_density=lambda x: target.log_density(x) + 123.0,
            grad_log_density=target.grad_log_density,
            name="shifted",
        )
        cfg = config(iterations=300, warmup=50)
        a = run_chain(target, cfg, np.random.default_rng(9))
        b = run_chain(shifted, cfg, np.random.default_rng(9))
        np.testing.assert_array_equal(a.samples, b.samples)
        assert a.acceptance_rate == b.acceptance_rate

    def test_consumes_two_draws(self):
        target = gaussian_target([1.0, 2.0])
        state = ChainState.start(target, np.zeros(2))
        stepped = np.random.default_rng(3)
        hmc_step(state, target, config(), stepped)
        replay = np.random.default_rng(3)
        replay.standard_normal(2)
        replay.uniform()
        assert stepped.random() == replay.random()

    def test_divergence_keeps_position(self, rng):
        target = broken_target()
        state = ChainState(position=np.ones(2), log_density=0.0, gradient=np.zeros(2))
        out = hmc_step(state, target, config(), rng)
        np.testing.assert_array_equal(out.position, state.position)
        assert out.divergences == 1
        assert out.iteration == 1
        assert out.last_reason == "non-finite gradient"

    def test_energy_threshold_flags_divergence(self, rng):
        target = gaussian_target([1e-4, 1.0])
        state = ChainState.start(target, np.array([1.0, 0.0]))
        out = hmc_step(state, target, config(step_size=1.0, divergence_threshold=1.0), rng)
        assert out.divergences == 1
        assert "energy error" in out.last_reason


class TestPreconditioner:
    def test_alpha_bounds(self):
        with pytest.raises(ValidationError):
            DMPreconditioner(dim=2, alpha=0.0)
        with pytest.raises(ValidationError):
            DMPreconditioner(dim=2, alpha=1.5)

    def test_initial_mass_is_identity(self):
        pre = DMPreconditioner(dim=3)
        np.testing.assert_allclose(mass_from_rho(pre), np.eye(3), rtol=1e-7)

    def test_seeded_from_precision(self):
        pre = DMPreconditioner.from_precision(np.diag([4.0, 1.0]))
        np.testing.assert_allclose(np.real(pre.rho.matrix), np.diag([0.8, 0.2]))
        np.testing.assert_allclose(mass_from_rho(pre), np.diag([4.0, 1.0]), rtol=1e-7)

    def test_full_contraction_hits_normalized_precision(self, rng):
        pre = DMPreconditioner(dim=2, alpha=1.0, adapt_every=4)
        for point in ([1.0, 10.0], [-1.0, -10.0], [1.0, -10.0], [-1.0, 10.0]):
            dm_update(pre, np.array(point), rng, increment=np.eye(2))
        assert pre.epochs == 1
        # precision diag(3/4, 3/400) normalized
        np.testing.assert_allclose(np.real(np.diag(pre.rho.matrix)), [100 / 101, 1 / 101], rtol=1e-4)
        assert abs(pre.rho.matrix[0, 1]) < 1e-12
        np.testing.assert_allclose(np.diag(mass_from_rho(pre)), [0.75, 0.0075], rtol=1e-3)

    def test_no_adaptation_between_epochs(self, rng):
        pre = DMPreconditioner(dim=2, adapt_every=5)
        for _ in range(4):
            dm_update(pre, rng.standard_normal(2), rng)
        assert pre.epochs == 0
        np.testing.assert_allclose(pre.rho.matrix, np.eye(2) / 2)

    def test_adaptation_keeps_a_state(self, rng):
        pre = DMPreconditioner(dim=4, dtau=0.5, adapt_every=1)
        for _ in range(30):
            pre.rho = adapt_density(pre, rng)
            pre.record(rng.standard_normal(4))
        rho = pre.rho.matrix
        assert abs(np.trace(rho).real - 1.0) < 1e-10
        assert np.linalg.eigvalsh(rho)[0] > -1e-12
        assert pre.walk.steps == 30

    def test_annealed_walk_step(self):
        pre = DMPreconditioner(dim=2, dtau=0.01, anneal_epochs=10)
        pre.epochs = 5
        assert pre.current_dtau() == pytest.approx(0.0025)
        pre.epochs = 20
        assert pre.current_dtau() == 0.0

    def test_frozen_rejects_updates(self, rng):
        pre = DMPreconditioner(dim=2)
        pre.freeze()
        with pytest.raises(SamplerError, match="frozen"):
            dm_update(pre, np.zeros(2), rng)


class TestDiagnostics:
    def test_autocorrelation_lag_zero(self, rng):
        rho = autocorrelation(rng.standard_normal(100))
        assert rho[0] == pytest.approx(1.0)
        assert rho.size == 100

    def test_iid_ess(self, rng):
        assert effective_sample_size(rng.standard_normal(5000)) == pytest.approx(5000, rel=0.15)

    def test_ar1_ess(self, rng):
        phi, n = 0.9, 50000
        x = np.empty(n)
        x[0] = rng.standard_normal() / math.sqrt(1 - phi**2)
        noise = rng.standard_normal(n)
        for t in range(1, n):
            x[t] = phi * x[t - 1] + noise[t]
        expected = n * (1 - phi) / (1 + phi)
        assert effective_sample_size(x) == pytest.approx(expected, rel=0.15)

    def test_anticorrelated_ess_capped_at_length(self, rng):
        phi, n = -0.9, 1000
        x = np.empty(n)
        x[0] = rng.standard_normal() / math.sqrt(1 - phi**2)
        noise = rng.standard_normal(n)
        for t in range(1, n):
            x[t] = phi * x[t - 1] + noise[t]
        assert effective_sample_size(x) == pytest.approx(n)

    def test_constant_series(self, caplog):
        assert effective_sample_size(np.full(50, 3.0)) == 1.0
        assert any("Constant series" in r.getMessage() for r in caplog.records)

    def test_short_series(self):
        with pytest.raises(NumericValidationError, match="at least 10"):
            effective_sample_size(np.arange(5.0))

    def test_rhat(self, rng):
        mixed = rng.standard_normal((4, 2000))
        assert split_rhat(mixed) == pytest.approx(1.0, abs=0.01)
        shifted = mixed + np.arange(4)[:, None]
        assert split_rhat(shifted) > 1.1
        assert math.isnan(split_rhat(np.zeros((2, 10))))


class TestChains:
    def test_standard_normal_moments(self):
        results = run_chains(gaussian_target([1.0, 1.0]), config(iterations=3100), 2, seed=11)
        draws = np.concatenate([r.samples for r in results])
        np.testing.assert_allclose(draws.mean(axis=0), 0.0, atol=0.1)
        np.testing.assert_allclose(draws.var(axis=0), 1.0, atol=0.15)
        assert all(r.acceptance_rate > 0.6 for r in results)

    def test_thread_count_does_not_change_results(self):
        target = gaussian_target([1.0, 3.0])
        cfg = config(iterations=300, warmup=50)
        factory = lambda: DMPreconditioner(dim=2)  # noqa: E731
        serial = run_chains(target, cfg, 3, seed=5, preconditioner_factory=factory, threads=1)
        pooled = run_chains(target, cfg, 3, seed=5, preconditioner_factory=factory, threads=3)
        for a, b in zip(serial, pooled):
            np.testing.assert_array_equal(a.samples, b.samples)
        assert [r.chain for r in pooled] == [0, 1, 2]

    def test_seeds_differ(self):
        target = gaussian_target([1.0])
        a = run_chains(target, config(iterations=200, warmup=10), 1, seed=1)[0]
        b = run_chains(target, config(iterations=200, warmup=10), 1, seed=2)[0]
        assert not np.array_equal(a.samples, b.samples)

    def test_preconditioner_learns_scales(self, rng):
        pre = DMPreconditioner(dim=2)
        cfg = config(step_size=0.3, n_leapfrog=16, warmup=3000, iterations=3500)
        result = run_chain(gaussian_target([1.0, 100.0]), cfg, rng, pre)
        assert pre.frozen
        np.testing.assert_allclose(result.mass_matrix, mass_from_rho(pre))
        learned = np.diag(np.linalg.inv(result.mass_matrix))
        ratio = learned / np.array([1.0, 100.0])
        assert np.all(ratio > 0.5) and np.all(ratio < 2.0), learned

    def test_no_warmup_freezes_before_first_draw(self, rng):
        pre = DMPreconditioner.from_precision(np.diag([4.0, 1.0]))
        result = run_chain(gaussian_target([0.25, 1.0]), config(warmup=0, iterations=50), rng, pre)
        assert pre.frozen
        assert pre.count == 0
        np.testing.assert_allclose(result.mass_matrix, np.diag([4.0, 1.0]), rtol=1e-6)

    def test_small_step_acceptance(self, rng):
        cfg = HMCConfig(step_size=0.1, n_leapfrog=10, iterations=10000)
        result = run_chain(gaussian_target([1.0]), cfg, rng)
        assert result.samples.shape == (10000, 1)
        assert result.acceptance_rate > 0.95

    def test_chain_records_carry_context(self, caplog):
        factory = lambda: DMPreconditioner(dim=2)  # noqa: E731
        cfg = config(iterations=120, warmup=20)
        with caplog.at_level(logging.INFO), LogContext(get_logger("qjh.test"), run_id="r7"):
            run_chains(gaussian_target([1.0, 2.0]), cfg, 3, seed=4, preconditioner_factory=factory, threads=3)
        finished = [r for r in caplog.records if r.getMessage() == "Chain finished"]
        assert sorted(r.chain for r in finished) == [0, 1, 2]
        assert all(r.run_id == "r7" for r in finished)
        frozen = [r for r in caplog.records if r.getMessage() == "Preconditioner frozen"]
        assert sorted(r.chain for r in frozen) == [0, 1, 2]
        get_logger("qjh.test").info("after")
        assert not hasattr(caplog.records[-1], "chain")

    def test_callback_sees_every_iteration(self, rng):
        seen = []
        run_chain(gaussian_target([1.0]), config(iterations=40, warmup=10), rng, on_draw=lambda i, x: seen.append(i))
        assert seen == list(range(40))

    def test_all_warmup_divergent(self, rng):
        with pytest.raises(SamplerError, match="warmup iterations diverged"):
            run_chain(broken_target(), config(iterations=10, warmup=5), rng)

    def test_preconditioner_dimension_checked(self, rng):
        with pytest.raises(SamplerError, match="dimension"):
            run_chain(gaussian_target([1.0]), config(), rng, DMPreconditioner(dim=2))

    def test_summary_flags(self, rng):
        samples = np.column_stack([rng.standard_normal(50), np.zeros(50)])
        result = ChainResult(
            samples=samples, acceptance_rate=0.8, divergences=2, warmup_divergences=0, mass_matrix=np.eye(2)
        )
        diagnostics = summarize([result])
        assert "divergences" in diagnostics.flags
        assert "constant_series:1" in diagnostics.flags
        assert diagnostics.ess[1] == 1.0
        assert diagnostics.rhat is None
        assert diagnostics.acceptance_rate == pytest.approx(0.8)
