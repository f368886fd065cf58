"""Tests for measurement records, Kraus products and trajectory ensembles."""

import numpy as np
import pytest
import scipy.linalg

from krauslab.exceptions import DimensionMismatchError, InvalidInputError
from krauslab.operators import SIGMA_MINUS, SIGMA_Z, dagger, mat_exp
from krauslab.superop import channel_exp, lindblad_dissipator, sandwich
from krauslab.utils import fit_order
from krauslab.trajectory import (
    MeasurementRecord,
    RecordKind,
    ensemble_bias,
    ensemble_channel,
    ensemble_checkpoints,
    ensemble_state,
    evolve_lindblad,
    kraus_of_record,
    physical_weight,
    record_step_expectation,
    sample_record,
)

DEPHASING = [0.5 * SIGMA_Z]
MIXED = np.eye(2, dtype=complex) / 2


class TestRecordKind:
    """Tests for record kind names."""

    @pytest.mark.parametrize(
        "name,expected",
        [
            ("wiener", RecordKind.WIENER),
            ("diffusive", RecordKind.WIENER),
            ("poisson", RecordKind.POISSON),
            ("jump", RecordKind.POISSON),
        ],
    )
    def test_aliases(self, name, expected):
        assert RecordKind.coerce(name) is expected

    def test_unknown(self):
        with pytest.raises(InvalidInputError, match="unknown record kind"):
            RecordKind.coerce("homodyne")


class TestSampleRecord:
    """Tests for sampling from the ostensible measure."""

    def test_wiener_shape_and_variance(self, rng):
        record = sample_record("wiener", 20_000, 1, 1e-2, 1.0, rng)
        assert record.increments.shape == (20_000, 1)
        assert record.duration == pytest.approx(200.0)
        assert record.increments.var() == pytest.approx(1e-2, rel=0.05)

    def test_poisson_clicks(self, rng):
        record = sample_record("jump", 10_000, 2, 1e-2, 5.0, rng)
        assert set(np.unique(record.increments)) <= {0.0, 1.0}
        assert record.increments.mean() == pytest.approx(0.05, rel=0.15)

    def test_reproducible(self):
        a = sample_record("wiener", 10, 1, 1e-3, 1.0, np.random.default_rng(3))
        b = sample_record("wiener", 10, 1, 1e-3, 1.0, np.random.default_rng(3))
        assert np.array_equal(a.increments, b.increments)

    def test_reversed(self, rng):
        record = sample_record("wiener", 5, 1, 1e-3, 1.0, rng)
        assert np.array_equal(record.reversed().increments, record.increments[::-1])

    def test_negated(self, rng):
        record = sample_record("wiener", 5, 2, 1e-3, 1.0, rng)
        partner = record.negated()
        assert np.array_equal(partner.increments, -record.increments)
        assert partner.kind is RecordKind.WIENER
        with pytest.raises(InvalidInputError, match="Wiener"):
            sample_record("poisson", 5, 1, 1e-3, 1.0, rng).negated()

    def test_validation(self, rng):
        with pytest.raises(InvalidInputError, match="n_steps"):
            sample_record("wiener", -1, 1, 1e-3, 1.0, rng)
        with pytest.raises(InvalidInputError, match="positive"):
            sample_record("wiener", 5, 1, 0.0, 1.0, rng)
        with pytest.raises(InvalidInputError, match="kappa\\*dt <= 1"):
            sample_record("poisson", 5, 1, 0.5, 4.0, rng)


class TestKrausOfRecord:
    """Tests for time-ordered Kraus products."""

    def test_quiet_wiener_record(self):
        record = MeasurementRecord(RecordKind.WIENER, 1e-2, 1.0, np.zeros((50, 1)))
        result = kraus_of_record(DEPHASING, record)
        assert np.allclose(result.full_kraus(), np.exp(-0.125) * np.eye(2))

    def test_commuting_product_depends_on_total(self, rng):
        record = sample_record("wiener", 40, 1, 1e-2, 2.0, rng)
        total = record.increments.sum()
        expected = np.exp(-0.25 * 2.0 * 0.4) * scipy.linalg.expm(
            np.sqrt(2.0) * total * DEPHASING[0]
        )
        assert np.allclose(kraus_of_record(DEPHASING, record).full_kraus(), expected)
        reversed_result = kraus_of_record(DEPHASING, record.reversed())
        assert np.allclose(reversed_result.full_kraus(), expected)

    def test_quiet_poisson_record(self):
        record = MeasurementRecord(RecordKind.POISSON, 1e-2, 1.0, np.zeros((10, 1)))
        result = kraus_of_record([SIGMA_MINUS], record)
        assert np.allclose(result.kraus, np.diag([1.0, np.exp(-0.05)]))
        assert result.log_ostensible_weight == pytest.approx(-10 * np.log1p(-1e-2))

    def test_click_lowers(self):
        increments = np.zeros((4, 1))
        increments[2, 0] = 1.0
        record = MeasurementRecord(RecordKind.POISSON, 1e-2, 1.0, increments)
        result = kraus_of_record([SIGMA_MINUS], record)
        assert np.allclose(result.kraus[1, 0], 0.0)
        assert abs(result.kraus[0, 1]) > 0.9
        assert result.kraus[1, 1] == 0.0

    def test_channel_mismatch(self, rng):
        record = sample_record("wiener", 5, 2, 1e-3, 1.0, rng)
        with pytest.raises(DimensionMismatchError, match="record channels"):
            kraus_of_record(DEPHASING, record)

    def test_physical_weight(self):
        record = MeasurementRecord(RecordKind.WIENER, 1e-2, 1.0, np.zeros((50, 1)))
        result = kraus_of_record(DEPHASING, record)
        assert physical_weight(MIXED, result) == pytest.approx(np.exp(-0.25))


class TestEvolveLindblad:
    """Tests for the exact master-equation solution."""

    def test_decay(self):
        excited = np.diag([0.0, 1.0]).astype(complex)
        out = evolve_lindblad(excited, [SIGMA_MINUS], kappa=2.0, duration=0.5)
        assert out[1, 1].real == pytest.approx(np.exp(-1.0))

    def test_rejects_bad_state(self):
        with pytest.raises(InvalidInputError):
            evolve_lindblad(SIGMA_Z, [SIGMA_MINUS], 1.0, 1.0)


class TestEnsemble:
    """Tests for trajectory ensembles."""

    def test_minimum_size(self):
        with pytest.raises(InvalidInputError, match="at least 100"):
            ensemble_channel(DEPHASING, "diffusive", 1.0, 0.1, 1e-2, 50, seed=0)

    def test_converges_to_channel(self):
        estimate = ensemble_channel(DEPHASING, "diffusive", 1.0, 0.5, 1e-2, 2000, seed=11)
        exact = channel_exp(lindblad_dissipator(DEPHASING), 0.5)
        assert np.linalg.norm(estimate.channel - exact) <= 6 * estimate.stderr
        assert estimate.n_trajectories == 2000
        assert estimate.mean_weight == pytest.approx(1.0, abs=6 * estimate.weight_stderr)

    def test_checkpoint_times(self):
        estimates = ensemble_checkpoints(
            DEPHASING, "diffusive", 1.0, 0.4, 1e-2, 200, seed=1, n_checkpoints=4
        )
        assert [e.time for e in estimates] == pytest.approx([0.1, 0.2, 0.3, 0.4])

    def test_bit_identical_across_threads(self):
        args = ([SIGMA_MINUS], "jump", 1.0, 0.2, 1e-2, 1200)
        one = ensemble_channel(*args, seed=5, threads=1)
        two = ensemble_channel(*args, seed=5, threads=3)
        assert np.array_equal(one.channel, two.channel)
        assert one.stderr == two.stderr

    def test_seed_changes_estimate(self):
        args = (DEPHASING, "diffusive", 1.0, 0.1, 1e-2, 200)
        assert not np.array_equal(
            ensemble_channel(*args, seed=1).channel, ensemble_channel(*args, seed=2).channel
        )

    def test_state(self):
        estimate = ensemble_channel(DEPHASING, "diffusive", 1.0, 0.2, 1e-2, 500, seed=3)
        rho = ensemble_state(MIXED, estimate)
        assert np.trace(rho).real == pytest.approx(1.0, abs=0.05)

    @pytest.mark.parametrize(
        "lindblads,kind", [(DEPHASING, "diffusive"), ([SIGMA_MINUS], "jump")]
    )
    def test_within_sampling_and_step_bound(self, lindblads, kind):
        n, dt = 2000, 1e-2
        estimate = ensemble_channel(lindblads, kind, 1.0, 1.0, dt, n, seed=17)
        exact = channel_exp(lindblad_dissipator(lindblads), 1.0)
        assert np.linalg.norm(estimate.channel - exact) <= 5 / np.sqrt(n) + 10 * dt


class TestAntithetic:
    """Tests for antithetic Wiener sampling."""

    args = (DEPHASING, "diffusive", 1.0, 0.2, 1e-2, 1000)

    def test_reduces_standard_error(self):
        plain = ensemble_channel(*self.args, seed=4)
        paired = ensemble_channel(*self.args, seed=4, antithetic=True)
        assert paired.n_trajectories == plain.n_trajectories == 1000
        assert paired.stderr < 0.7 * plain.stderr

    def test_unbiased(self):
        estimate = ensemble_channel(*self.args, seed=8, antithetic=True)
        exact = channel_exp(lindblad_dissipator(DEPHASING), 0.2)
        assert np.linalg.norm(estimate.channel - exact) <= 6 * estimate.stderr
        assert estimate.mean_weight == pytest.approx(1.0, abs=6 * estimate.weight_stderr + 1e-12)

    def test_bit_identical_across_threads(self):
        args = ([SIGMA_MINUS], "diffusive", 1.0, 0.2, 1e-2, 1200)
        one = ensemble_channel(*args, seed=5, threads=1, antithetic=True)
        two = ensemble_channel(*args, seed=5, threads=3, antithetic=True)
        assert np.array_equal(one.channel, two.channel)
        assert one.stderr == two.stderr

    def test_rejects_poisson(self):
        with pytest.raises(InvalidInputError, match="Wiener"):
            ensemble_channel([SIGMA_MINUS], "jump", 1.0, 0.2, 1e-2, 200, antithetic=True)

    def test_rejects_odd_count(self):
        with pytest.raises(InvalidInputError, match="even"):
            ensemble_channel(DEPHASING, "diffusive", 1.0, 0.2, 1e-2, 201, antithetic=True)


class TestStepBias:
    """Tests for the exact one-step expectation and the time-step bias."""

    def test_jump_step_expectation(self):
        kappa, dt = 2.0, 0.05
        step = record_step_expectation([SIGMA_MINUS], "jump", kappa, dt)
        quiet = mat_exp(-0.5 * kappa * dt * dagger(SIGMA_MINUS) @ SIGMA_MINUS)
        click = SIGMA_MINUS @ quiet
        expected = sandwich(quiet, quiet) + kappa * dt * sandwich(click, click)
        assert np.allclose(step, expected, atol=1e-14)

    def test_click_order(self):
        ops = [SIGMA_MINUS, SIGMA_MINUS.T.copy()]
        step = record_step_expectation(ops, "poisson", 1.0, 0.1)
        quiet = mat_exp(-0.05 * sum(dagger(op) @ op for op in ops))
        both = ops[1] @ ops[0] @ quiet
        singles = sum(0.1 * sandwich(op @ quiet, op @ quiet) for op in ops)
        expected = sandwich(quiet, quiet) + singles + 0.01 * sandwich(both, both)
        assert np.allclose(step, expected, atol=1e-14)

    def test_commuting_diffusive_is_exact(self):
        assert ensemble_bias(DEPHASING, "diffusive", 1.0, 1.0, 1e-2) < 1e-12

    @pytest.mark.parametrize("kind", ["diffusive", "jump"])
    def test_ensemble_mean_is_step_power(self, kind):
        dt, n_steps = 0.05, 10
        estimate = ensemble_channel([SIGMA_MINUS], kind, 1.0, dt * n_steps, dt, 4000, seed=21)
        step = record_step_expectation([SIGMA_MINUS], kind, 1.0, dt)
        expected = np.linalg.matrix_power(step, n_steps)
        assert np.linalg.norm(estimate.channel - expected) <= 6 * estimate.stderr

    @pytest.mark.parametrize("kind", ["diffusive", "jump"])
    @pytest.mark.parametrize(
        "lindblads", [[SIGMA_MINUS], [SIGMA_MINUS, 0.5 * SIGMA_Z]], ids=["decay", "decay-z"]
    )
    def test_first_order_in_dt(self, lindblads, kind):
        dts = [1e-2, 5e-3, 2.5e-3]
        biases = [ensemble_bias(lindblads, kind, 1.0, 1.0, dt) for dt in dts]
        assert all(b > 1e-10 for b in biases)
        assert biases[0] <= 10 * dts[0]
        assert fit_order(dts, biases) >= 0.9
