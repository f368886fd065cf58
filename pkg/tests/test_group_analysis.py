"""Tests for representation-level checks of the instrumental group."""

import numpy as np
import pytest

from krauslab.exceptions import InvalidInputError, UnsupportedError
from krauslab.group_analysis import (
    KOD_BINS,
    AbelianCoord,
    RepPoint,
    abelian_coordinates,
    abelian_kraus,
    adjoint_intertwining_check,
    differential_intertwining_check,
    generator_intertwining_check,
    kod_histogram,
    kod_l1_to_gaussian,
    kod_splice_l1,
    lie_bracket_residual,
    right_inv_derivative,
    right_translation_generator,
    sample_abelian_coordinates,
    total_operation_intertwining_check,
    translation_intertwining_check,
    weak_commutator_ensemble,
    weak_commutator_residual,
)
from krauslab.instrument import random_instrument
from krauslab.operators import SIGMA_MINUS, SIGMA_X, SIGMA_Y, SIGMA_Z, random_invertible
from krauslab.superop import sandwich
from krauslab.trajectory import MeasurementRecord, RecordKind, kraus_of_record, sample_record

HALF_Z = 0.5 * SIGMA_Z


@pytest.fixture
def point(rng):
    return RepPoint(random_invertible(2, rng))


class TestRepPoint:
    """Tests for group elements."""

    def test_singular(self):
        with pytest.raises(InvalidInputError, match="invertible"):
            RepPoint(SIGMA_MINUS)

    def test_inverse(self, point):
        assert np.allclose((point @ point.inverse()).kraus, np.eye(2))

    def test_superop(self, point):
        assert np.allclose(point.superop, sandwich(point.kraus, point.kraus))


class TestIntertwining:
    """Tests for the exact intertwining relations."""

    def test_translation(self, rng, point):
        other = RepPoint(random_invertible(2, rng))
        assert translation_intertwining_check(other, point) < 1e-12

    def test_adjoint(self, point):
        assert adjoint_intertwining_check(point) < 1e-12

    def test_total_operation(self, rng):
        later, earlier = random_instrument(2, rng), random_instrument(2, rng)
        assert total_operation_intertwining_check(later, earlier) < 1e-12

    @pytest.mark.parametrize("kind", ["jump", "diffusive"])
    def test_generator(self, point, kind):
        residual = generator_intertwining_check([0.5 * SIGMA_X, 0.5 * SIGMA_Y], point, kind)
        assert residual < 1e-12

    def test_generator_single_operator(self, point):
        assert generator_intertwining_check(SIGMA_MINUS, point, "jump") < 1e-12


class TestInvariantDerivatives:
    """Tests for the finite-difference derivatives."""

    def test_kraus_level(self, point):
        fd = right_inv_derivative(SIGMA_X, point, h=1e-4)
        assert np.linalg.norm(fd - SIGMA_X @ point.kraus) < 1e-6

    def test_superop_level(self, point):
        fd = right_inv_derivative(SIGMA_Y, point, h=1e-4, level="superop")
        expected = right_translation_generator(SIGMA_Y) @ point.superop
        assert np.linalg.norm(fd - expected) < 1e-6

    def test_unknown_level(self, point):
        with pytest.raises(InvalidInputError, match="level"):
            right_inv_derivative(SIGMA_X, point, level="ultra")

    def test_step_range(self, point):
        with pytest.raises(InvalidInputError, match="h must lie"):
            right_inv_derivative(SIGMA_X, point, h=0.1)

    def test_differential_second_order(self, point):
        coarse = differential_intertwining_check(SIGMA_X, point, h=1e-2)
        fine = differential_intertwining_check(SIGMA_X, point, h=5e-3)
        assert coarse / fine == pytest.approx(4.0, rel=0.1)

    def test_lie_bracket(self, point):
        assert lie_bracket_residual(0.5 * SIGMA_X, 0.5 * SIGMA_Y, point) < 1e-4


class TestWeakCommutators:
    """Tests for group commutators of weak diffusive Kraus operators."""

    def test_commuting_operators(self):
        residual, size = weak_commutator_residual(HALF_Z, SIGMA_Z, 0.03, -0.02, 1.0, 1e-3)
        assert residual < 1e-14
        assert size < 1e-14

    def test_bch_beats_identity(self):
        dt = 1e-3
        residual, size = weak_commutator_residual(
            0.5 * SIGMA_X, 0.5 * SIGMA_Y, np.sqrt(dt), np.sqrt(dt), 1.0, dt
        )
        assert residual < 0.1 * size

    def test_ensemble(self):
        ensemble = weak_commutator_ensemble(0.5 * SIGMA_X, 0.5 * SIGMA_Y, 1.0, 1e-3, 2000, seed=4)
        assert ensemble.n_samples == 2000
        assert ensemble.mean_norm <= 5 * ensemble.stderr

    def test_ensemble_size(self):
        with pytest.raises(InvalidInputError, match="two samples"):
            weak_commutator_ensemble(SIGMA_X, SIGMA_Y, 1.0, 1e-3, 1)


class TestAbelian:
    """Tests for the abelian coordinates and Kraus operators."""

    def test_coordinates(self):
        increments = np.full((10, 1), 0.01)
        record = MeasurementRecord(RecordKind.WIENER, 0.1, 4.0, increments)
        coord = abelian_coordinates(record, 4.0, HALF_Z)
        assert coord.r == pytest.approx(4.0)
        assert coord.x == pytest.approx(0.2)

    def test_empty_record(self):
        record = MeasurementRecord(RecordKind.WIENER, 0.1, 1.0, np.zeros((0, 1)))
        assert abelian_coordinates(record, 1.0) == AbelianCoord(0.0, 0.0)

    def test_unsupported(self, rng):
        record = sample_record("wiener", 5, 1, 1e-2, 1.0, rng)
        with pytest.raises(UnsupportedError, match="Hermitian"):
            abelian_coordinates(record, 1.0, SIGMA_MINUS)
        clicks = sample_record("poisson", 5, 1, 1e-2, 1.0, rng)
        with pytest.raises(UnsupportedError, match="Wiener"):
            abelian_coordinates(clicks, 1.0)

    def test_composition_adds_coordinates(self):
        a, b = AbelianCoord(0.3, 0.5), AbelianCoord(0.2, -1.1)
        product = abelian_kraus(HALF_Z, a) @ abelian_kraus(HALF_Z, b)
        assert np.allclose(product, abelian_kraus(HALF_Z, a + b))

    def test_matches_trajectory_product(self, rng):
        record = sample_record("wiener", 200, 1, 1e-3, 1.0, rng)
        direct = kraus_of_record([HALF_Z], record).full_kraus()
        closed = abelian_kraus(HALF_Z, abelian_coordinates(record, 1.0, HALF_Z))
        assert np.allclose(direct, closed, rtol=1e-10)


class TestKod:
    """Tests for Kraus-operator density histograms."""

    def test_antithetic_samples(self):
        first, second = sample_abelian_coordinates(1.0, 1.0, 1e-2, 1000, seed=2)
        assert first.shape == second.shape == (1000,)
        assert abs((first + second).mean()) < 1e-12

    def test_variance(self):
        first, second = sample_abelian_coordinates(2.0, 1.0, 1e-2, 20_000, seed=3)
        assert np.var(first + second) == pytest.approx(2.0, rel=0.05)
        assert np.var(first) == pytest.approx(1.0, rel=0.05)

    def test_reproducible(self):
        a = sample_abelian_coordinates(1.0, 1.0, 1e-2, 500, seed=9)
        b = sample_abelian_coordinates(1.0, 1.0, 1e-2, 500, seed=9)
        assert np.array_equal(a[0], b[0])

    def test_validation(self):
        with pytest.raises(InvalidInputError, match="n_samples"):
            sample_abelian_coordinates(1.0, 1.0, 1e-2, 1)

    def test_histogram_mass(self, rng):
        hist = kod_histogram(rng.standard_normal(5000), 1.0, 1.0, bins=51)
        assert hist.mass == pytest.approx(1.0)
        assert hist.midpoints.size == 51
        assert hist.width == pytest.approx(10.0 / 51)

    def test_histogram_default_bins(self, rng):
        hist = kod_histogram(rng.standard_normal(1000), 1.0, 1.0)
        assert hist.midpoints.size == KOD_BINS == 101
        assert hist.midpoints[KOD_BINS // 2] == pytest.approx(0.0, abs=1e-12)

    def test_histogram_errors(self):
        with pytest.raises(InvalidInputError, match="positive scale"):
            kod_histogram([], 1.0, 1.0)
        with pytest.raises(InvalidInputError, match="window"):
            kod_histogram([100.0], 1.0, 1.0)

    def test_gaussian_and_splice(self):
        first, second = sample_abelian_coordinates(1.0, 1.0, 1e-2, 100_000, seed=6)
        full = kod_histogram(first + second, 1.0, 1.0, bins=51)
        assert kod_l1_to_gaussian(full, 1.0) < 0.02
        halves = [kod_histogram(xs, 0.5, 1.0, bins=51) for xs in (first, second)]
        assert kod_splice_l1(full, *halves) < 0.03

    def test_splice_widths(self, rng):
        xs = rng.standard_normal(1000)
        with pytest.raises(InvalidInputError, match="common bin width"):
            kod_splice_l1(
                kod_histogram(xs, 1.0, 1.0),
                kod_histogram(xs, 1.0, 2.0),
                kod_histogram(xs, 1.0, 1.0),
            )
