"""Tests for the operator core."""

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from krauslab.exceptions import DimensionMismatchError, InvalidInputError
from krauslab.operators import (
    PRESETS,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    as_operator,
    check_same_dim,
    commutator,
    dagger,
    frob_dist,
    herm_eigvals,
    identity,
    make_rng,
    mat_exp,
    mat_exp_batch,
    random_ginibre,
    random_hermitian,
    random_invertible,
    random_unitary,
    spawn_seeds,
    spin_half,
    trace,
)


class TestAsOperator:
    """Tests for input validation."""

    def test_promotes_to_complex(self):
        op = as_operator([[1, 0], [0, 1]])
        assert op.dtype == np.complex128

    def test_rejects_non_square(self):
        with pytest.raises(InvalidInputError, match="square matrix"):
            as_operator(np.zeros((2, 3)))

    def test_rejects_vector(self):
        with pytest.raises(InvalidInputError, match="square matrix"):
            as_operator([1, 2])

    def test_same_dim(self):
        assert check_same_dim(SIGMA_X, SIGMA_Z) == 2
        with pytest.raises(DimensionMismatchError, match="expected 2, got 3"):
            check_same_dim(SIGMA_X, np.eye(3))


class TestMatExp:
    """Tests for the matrix exponentials."""

    def test_zero_is_identity(self):
        assert np.allclose(mat_exp(np.zeros((3, 3))), np.eye(3))

    def test_pauli_rotation(self):
        theta = 0.7
        expected = np.cos(theta) * np.eye(2) - 1j * np.sin(theta) * SIGMA_X
        assert np.allclose(mat_exp(-1j * theta * SIGMA_X), expected, atol=1e-14)

    def test_rejects_nan(self):
        with pytest.raises(InvalidInputError, match="finite"):
            mat_exp([[np.nan, 0], [0, 0]])

    def test_batch_matches_scipy(self, rng):
        stack = np.stack([2.0 * random_ginibre(3, rng) for _ in range(5)])
        batch = mat_exp_batch(stack)
        for a, e in zip(stack, batch):
            assert np.allclose(e, scipy.linalg.expm(a), rtol=1e-10, atol=1e-10)

    def test_batch_shape_check(self):
        with pytest.raises(InvalidInputError, match="expects"):
            mat_exp_batch(np.zeros((2, 3)))

    def test_batch_empty_stack(self):
        out = mat_exp_batch(np.zeros((0, 2, 2)))
        assert out.shape == (0, 2, 2)


class TestSpectra:
    """Tests for Hermitian spectra."""

    def test_sigma_z(self):
        assert np.allclose(herm_eigvals(SIGMA_Z), [-1.0, 1.0])

    def test_sorted(self, rng):
        vals = herm_eigvals(random_hermitian(4, rng))
        assert np.all(np.diff(vals) >= 0)

    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidInputError, match="Hermitian"):
            herm_eigvals(SIGMA_MINUS)


class TestLinearAlgebra:
    """Tests for the elementary operator functions."""

    def test_frob_dist(self, rng):
        a = random_ginibre(3, rng)
        assert frob_dist(a, a) == 0.0
        assert frob_dist(SIGMA_X, -SIGMA_X) == pytest.approx(2 * np.sqrt(2))

    def test_trace(self):
        assert trace(identity(3)) == 3
        assert trace(SIGMA_Z) == 0

    def test_dagger_reverses_products(self, rng):
        a, b = random_ginibre(2, rng), random_ginibre(2, rng)
        assert np.allclose(dagger(a @ b), dagger(b) @ dagger(a))


class TestConstants:
    """Tests for the named operators."""

    def test_pauli_algebra(self):
        assert np.allclose(commutator(SIGMA_X, SIGMA_Y), 2j * SIGMA_Z)

    def test_sigma_minus_lowers(self):
        excited = np.array([0, 1], dtype=complex)
        assert np.allclose(SIGMA_MINUS @ excited, [1, 0])
        assert np.allclose(SIGMA_PLUS, dagger(SIGMA_MINUS))

    def test_spin_half_casimir(self):
        jx, jy, jz = spin_half()
        casimir = jx @ jx + jy @ jy + jz @ jz
        assert np.allclose(casimir, 0.75 * np.eye(2))

    def test_presets(self):
        assert set(PRESETS) == {"qubit-decay", "qubit-z", "qubit-xy", "spinhalf-ism"}
        assert len(PRESETS["spinhalf-ism"]) == 3


class TestRandom:
    """Tests for seeded random generation."""

    def test_seed_reproducible(self):
        a = random_ginibre(3, make_rng(5))
        b = random_ginibre(3, make_rng(5))
        assert np.array_equal(a, b)

    def test_generator_passthrough(self, rng):
        assert make_rng(rng) is rng

    def test_spawn_stable(self):
        first = [s.generate_state(1)[0] for s in spawn_seeds(3, 4)]
        second = [s.generate_state(1)[0] for s in spawn_seeds(3, 4)]
        assert first == second
        assert len(set(first)) == 4

    def test_unitary(self, rng):
        u = random_unitary(4, rng)
        assert np.allclose(dagger(u) @ u, np.eye(4), atol=1e-12)

    def test_invertible(self, rng):
        assert abs(np.linalg.det(random_invertible(3, rng))) > 1e-6

    def test_ginibre_rejects_zero_dim(self, rng):
        with pytest.raises(InvalidInputError, match="dim"):
            random_ginibre(0, rng)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1))
    def test_hermitian_exponential_is_unitary(self, seed):
        h = random_hermitian(3, make_rng(seed))
        u = mat_exp(1j * h)
        assert np.allclose(dagger(u) @ u, np.eye(3), atol=1e-12)
