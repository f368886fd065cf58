"""Tests for the one-dimensional commutative analog."""

import math

import numpy as np
import pytest

from krauslab.commutative import (
    ExactKod,
    GridDensity,
    characteristic_eigenvalue,
    characteristic_eigenvalue_exact,
    default_grid,
    eigenfunction_residual,
    exact_kod,
    fpk_convergence_ratio,
    fpk_evolve,
    fpk_x_marginal_l1,
    gaussian_window,
    heat_kernel,
    heat_semigroup_residual,
    instrument_element,
    kraus_element,
    mollified_delta_grid,
    normalized_total,
    tp_integral,
)
from krauslab.exceptions import CFLError, InvalidInputError
from krauslab.utils import trapezoid_weights


class TestMarkovOperator:
    """Tests for the characteristic eigenvalue and its eigenfunction."""

    def test_heat_kernel_mass(self):
        x = gaussian_window(0.0, 1.0)
        assert trapezoid_weights(x) @ heat_kernel(x, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_heat_kernel_time(self):
        with pytest.raises(InvalidInputError, match="t > 0"):
            heat_kernel(0.0, 0.0)

    @pytest.mark.parametrize("ell", [-1.3, 0.0, 0.7, 2.0])
    def test_characteristic_eigenvalue(self, ell):
        approx = characteristic_eigenvalue(ell, 1e-3, 1.0)
        assert approx == pytest.approx(characteristic_eigenvalue_exact(ell, 1e-3, 1.0), rel=1e-12)

    def test_normalized_total(self):
        assert normalized_total(0.7, 1e-2, 2.0) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("ell", [-1.0, -0.5, 0.0, 0.5, 1.0])
    @pytest.mark.parametrize("dt", [1e-3, 1e-2])
    def test_eigenfunction(self, ell, dt):
        x = np.linspace(-2, 2, 11)
        assert eigenfunction_residual(ell, dt, 1.0, x) < 1e-6

    def test_kraus_squares_to_element(self):
        r, x = 0.4, np.array([-1.0, 0.3])
        assert np.allclose(kraus_element(r, x, 0.7) ** 2, instrument_element(r, x, 0.7))

    def test_heat_semigroup(self):
        assert heat_semigroup_residual(0.4, 0.6) < 1e-8


class TestExactKod:
    """Tests for the closed-form Kraus-operator density."""

    def test_coordinates(self):
        kod = exact_kod(0.5, 2.0)
        assert kod == ExactKod(1.0, 1.0)
        assert kod.x_mass() == pytest.approx(1.0, abs=1e-10)

    def test_compose(self):
        assert exact_kod(0.25, 1.0).compose(exact_kod(0.75, 1.0)) == exact_kod(1.0, 1.0)

    @pytest.mark.parametrize("ell", [0.0, 0.7, -1.5])
    def test_trace_preserving(self, ell):
        assert tp_integral(ell, 1.0, 1.0) == pytest.approx(1.0, abs=1e-8)

    def test_mismatched_support_is_not_normalized(self):
        assert ExactKod(1.0, 2.0).tp_integral(0.7) == pytest.approx(math.exp(2 * 0.49), rel=1e-8)

    def test_validation(self):
        with pytest.raises(InvalidInputError, match="exact_kod"):
            exact_kod(0.0, 1.0)


class TestGridDensity:
    """Tests for grid densities."""

    def test_shape(self):
        with pytest.raises(InvalidInputError, match="does not match"):
            GridDensity(np.arange(3.0), np.arange(4.0), np.zeros((4, 3)))

    def test_minimum_size(self):
        with pytest.raises(InvalidInputError, match="three points"):
            GridDensity(np.arange(2.0), np.arange(4.0), np.zeros((2, 4)))

    def test_mollifier_mass(self):
        r, x = default_grid(1.0, 0.2, dx=0.1)
        start = mollified_delta_grid(r, x, 0.25)
        assert start.mass == pytest.approx(1.0)
        assert start.r_mean() == pytest.approx(0.0, abs=1e-6)

    def test_mollifier_widths(self):
        r, x = default_grid(1.0, 0.2, dx=0.1)
        with pytest.raises(InvalidInputError, match="widths"):
            mollified_delta_grid(r, x, 0.0)


class TestFpkSolver:
    """Tests for the grid forward equation."""

    @pytest.fixture
    def start(self):
        r, x = default_grid(1.0, 0.3, dx=0.1)
        return mollified_delta_grid(r, x, 0.25)

    def test_cfl(self, start):
        with pytest.raises(CFLError, match="CFL violation"):
            fpk_evolve(start, 1.0, 0.3, dt_solver=0.01)

    def test_zero_time(self, start):
        assert fpk_evolve(start, 1.0, 0.0) is start

    def test_mass_and_drift(self, start):
        result = fpk_evolve(start, 1.0, 0.3)
        assert result.mass == pytest.approx(1.0, abs=1e-8)
        assert result.r_mean() == pytest.approx(start.r_mean() + 0.3, abs=1e-6)

    def test_drift_without_diffusion(self, start):
        result = fpk_evolve(start, 1.0, 0.3, diffusion=False)
        assert np.allclose(result.x_marginal(), start.x_marginal(), atol=1e-8)

    def test_marginal_is_gaussian(self, start):
        result = fpk_evolve(start, 1.0, 0.3)
        assert fpk_x_marginal_l1(result, 0.3 + 0.25**2) < 1e-2

    def test_second_order(self):
        coarse, fine = fpk_convergence_ratio(1.0, 0.5, 0.25)
        assert fine < coarse
        assert math.log2(coarse / fine) > 1.7
