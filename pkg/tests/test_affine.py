"""Tests for the affine group, its Haar measures and delta identities."""

import numpy as np
import pytest

from krauslab.affine import (
    AffineElement,
    GaussianBump,
    LogGrid,
    affine_convolve,
    delta_identity_check,
    delta_identity_order,
    derive_haar_exponent,
    gelfand,
    haar_density,
    haar_invariance_check,
    modular_function,
    modular_gelfand,
    mollifier,
    unimodularity_witness,
)
from krauslab.exceptions import GridError, InvalidInputError


class TestAffineElement:
    """Tests for group elements."""

    def test_validation(self):
        with pytest.raises(InvalidInputError, match="a > 0"):
            AffineElement(0.0, 1.0)
        with pytest.raises(InvalidInputError, match="finite b"):
            AffineElement(1.0, np.inf)

    def test_product_is_composition(self):
        g, h = AffineElement(2.0, 1.0), AffineElement(0.5, -3.0)
        x = 0.7
        assert (g @ h).a * x + (g @ h).b == pytest.approx(g.a * (h.a * x + h.b) + g.b)

    def test_inverse(self):
        g = AffineElement(4.0, -2.0)
        assert g.inverse() == AffineElement(0.25, 0.5)
        assert g @ g.inverse() == AffineElement.identity()

    def test_matrix_is_faithful(self):
        g, h = AffineElement(2.0, 1.0), AffineElement(0.5, -3.0)
        assert np.allclose((g @ h).matrix(), g.matrix() @ h.matrix())


class TestModularFunction:
    """Tests for the modular function."""

    def test_equals_dilation(self):
        assert modular_function(AffineElement(2.5, 7.0)) == pytest.approx(2.5)

    def test_identity(self):
        assert modular_function(AffineElement.identity()) == 1.0

    def test_multiplicative(self, rng):
        for _ in range(10):
            g = AffineElement(float(np.exp(rng.uniform(-2, 2))), float(rng.uniform(-2, 2)))
            h = AffineElement(float(np.exp(rng.uniform(-2, 2))), float(rng.uniform(-2, 2)))
            assert modular_function(g @ h) == pytest.approx(
                modular_function(g) * modular_function(h), rel=1e-14
            )

    def test_density_ratio(self):
        a = np.array([0.5, 2.0, 7.0])
        assert np.allclose(haar_density("right")(a) / haar_density("left")(a), a)


class TestHaar:
    """Tests for the Haar measures by quadrature."""

    @pytest.mark.parametrize("side", ["left", "right"])
    def test_invariance(self, side):
        residual = haar_invariance_check(side, AffineElement(2.0, 1.0))
        assert residual.invariance < 1e-6
        assert residual.quasi_invariance < 1e-6

    def test_wrong_density_is_not_invariant(self):
        residual = haar_invariance_check("left", AffineElement(2.0, 1.0), exponent=1.0)
        assert residual.invariance > 0.1

    def test_unknown_side(self):
        with pytest.raises(InvalidInputError, match="side"):
            haar_invariance_check("middle", AffineElement(2.0))

    def test_leak(self):
        grid = LogGrid.box(-1.0, 1.0, -1.0, 1.0, 0.05)
        with pytest.raises(GridError, match="leaks"):
            haar_invariance_check("left", AffineElement(2.0, 1.0), grid=grid)

    def test_empty_box(self):
        with pytest.raises(GridError, match="empty grid box"):
            LogGrid.box(1.0, -1.0, 0.0, 1.0, 0.1)

    @pytest.mark.parametrize("side,expected", [("left", 2.0), ("right", 1.0)])
    def test_derived_exponent(self, side, expected):
        exponent, residual = derive_haar_exponent(side)
        assert exponent == expected
        assert residual < 1e-6


class TestConvolution:
    """Tests for convolution and the two involutions."""

    def test_convolution_with_mollifier(self):
        f = GaussianBump(0.2, 0.1, 0.4)
        grid = LogGrid.local(AffineElement.identity(), 0.12, 121)
        z = np.array([1.1]), np.array([0.2])
        approx = affine_convolve(mollifier(1e-2), f, *z, grid)
        assert approx[0] == pytest.approx(f(*z)[0], rel=1e-2)

    def test_modular_gelfand(self):
        f = GaussianBump(0.3, 0.2, 0.4, wavenumber=1.0)
        a, b = np.array([1.7]), np.array([0.4])
        assert modular_gelfand(f)(a, b)[0] == pytest.approx(1.7 * gelfand(f)(a, b)[0])

    def test_witness(self):
        report = unimodularity_witness()
        assert report.naive > 0.1
        assert report.corrected < 1e-6
        assert report.antihomomorphism < 1e-6


class TestDeltaIdentities:
    """Tests for mollified delta identities."""

    def test_mollifier_width(self):
        with pytest.raises(InvalidInputError, match="width"):
            mollifier(0.0)

    @pytest.mark.parametrize("which", ["inversion", "conjugation", "translation"])
    def test_order(self, which):
        report = delta_identity_order(which)
        assert report.order >= 1.0
        assert report.residuals[-1] < report.residuals[0]

    def test_conjugation_factor(self):
        f_e = abs(complex(GaussianBump(0.3, -0.2, 0.7)(np.array(1.0), np.array(0.0))))
        residual = delta_identity_check("conjugation", 1e-3)
        assert residual < 1e-2 * f_e / 2.0

    @pytest.mark.slow
    def test_trikernel_order(self):
        assert delta_identity_order("trikernel").order >= 1.0

    def test_unknown(self):
        with pytest.raises(InvalidInputError, match="unknown identity"):
            delta_identity_check("associativity", 1e-2)
