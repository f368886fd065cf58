"""
The commutative analog: a one-dimensional representation of a weak diffusive measurement.

For a real label ``ell`` the Kraus "operator" of a step is the scalar
``exp(-ell^2 kappa dt + ell sqrt(kappa) dW)``. The increments
``(r, x) = (kappa dt, sqrt(kappa) dW)`` add up, so a record of duration ``t`` is
summarized by ``r = kappa t`` and a Gaussian ``x ~ N(0, kappa t)``. The density of
``(r, x)`` obeys the forward equation ``dD/dt = kappa (-dD/dr + 1/2 d^2D/dx^2)``,
solved here both exactly and on a grid.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .exceptions import CFLError, InvalidInputError
from .utils import trapezoid_weights

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

# Gauss-Hermite nodes for Markov-kernel integrals
HERMITE_NODES = 40

# Trapezoid windows: +/- WINDOW sigma around the integrand's centre
WINDOW = 8.0
WINDOW_POINTS = 801

CFL_LIMIT = 0.4
# Default solver step as a fraction of min(dr, dx^2) / kappa
DEFAULT_CFL = 0.2


def heat_kernel(x: npt.ArrayLike, t: float) -> FloatArray:
    """
    Markov kernel ``exp(-x^2 / 2t) / sqrt(2 pi t)``.

    Raises:
        InvalidInputError: If ``t <= 0``.
    """
    if not t > 0:
        raise InvalidInputError(f"heat kernel needs t > 0, got {t}")
    x_arr = np.asarray(x, dtype=float)
    return np.exp(-(x_arr**2) / (2 * t)) / np.sqrt(2 * np.pi * t)


def gaussian_window(centre: float, sigma: float, n_points: int = WINDOW_POINTS) -> FloatArray:
    """Uniform grid on ``centre +/- 8 sigma``."""
    return np.linspace(centre - WINDOW * sigma, centre + WINDOW * sigma, n_points)


def markov_apply(
    fn: Callable[[FloatArray], FloatArray],
    x: npt.ArrayLike,
    dt: float,
    kappa: float,
    n_nodes: int = HERMITE_NODES,
) -> FloatArray:
    """
    Markov operator ``f(x) -> integral G_dt(dW) f(x + sqrt(kappa) dW) d(dW)`` on points ``x``.

    Uses Gauss-Hermite quadrature in ``dW = sqrt(2 dt) u``.
    """
    if not (dt > 0 and kappa > 0):
        raise InvalidInputError("dt and kappa must be positive")
    nodes, weights = np.polynomial.hermite.hermgauss(n_nodes)
    x_arr = np.asarray(x, dtype=float)
    shifts = np.sqrt(kappa * 2 * dt) * nodes
    values = fn(x_arr[..., None] + shifts)
    return np.asarray(values @ weights / np.sqrt(np.pi), dtype=float)


def characteristic_eigenvalue(
    ell: float, dt: float, kappa: float, n_nodes: int = HERMITE_NODES
) -> float:
    """Quadrature of ``int G_dt(dW) exp(2 ell sqrt(kappa) dW)``.

    The exact value is ``exp(2 ell^2 kappa dt)``.
    """
    value = markov_apply(lambda y: np.exp(2 * ell * y), 0.0, dt, kappa, n_nodes)
    return float(value)


def characteristic_eigenvalue_exact(ell: float, dt: float, kappa: float) -> float:
    return float(np.exp(2 * ell**2 * kappa * dt))


def normalized_total(ell: float, dt: float, kappa: float, n_nodes: int = HERMITE_NODES) -> float:
    """Total weight of the trace-preserving step.

    ``integral G_dt exp(-2 ell^2 kappa dt + 2 ell sqrt(kappa) dW)``, equal to 1.
    """
    value = markov_apply(
        lambda y: np.exp(-2 * ell**2 * kappa * dt + 2 * ell * y), 0.0, dt, kappa, n_nodes
    )
    return float(value)


def eigenfunction_residual(ell: float, dt: float, kappa: float, x: npt.ArrayLike) -> float:
    """Largest relative deviation of the Markov operator on ``exp(2 ell x)`` from the eigenvalue."""
    x_arr = np.asarray(x, dtype=float)
    applied = markov_apply(lambda y: np.exp(2 * ell * y), x_arr, dt, kappa)
    expected = characteristic_eigenvalue_exact(ell, dt, kappa) * np.exp(2 * ell * x_arr)
    return float(np.max(np.abs(applied / expected - 1.0)))


def instrument_element(r: npt.ArrayLike, x: npt.ArrayLike, ell: float) -> FloatArray:
    """``exp(-2 ell^2 r + 2 ell x)``, the square of ``kraus_element``."""
    return np.exp(-2 * ell**2 * np.asarray(r, dtype=float) + 2 * ell * np.asarray(x, dtype=float))


def kraus_element(r: npt.ArrayLike, x: npt.ArrayLike, ell: float) -> FloatArray:
    return np.exp(-(ell**2) * np.asarray(r, dtype=float) + ell * np.asarray(x, dtype=float))


def heat_semigroup_residual(s: float, t: float, n_points: int = WINDOW_POINTS) -> float:
    """Grid L1 distance between ``kernel(., s) * kernel(., t)`` and ``kernel(., s + t)``."""
    x = gaussian_window(0.0, np.sqrt(s + t), n_points)
    y = gaussian_window(0.0, np.sqrt(s), n_points)
    conv = heat_kernel(x[:, None] - y[None, :], t) @ (trapezoid_weights(y) * heat_kernel(y, s))
    return float(np.sum(np.abs(conv - heat_kernel(x, s + t)) * trapezoid_weights(x)))


@dataclass(frozen=True)
class ExactKod:
    """
    Exact density ``delta(r - r_support) N(x; 0, variance)``.

    For a duration ``t`` both ``r_support`` and ``variance`` equal ``kappa t``.
    """

    r_support: float
    variance: float

    def x_profile(self, x: npt.ArrayLike) -> FloatArray:
        return heat_kernel(x, self.variance)

    def x_mass(self) -> float:
        x = gaussian_window(0.0, np.sqrt(self.variance))
        return float(trapezoid_weights(x) @ self.x_profile(x))

    def compose(self, other: ExactKod) -> ExactKod:
        """Convolution of two slices; both coordinates add."""
        return ExactKod(self.r_support + other.r_support, self.variance + other.variance)

    def tp_integral(self, ell: float) -> float:
        """``int D(r, x) exp(-2 ell^2 r + 2 ell x) dr dx``; 1 if ``r_support == variance``."""
        sigma = np.sqrt(self.variance)
        # the tilted integrand is a Gaussian centred at 2 ell variance
        x = gaussian_window(2 * ell * self.variance, sigma)
        integrand = self.x_profile(x) * instrument_element(self.r_support, x, ell)
        return float(trapezoid_weights(x) @ integrand)


def exact_kod(t: float, kappa: float) -> ExactKod:
    """
    The Kraus-operator density at time ``t``.

    Raises:
        InvalidInputError: If ``t <= 0`` or ``kappa <= 0``.
    """
    if not (t > 0 and kappa > 0):
        raise InvalidInputError(f"exact_kod needs t > 0 and kappa > 0, got {t}, {kappa}")
    return ExactKod(kappa * t, kappa * t)


def tp_integral(ell: float, t: float, kappa: float) -> float:
    return exact_kod(t, kappa).tp_integral(ell)


@dataclass(frozen=True)
class GridDensity:
    """Density on a uniform ``(r, x)`` grid; ``values[i, j]`` sits at ``(r_grid[i], x_grid[j])``."""

    r_grid: FloatArray
    x_grid: FloatArray
    values: FloatArray

    def __post_init__(self) -> None:
        if self.values.shape != (self.r_grid.size, self.x_grid.size):
            raise InvalidInputError(
                f"values shape {self.values.shape} does not match grids "
                f"({self.r_grid.size}, {self.x_grid.size})"
            )
        if self.r_grid.size < 3 or self.x_grid.size < 3:
            raise InvalidInputError("grids need at least three points")

    @property
    def dr(self) -> float:
        return float(self.r_grid[1] - self.r_grid[0])

    @property
    def dx(self) -> float:
        return float(self.x_grid[1] - self.x_grid[0])

    @property
    def cell_area(self) -> float:
        return self.dr * self.dx

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def x_marginal(self) -> FloatArray:
        return np.asarray(self.values.sum(axis=0) * self.dr, dtype=float)

    def r_mean(self) -> float:
        return float(self.r_grid @ self.values.sum(axis=1) * self.cell_area / self.mass)


def mollified_delta_grid(
    r_grid: npt.ArrayLike,
    x_grid: npt.ArrayLike,
    x_width: float,
    r_width: float | None = None,
) -> GridDensity:
    """
    Gaussian mollifier of ``delta(r) delta(x)`` normalized to unit grid mass.

    The r width defaults to twice the r spacing.
    """
    r = np.asarray(r_grid, dtype=float)
    x = np.asarray(x_grid, dtype=float)
    width_r = 2 * float(r[1] - r[0]) if r_width is None else r_width
    if not (x_width > 0 and width_r > 0):
        raise InvalidInputError("mollifier widths must be positive")
    values = np.outer(heat_kernel(r, width_r**2), heat_kernel(x, x_width**2))
    grid = GridDensity(r, x, values)
    return GridDensity(r, x, values / grid.mass)


def default_grid(
    kappa: float, t_final: float, dx: float = 0.05, dr: float = 0.05, x_half_width: float = 6.0
) -> tuple[FloatArray, FloatArray]:
    """Grids with room for the drift ``kappa t_final`` and its numerical spread."""
    r_max = kappa * t_final + 2.0
    r = np.arange(-0.5, r_max + dr / 2, dr)
    n_x = int(round(2 * x_half_width / dx))
    x = np.linspace(-x_half_width, x_half_width, n_x + 1)
    return r, x


def default_solver_step(grid: GridDensity, kappa: float) -> float:
    return DEFAULT_CFL * min(grid.dr, grid.dx**2) / kappa


def fpk_evolve(
    grid: GridDensity,
    kappa: float,
    t_final: float,
    dt_solver: float | None = None,
    diffusion: bool = True,
) -> GridDensity:
    """
    Evolve a density under ``kappa (-d/dr + 1/2 d^2/dx^2)``.

    Upwind advection in ``r`` (zero inflow at the lower edge) and explicit
    central diffusion in ``x`` with zero-flux edges. The step is shortened
    so that a whole number of steps reaches ``t_final``.

    Raises:
        CFLError: If ``kappa dt_solver > 0.4 min(dr, dx^2)``.
    """
    if not kappa > 0 or t_final < 0:
        raise InvalidInputError("kappa must be positive and t_final nonnegative")
    step = default_solver_step(grid, kappa) if dt_solver is None else dt_solver
    ratio = kappa * step / min(grid.dr, grid.dx**2)
    if ratio > CFL_LIMIT * (1 + 1e-12):
        raise CFLError(ratio, CFL_LIMIT)
    if t_final == 0:
        return grid
    n_steps = int(np.ceil(t_final / step - 1e-9))
    step = t_final / n_steps
    courant = kappa * step / grid.dr
    mu = 0.5 * kappa * step / grid.dx**2
    logger.debug("FPK solver: %d steps, courant %.3f, mu %.3f", n_steps, courant, mu)

    d = grid.values.copy()
    for _ in range(n_steps):
        update = np.zeros_like(d)
        update[0] = -courant * d[0]
        update[1:] = -courant * (d[1:] - d[:-1])
        if diffusion:
            flux = d[:, 1:] - d[:, :-1]
            update[:, :-1] += mu * flux
            update[:, 1:] -= mu * flux
        d += update
    return GridDensity(grid.r_grid, grid.x_grid, d)


def fpk_x_marginal_l1(result: GridDensity, variance: float) -> float:
    """L1 distance of the x-marginal from ``N(0, variance)`` on the grid nodes."""
    exact = heat_kernel(result.x_grid, variance)
    return float(np.sum(np.abs(result.x_marginal() - exact)) * result.dx)


def fpk_convergence_ratio(
    kappa: float, t_final: float, x_width: float, dx_coarse: float = 0.1
) -> tuple[float, float]:
    """
    L1 errors of the x-marginal at ``dx_coarse`` and ``dx_coarse / 2``.

    The solver step is tied to ``dx^2`` so that both errors shrink at the
    stencil's second order.
    """
    errors = []
    for dx in (dx_coarse, dx_coarse / 2):
        r, x = default_grid(kappa, t_final, dx=dx)
        start = mollified_delta_grid(r, x, x_width)
        step = DEFAULT_CFL * min(start.dr, dx**2) / kappa
        result = fpk_evolve(start, kappa, t_final, step)
        errors.append(fpk_x_marginal_l1(result, kappa * t_final + x_width**2))
    return errors[0], errors[1]
