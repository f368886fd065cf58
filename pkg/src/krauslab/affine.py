"""
The affine group ``x -> a x + b`` (``a > 0``), the smallest non-unimodular Lie group.

Integrals run on uniform grids in log coordinates ``(u, b) = (log a, b)``.
A density ``a^-p da db`` becomes ``exp((1 - p) u) du db`` there, so the left
Haar measure ``da db / a^2`` carries the weight ``exp(-u)``. Test functions are
Gaussian bumps in log coordinates; the trapezoid rule is spectrally accurate
on them as long as the grid spacing stays below the bump width.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np
import numpy.typing as npt

from .exceptions import GridError, InvalidInputError
from .utils import fit_order, trapezoid_weights

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
GroupFunction = Callable[[FloatArray, FloatArray], npt.NDArray[np.complexfloating | np.floating]]
Side = Literal["left", "right"]

# Relative integrand magnitude allowed on the edge of a quadrature window
LEAK_TOL = 1e-12
# Candidate Haar density exponents p in a^-p
HAAR_CANDIDATES = tuple(0.5 * k for k in range(7))
# Mollifier widths used to fit the convergence order of the delta identities
DELTA_WIDTHS = (1e-2, 3e-3, 1e-3)
# Local mollifier windows: +/- MOLLIFIER_WINDOW widths with MOLLIFIER_POINTS per axis
MOLLIFIER_WINDOW = 12.0
MOLLIFIER_POINTS = 401
# Bumps are integrated over +/- BUMP_WINDOW standard deviations
BUMP_WINDOW = 6.5
# Quadrature points whose weighted integrand is below this fraction of the peak are dropped
SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class AffineElement:
    """The map ``x -> a x + b``."""

    a: float
    b: float = 0.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.a) and self.a > 0):
            raise InvalidInputError(f"affine elements need a > 0, got a={self.a}")
        if not np.isfinite(self.b):
            raise InvalidInputError(f"affine elements need a finite b, got b={self.b}")

    @classmethod
    def identity(cls) -> AffineElement:
        return cls(1.0, 0.0)

    def __matmul__(self, other: AffineElement) -> AffineElement:
        return affine_mul(self, other)

    def inverse(self) -> AffineElement:
        return affine_inv(self)

    def matrix(self) -> FloatArray:
        """Faithful representation ``[[a, b], [0, 1]]``."""
        return np.array([[self.a, self.b], [0.0, 1.0]])

    @property
    def log_a(self) -> float:
        return float(np.log(self.a))


def affine_mul(g: AffineElement, h: AffineElement) -> AffineElement:
    """``(a2, b2) (a1, b1) = (a2 a1, a2 b1 + b2)``."""
    return AffineElement(g.a * h.a, g.a * h.b + g.b)


def affine_inv(g: AffineElement) -> AffineElement:
    return AffineElement(1.0 / g.a, -g.b / g.a)


def _mul(
    a2: npt.ArrayLike, b2: npt.ArrayLike, a1: npt.ArrayLike, b1: npt.ArrayLike
) -> tuple[FloatArray, FloatArray]:
    """Vectorized product of ``(a2, b2)`` and ``(a1, b1)``."""
    x2, y2, x1, y1 = (np.asarray(v, dtype=float) for v in (a2, b2, a1, b1))
    return x2 * x1, x2 * y1 + y2


def _inv(a: npt.ArrayLike, b: npt.ArrayLike) -> tuple[FloatArray, FloatArray]:
    a_arr, b_arr = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return 1.0 / a_arr, -b_arr / a_arr


# Lie algebra basis in the matrix representation: dilation, translation
_LIE_BASIS = (np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[0.0, 1.0], [0.0, 0.0]]))


def adjoint_matrix(g: AffineElement) -> FloatArray:
    """Matrix of ``X -> g X g^-1`` in the (dilation, translation) basis."""
    m, m_inv = g.matrix(), np.linalg.inv(g.matrix())
    columns = []
    for x in _LIE_BASIS:
        image = m @ x @ m_inv
        columns.append([image[0, 0], image[0, 1]])
    return np.array(columns).T


def modular_function(g: AffineElement) -> float:
    """``Delta(g) = |det Ad_g|``; with this convention ``d_R x = Delta(x) d_L x``."""
    ad = adjoint_matrix(g)
    # 2x2 determinant written out so Delta(x y) = Delta(x) Delta(y) holds to rounding
    return float(abs(ad[0, 0] * ad[1, 1] - ad[0, 1] * ad[1, 0]))


def haar_density(side: Side, exponent: float | None = None) -> Callable[[FloatArray], FloatArray]:
    """
    Density ``a^-p`` with respect to ``da db``, equal to 1 at the identity.

    The default exponents (2 left, 1 right) are the ones ``derive_haar_exponent``
    selects.
    """
    p = exponent if exponent is not None else (2.0 if side == "left" else 1.0)
    return lambda a: np.asarray(a, dtype=float) ** (-p)


@dataclass(frozen=True)
class LogGrid:
    """
    Uniform tensor grid in ``(u, b) = (log a, b)``.

    Weights are trapezoid weights times ``a^(1 - p)`` for a density ``a^-p``.
    """

    u: FloatArray
    b: FloatArray

    @classmethod
    def box(
        cls, u_lo: float, u_hi: float, b_lo: float, b_hi: float, spacing: float
    ) -> LogGrid:
        if not (u_hi > u_lo and b_hi > b_lo and spacing > 0):
            raise GridError(f"empty grid box ({u_lo}, {u_hi}) x ({b_lo}, {b_hi})")
        nu = int(np.ceil((u_hi - u_lo) / spacing)) + 1
        nb = int(np.ceil((b_hi - b_lo) / spacing)) + 1
        return cls(np.linspace(u_lo, u_hi, nu), np.linspace(b_lo, b_hi, nb))

    @classmethod
    def local(
        cls, centre: AffineElement, half_width: float, points: int, b_scale: float = 1.0
    ) -> LogGrid:
        """Window of +/- ``half_width`` in u and ``b_scale`` times that in b, around ``centre``."""
        half_u = half_width
        half_b = half_width * b_scale
        return cls(
            np.linspace(centre.log_a - half_u, centre.log_a + half_u, points),
            np.linspace(centre.b - half_b, centre.b + half_b, points),
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.u.size, self.b.size)

    def points(self) -> tuple[FloatArray, FloatArray]:
        """Flattened ``(a, b)`` coordinates."""
        uu, bb = np.meshgrid(self.u, self.b, indexing="ij")
        return np.exp(uu).ravel(), bb.ravel()

    def weights(self, exponent: float = 2.0) -> FloatArray:
        """Quadrature weights for ``a^-exponent da db``."""
        wu = trapezoid_weights(self.u) * np.exp((1.0 - exponent) * self.u)
        wb = trapezoid_weights(self.b)
        return np.outer(wu, wb).ravel()

    def edge_mask(self) -> npt.NDArray[np.bool_]:
        mask = np.zeros(self.shape, dtype=bool)
        mask[[0, -1], :] = True
        mask[:, [0, -1]] = True
        return mask.ravel()


@dataclass(frozen=True)
class GaussianBump:
    """``exp(-((log a - u0)^2 + (b - b0)^2) / 2 s^2 + i k b)``."""

    u0: float = 0.0
    b0: float = 0.0
    s: float = 0.4
    wavenumber: float = 0.0

    def __call__(self, a: npt.ArrayLike, b: npt.ArrayLike) -> npt.NDArray[np.complex128]:
        u = np.log(np.asarray(a, dtype=float))
        b_arr = np.asarray(b, dtype=float)
        r2 = (u - self.u0) ** 2 + (b_arr - self.b0) ** 2
        return np.exp(-r2 / (2 * self.s**2) + 1j * self.wavenumber * b_arr)

    def box(self, n_sigma: float = BUMP_WINDOW) -> tuple[float, float, float, float]:
        half = n_sigma * self.s
        return (self.u0 - half, self.u0 + half, self.b0 - half, self.b0 + half)

    def inverse_box(self, n_sigma: float = BUMP_WINDOW) -> tuple[float, float, float, float]:
        """Log-coordinate box containing ``{x : x^-1 in box()}``."""
        u_lo, u_hi, b_lo, b_hi = self.box(n_sigma)
        corners = [-b * np.exp(-u) for u in (u_lo, u_hi) for b in (b_lo, b_hi)]
        return (-u_hi, -u_lo, min(corners), max(corners))


def _check_leak(values: npt.ArrayLike, grid: LogGrid, what: str) -> None:
    v = np.abs(np.asarray(values))
    peak = v.max(initial=0.0)
    edge = v[grid.edge_mask()].max(initial=0.0)
    if peak == 0 or edge > LEAK_TOL * peak:
        ratio = edge / max(peak, 1e-300)
        raise GridError(f"{what} leaks the quadrature window (edge/peak = {ratio:.2e})")


DEFAULT_HAAR_GRID = LogGrid.box(-7.0, 7.0, -12.0, 12.0, 0.04)


class HaarResidual(NamedTuple):
    """Relative residuals of invariance and quasi-invariance under one group element."""

    invariance: float
    quasi_invariance: float


def haar_invariance_check(
    side: Side,
    g0: AffineElement,
    test_fn: GroupFunction | None = None,
    exponent: float | None = None,
    grid: LogGrid | None = None,
) -> HaarResidual:
    """
    Check a candidate Haar density by quadrature.

    For ``side="left"``: ``int d_L x f(g0 x) = int d_L x f(x)`` and
    ``int d_L x f(x g0) = Delta(g0) int d_L x f(x)``. For ``side="right"``:
    ``int d_R x f(x g0) = int d_R x f(x)`` and
    ``int d_R x f(g0 x) = int d_R x f(x) / Delta(g0)``.

    Raises:
        GridError: If any integrand reaches the edge of the grid.
    """
    if side not in ("left", "right"):
        raise InvalidInputError(f"side must be 'left' or 'right', got '{side}'")
    fn = test_fn or GaussianBump()
    grid = grid or DEFAULT_HAAR_GRID
    p = exponent if exponent is not None else (2.0 if side == "left" else 1.0)
    a, b = grid.points()
    w = grid.weights(p)
    g_a, g_b = np.full_like(a, g0.a), np.full_like(b, g0.b)

    plain = fn(a, b)
    left_shifted = fn(*_mul(g_a, g_b, a, b))
    right_shifted = fn(*_mul(a, b, g_a, g_b))
    for values, what in ((plain, "f"), (left_shifted, "f(g0 x)"), (right_shifted, "f(x g0)")):
        _check_leak(values * w, grid, what)

    base = complex(np.sum(w * plain))
    delta = modular_function(g0)
    if side == "left":
        invariant, quasi, factor = left_shifted, right_shifted, delta
    else:
        invariant, quasi, factor = right_shifted, left_shifted, 1.0 / delta
    inv_res = abs(complex(np.sum(w * invariant)) - base) / abs(base)
    quasi_res = abs(complex(np.sum(w * quasi)) - factor * base) / abs(base)
    logger.debug("%s Haar check at %s: invariance %.3e, quasi %.3e", side, g0, inv_res, quasi_res)
    return HaarResidual(float(inv_res), float(quasi_res))


def derive_haar_exponent(
    side: Side,
    g0: AffineElement | None = None,
    candidates: tuple[float, ...] = HAAR_CANDIDATES,
) -> tuple[float, float]:
    """
    Select the density ``a^-p`` whose invariance residual is smallest.

    Returns:
        ``(p, residual)`` for the winning candidate.
    """
    g0 = g0 or AffineElement(2.0, 1.0)
    residuals = {p: haar_invariance_check(side, g0, exponent=p).invariance for p in candidates}
    best = min(residuals, key=residuals.__getitem__)
    logger.info("%s Haar exponent candidates: %s -> p=%g", side, residuals, best)
    return best, residuals[best]


def affine_convolve(
    g: GroupFunction,
    f: GroupFunction,
    z_a: npt.ArrayLike,
    z_b: npt.ArrayLike,
    y_grid: LogGrid,
    chunk: int = 256,
) -> npt.NDArray[np.complex128]:
    """
    ``(g*f)(z) = int d_L y g(y) f(y^-1 z)`` at the points ``z``, integrating over ``y_grid``.

    ``y_grid`` must cover the support of ``g``; points where ``g`` is negligible
    are dropped.
    """
    ya, yb = y_grid.points()
    gy = y_grid.weights(2.0) * g(ya, yb)
    keep = _support(gy)
    gy, ya, yb = gy[keep], ya[keep], yb[keep]
    inv_a, inv_b = _inv(ya, yb)
    za = np.atleast_1d(np.asarray(z_a, dtype=float))
    zb = np.atleast_1d(np.asarray(z_b, dtype=float))
    out = np.empty(za.size, dtype=complex)
    for start in range(0, za.size, chunk):
        sl = slice(start, start + chunk)
        pa, pb = _mul(inv_a[None, :], inv_b[None, :], za[sl, None], zb[sl, None])
        out[sl] = f(pa, pb) @ gy
    return out


def gelfand(f: GroupFunction) -> GroupFunction:
    """``f^(x) = conj(f(x^-1))``."""
    return lambda a, b: np.conj(f(*_inv(a, b)))


def modular_gelfand(f: GroupFunction) -> GroupFunction:
    """``Delta(x) conj(f(x^-1))``, the involution adjoint to left convolution on any group."""
    return lambda a, b: np.asarray(a, dtype=float) * np.conj(f(*_inv(a, b)))


def _support(weighted: npt.ArrayLike, rel: float = SUPPORT_TOL) -> npt.NDArray[np.bool_]:
    v = np.abs(np.asarray(weighted))
    return v > rel * v.max(initial=0.0)


def _weighted_support(
    fn: GroupFunction, grid: LogGrid
) -> tuple[FloatArray, FloatArray, npt.NDArray[np.complex128]]:
    """Grid points where ``fn`` matters, with ``weight * fn`` there."""
    a, b = grid.points()
    values = grid.weights(2.0) * fn(a, b)
    keep = _support(values)
    return a[keep], b[keep], values[keep]


class WitnessReport(NamedTuple):
    """Kolmogorov-adjoint residuals of left convolution on the affine group."""

    naive: float
    corrected: float
    antihomomorphism: float


# Witness bumps: f sits at u0 = 0.5 so Delta ~ 1.6 over its support
WITNESS_F = GaussianBump(0.5, 0.2, 0.3, wavenumber=1.0)
WITNESS_G = GaussianBump(0.4, 0.3, 0.3)
WITNESS_H = GaussianBump(-0.1, 0.1, 0.3)
WITNESS_SPACING = 0.05
# (g*f) is evaluated near the product of the g and f centres
WITNESS_POINTS = ((0.9, 0.6), (0.7, 0.3), (1.1, 0.8))


def unimodularity_witness(
    f: GaussianBump = WITNESS_F,
    g: GaussianBump = WITNESS_G,
    h: GaussianBump = WITNESS_H,
    spacing: float = WITNESS_SPACING,
) -> WitnessReport:
    """
    Measure how far the Gelfand involution is from the left-Haar adjoint of convolution.

    ``naive`` is ``|(g, f*h) - (f^*g, h)| / |(g, f*h)|`` with ``f^`` the Gelfand
    involution, which vanishes on unimodular groups only. ``corrected`` uses
    ``Delta(x) conj(f(x^-1))`` instead. ``antihomomorphism`` is the largest
    relative ``|(g*f)^ - f^ * g^|`` over a few points; it holds on every group.
    """
    f_grid = LogGrid.box(*f.box(), spacing)
    f_inv_grid = LogGrid.box(*f.inverse_box(), spacing)
    g_grid = LogGrid.box(*g.box(), spacing)
    h_grid = LogGrid.box(*h.box(), spacing)

    # (g, f*h): z over supp g, y over supp f
    za, zb, wg = _weighted_support(g, g_grid)
    lhs = complex(np.conj(wg) @ affine_convolve(f, h, za, zb, f_grid))

    # (f~*g, h): z over supp h, y over supp f~ = (supp f)^-1
    za, zb, wh = _weighted_support(h, h_grid)
    naive_conv = affine_convolve(gelfand(f), g, za, zb, f_inv_grid)
    corrected_conv = affine_convolve(modular_gelfand(f), g, za, zb, f_inv_grid)
    naive_rhs = complex(np.conj(naive_conv) @ wh)
    corrected_rhs = complex(np.conj(corrected_conv) @ wh)

    naive = abs(lhs - naive_rhs) / abs(lhs)
    corrected = abs(lhs - corrected_rhs) / abs(lhs)

    # (g*f)^(z) = conj((g*f)(z^-1)) against (f^ * g^)(z), with z^-1 = q
    qa = np.exp([u for u, _ in WITNESS_POINTS])
    qb = np.array([v for _, v in WITNESS_POINTS])
    pa, pb = _inv(qa, qb)
    lhs_pts = np.conj(affine_convolve(g, f, qa, qb, g_grid))
    rhs_pts = affine_convolve(gelfand(f), gelfand(g), pa, pb, f_inv_grid)
    anti = float(np.max(np.abs(lhs_pts - rhs_pts)) / np.max(np.abs(lhs_pts)))
    logger.info("unimodularity witness: naive %.3e, corrected %.3e", naive, corrected)
    return WitnessReport(float(naive), float(corrected), anti)


def mollifier(width: float) -> GroupFunction:
    """
    Gaussian ``delta_w`` in log coordinates, normalized so ``int d_L x delta_w(x) = 1``.

    Raises:
        InvalidInputError: If ``width`` is not positive.
    """
    if not width > 0:
        raise InvalidInputError(f"mollifier width must be positive, got {width}")
    grid = LogGrid.local(AffineElement.identity(), MOLLIFIER_WINDOW * width, MOLLIFIER_POINTS)
    a, b = grid.points()
    bump = GaussianBump(0.0, 0.0, width)
    norm = float(np.real(np.sum(grid.weights(2.0) * bump(a, b))))

    def delta_w(a: FloatArray, b: FloatArray) -> npt.NDArray[np.complex128]:
        return bump(a, b) / norm

    return delta_w


# Default points for the delta identities
DELTA_TEST_FN = GaussianBump(0.3, -0.2, 0.7)
DELTA_TEST_G = GaussianBump(0.1, 0.2, 0.4)
CONJUGATOR = AffineElement(2.0, 0.0)
TRANSLATION_POINT = AffineElement(1.5, 0.5)
TRIKERNEL_POINT = AffineElement(1.2, 0.3)
TRIKERNEL_INNER_POINTS = 81
TRIKERNEL_INNER_WINDOW = 7.0
TRIKERNEL_OUTER_SPACING = 0.15

DeltaIdentity = Literal["inversion", "conjugation", "translation", "trikernel"]


def _mollified_integral(
    delta_w: GroupFunction,
    argument: Callable[[FloatArray, FloatArray], tuple[FloatArray, FloatArray]],
    centre: AffineElement,
    width: float,
    fn: GroupFunction,
    points: int = MOLLIFIER_POINTS,
    window: float = MOLLIFIER_WINDOW,
    b_scale: float = 1.0,
) -> complex:
    """``int d_L x delta_w(argument(x)) fn(x)`` on a window around ``centre``."""
    grid = LogGrid.local(centre, window * width, points, b_scale)
    a, b = grid.points()
    return complex(np.sum(grid.weights(2.0) * delta_w(*argument(a, b)) * fn(a, b)))


def delta_identity_check(
    which: DeltaIdentity,
    width: float,
    point: AffineElement | None = None,
    test_fn: GroupFunction = DELTA_TEST_FN,
) -> float:
    """
    Residual of one delta identity with the mollifier ``delta_w``.

    - ``inversion``: ``int d_L x delta_w(x^-1) f(x)`` against ``f(e)``
    - ``conjugation``: ``int d_L x delta_w(g x g^-1) f(x)`` against ``f(e) / Delta(g)``
    - ``translation``: ``int d_L x delta_w(x0^-1 x) f(x)`` against ``f(x0)``
    - ``trikernel``: ``int int d_L y d_L x delta_w((y x)^-1 z) g(y) f(x)`` against ``(g*f)(z)``

    ``point`` is ``g``, ``x0`` or ``z`` respectively.
    """
    delta_w = mollifier(width)
    e = AffineElement.identity()
    f_e = complex(np.asarray(test_fn(np.array(1.0), np.array(0.0))))

    if which == "inversion":
        value = _mollified_integral(delta_w, _inv, e, width, test_fn)
        return abs(value - f_e)

    if which == "conjugation":
        g = point or CONJUGATOR
        gi = g.inverse()

        def conj_arg(a: FloatArray, b: FloatArray) -> tuple[FloatArray, FloatArray]:
            ga, gb = _mul(g.a, g.b, a, b)
            return _mul(ga, gb, gi.a, gi.b)

        # support in b shrinks by 1/g.a
        value = _mollified_integral(
            delta_w, conj_arg, e, width, test_fn, b_scale=(1.0 + abs(g.b)) / g.a
        )
        return abs(value - f_e / modular_function(g))

    if which == "translation":
        x0 = point or TRANSLATION_POINT
        x0i = x0.inverse()
        value = _mollified_integral(
            delta_w, lambda a, b: _mul(x0i.a, x0i.b, a, b), x0, width, test_fn, b_scale=x0.a
        )
        return abs(value - complex(np.asarray(test_fn(np.array(x0.a), np.array(x0.b)))))

    if which == "trikernel":
        z = point or TRIKERNEL_POINT
        outer = LogGrid.box(*DELTA_TEST_G.box(), TRIKERNEL_OUTER_SPACING)
        ya, yb = outer.points()
        wy = outer.weights(2.0) * DELTA_TEST_G(ya, yb)
        direct = np.empty(ya.size, dtype=complex)
        mollified = np.empty(ya.size, dtype=complex)
        for k, (a_y, b_y) in enumerate(zip(ya, yb)):
            y = AffineElement(float(a_y), float(b_y))
            x0 = y.inverse() @ z
            direct[k] = complex(np.asarray(test_fn(np.array(x0.a), np.array(x0.b))))

            def kernel_arg(
                a: FloatArray, b: FloatArray, y: AffineElement = y
            ) -> tuple[FloatArray, FloatArray]:
                yxa, yxb = _mul(y.a, y.b, a, b)
                ia, ib = _inv(yxa, yxb)
                return _mul(ia, ib, z.a, z.b)

            mollified[k] = _mollified_integral(
                delta_w,
                kernel_arg,
                x0,
                width,
                test_fn,
                points=TRIKERNEL_INNER_POINTS,
                window=TRIKERNEL_INNER_WINDOW,
                b_scale=x0.a,
            )
        return abs(complex(wy @ mollified) - complex(wy @ direct))

    raise InvalidInputError(
        f"unknown identity '{which}' (use inversion, conjugation, translation or trikernel)"
    )


class DeltaReport(NamedTuple):
    which: str
    widths: tuple[float, ...]
    residuals: tuple[float, ...]
    order: float


def delta_identity_order(
    which: DeltaIdentity,
    widths: tuple[float, ...] = DELTA_WIDTHS,
    point: AffineElement | None = None,
) -> DeltaReport:
    """Residuals over shrinking mollifier widths and their fitted order."""
    residuals = tuple(delta_identity_check(which, w, point) for w in widths)
    order = fit_order(widths, residuals)
    logger.info("delta %s: residuals %s, order %.2f", which, residuals, order)
    return DeltaReport(which, tuple(widths), residuals, order)
