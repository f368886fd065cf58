"""
Representation-level checks of the instrumental group.

Group elements are represented by invertible Kraus matrices, ``K_y K_x = K_yx``,
and by their instrument elements ``O_x = sandwich(K_x, K_x)``. Invariant
derivatives are evaluated by central differences; the intertwining relations
between ultraoperators and superoperators are checked by exact matrix algebra
through the substitution ``X_R^M[O_x] = (M . 1 + 1 . M^dagger) o O_x``.

The abelian case (one Hermitian Lindblad operator) has closed-form Kraus
products ``exp(-L^2 r + L x)``; its Kraus-operator density is estimated here
from sampled records.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
import numpy.typing as npt
import scipy.stats

from .exceptions import InvalidInputError, UnsupportedError
from .instrument import Instrument, convolve, total_operation
from .operators import (
    Operator,
    SeedLike,
    as_operator,
    check_same_dim,
    commutator,
    dagger,
    is_hermitian,
    mat_exp,
    mat_exp_batch,
    spawn_seeds,
)
from .superop import SuperOperator, hs_adjoint, lindblad_dissipator, sandwich
from .trajectory import MeasurementRecord, RecordKind

logger = logging.getLogger(__name__)

H_MIN, H_MAX = 1e-6, 1e-2
DEFAULT_H = 1e-4

# Histogram layout for Kraus-operator densities
KOD_BINS = 101
KOD_HALF_WIDTH = 5.0

# Trajectories per sampling chunk for abelian coordinates
_COORD_CHUNK = 1000


class GeneratorKind(str, Enum):
    JUMP = "jump"
    DIFFUSIVE = "diffusive"


@dataclass(frozen=True)
class RepPoint:
    """Group element given by an invertible Kraus matrix."""

    kraus: Operator

    def __post_init__(self) -> None:
        k = as_operator(self.kraus, "Kraus matrix")
        if abs(np.linalg.det(k)) <= 1e-12:
            raise InvalidInputError("RepPoint requires an invertible Kraus matrix")
        object.__setattr__(self, "kraus", k)

    @property
    def dim(self) -> int:
        return int(self.kraus.shape[0])

    @property
    def superop(self) -> SuperOperator:
        return sandwich(self.kraus, self.kraus)

    def __matmul__(self, other: RepPoint) -> RepPoint:
        return RepPoint(self.kraus @ other.kraus)

    def inverse(self) -> RepPoint:
        return RepPoint(np.linalg.inv(self.kraus))

    def dagger(self) -> RepPoint:
        return RepPoint(dagger(self.kraus))


@dataclass(frozen=True)
class AbelianCoord:
    """Coordinates ``(r, x)`` of ``exp(-L^2 r + L x)``; composition adds them."""

    r: float
    x: float

    def __add__(self, other: AbelianCoord) -> AbelianCoord:
        return AbelianCoord(self.r + other.r, self.x + other.x)


@dataclass(frozen=True)
class KodHistogram:
    """Normalized histogram of the ``x`` coordinate on the slice ``r``."""

    r: float
    edges: npt.NDArray[np.float64]
    density: npt.NDArray[np.float64]

    @property
    def midpoints(self) -> npt.NDArray[np.float64]:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def width(self) -> float:
        return float(self.edges[1] - self.edges[0])

    @property
    def mass(self) -> float:
        return float(self.density.sum() * self.width)


@dataclass(frozen=True)
class CommutatorEnsemble:
    """Mean of ``C - 1`` over sampled increment pairs with its Frobenius standard error."""

    mean_norm: float
    stderr: float
    n_samples: int


def _check_h(h: float) -> None:
    if not H_MIN <= h <= H_MAX:
        raise InvalidInputError(f"finite-difference step h must lie in [{H_MIN}, {H_MAX}], got {h}")


def right_translation_generator(direction: npt.ArrayLike) -> SuperOperator:
    """``M . 1 + 1 . M^dagger``, the action of ``X_R^M`` on instrument elements."""
    m = as_operator(direction, "direction")
    eye = np.eye(m.shape[0], dtype=complex)
    return sandwich(m, eye) + sandwich(eye, m)


def right_inv_derivative(
    direction: npt.ArrayLike, point: RepPoint, h: float = DEFAULT_H, level: str = "kraus"
) -> Operator | SuperOperator:
    """
    Central difference ``(f(e^{hL} x) - f(e^{-hL} x)) / 2h``.

    Args:
        direction: Lie-algebra direction ``L``.
        point: Group element ``x``.
        h: Step, within ``[1e-6, 1e-2]``.
        level: ``"kraus"`` differentiates ``K_x`` (limit ``L K_x``);
            ``"superop"`` differentiates ``O_x`` (limit ``(L . 1 + 1 . L^dagger) o O_x``).
    """
    _check_h(h)
    m = as_operator(direction, "direction")
    check_same_dim(m, point.kraus)
    forward = mat_exp(h * m) @ point.kraus
    backward = mat_exp(-h * m) @ point.kraus
    if level == "kraus":
        return (forward - backward) / (2 * h)
    if level == "superop":
        return (sandwich(forward, forward) - sandwich(backward, backward)) / (2 * h)
    raise InvalidInputError(f"level must be 'kraus' or 'superop', got '{level}'")


def lie_bracket_residual(
    a: npt.ArrayLike, b: npt.ArrayLike, point: RepPoint, h: float = 1e-3
) -> float:
    """
    Distance of ``[X_R^A, X_R^B] K_x`` (nested central differences) from ``-[A, B] K_x``.

    Right-invariant derivatives form a Lie-algebra anti-homomorphism.
    """
    _check_h(h)
    a_op = as_operator(a, "direction")
    b_op = as_operator(b, "direction")
    k = point.kraus

    def nested(first: Operator, second: Operator) -> Operator:
        # X^first X^second f(x) = d/ds d/dt f(e^{t second} e^{s first} x)
        total = np.zeros_like(k)
        for s_sign in (1, -1):
            for t_sign in (1, -1):
                moved = mat_exp(t_sign * h * second) @ mat_exp(s_sign * h * first) @ k
                total += s_sign * t_sign * moved
        return total / (4 * h * h)

    bracket = nested(a_op, b_op) - nested(b_op, a_op)
    return float(np.linalg.norm(bracket + commutator(a_op, b_op) @ k))


def translation_intertwining_check(g: RepPoint, x: RepPoint) -> float:
    """Residual of ``O_{gx} = O_g o O_x``."""
    return float(np.linalg.norm((g @ x).superop - g.superop @ x.superop))


def adjoint_intertwining_check(x: RepPoint) -> float:
    """Residual of ``(O_x)^adj = O_{x^dagger}``."""
    return float(np.linalg.norm(hs_adjoint(x.superop) - x.dagger().superop))


def differential_intertwining_check(
    direction: npt.ArrayLike, x: RepPoint, h: float = DEFAULT_H
) -> float:
    """Distance of the finite-difference ``X_R^L[O_x]`` from ``(L . 1 + 1 . L^dagger) o O_x``."""
    fd = right_inv_derivative(direction, x, h, level="superop")
    return float(np.linalg.norm(fd - right_translation_generator(direction) @ x.superop))


def total_operation_intertwining_check(later: Instrument, earlier: Instrument) -> float:
    """Residual of ``Z_{G*D} = Z_G o Z_D`` for weighted point distributions."""
    combined = total_operation(convolve(later, earlier))
    return float(np.linalg.norm(combined - total_operation(later) @ total_operation(earlier)))


def forward_generator_action(
    lindblads: Sequence[npt.ArrayLike], x: RepPoint, kind: str | GeneratorKind
) -> SuperOperator:
    """
    Apply the summed forward generator to ``O_x``.

    Diffusive: ``-1/2 X_R^{L^dagger L + L^2} + 1/2 X_R^L X_R^L``; jump:
    ``-1/2 X_R^{L^dagger L} + left translation by L``.
    """
    gen_kind = GeneratorKind(kind)
    out = np.zeros_like(x.superop)
    for lindblad in lindblads:
        op = as_operator(lindblad, "Lindblad operator")
        decay = dagger(op) @ op
        if gen_kind is GeneratorKind.DIFFUSIVE:
            step = right_translation_generator(op)
            drift = -0.5 * right_translation_generator(decay + op @ op)
            out += (drift + 0.5 * step @ step) @ x.superop
        else:
            out += (-0.5 * right_translation_generator(decay) + sandwich(op, op)) @ x.superop
    return out


def generator_intertwining_check(
    lindblads: npt.ArrayLike | Sequence[npt.ArrayLike], x: RepPoint, kind: str | GeneratorKind
) -> float:
    """Residual of the forward-generator action against ``D[L] o O_x``."""
    ops = [as_operator(lindblads)] if np.ndim(lindblads) == 2 else list(lindblads)
    ops = [as_operator(op) for op in ops]
    check_same_dim(x.kraus, *ops)
    expected = lindblad_dissipator(ops) @ x.superop
    return float(np.linalg.norm(forward_generator_action(ops, x, kind) - expected))


def _weak_kraus(
    op: Operator, increments: npt.NDArray[np.float64], kappa: float, dt: float
) -> npt.NDArray[np.complex128]:
    base = -0.5 * kappa * dt * (dagger(op) @ op + op @ op)
    return mat_exp_batch(base + np.sqrt(kappa) * increments[:, None, None] * op)


def _group_commutators(
    l_op: Operator,
    m_op: Operator,
    dw: npt.NDArray[np.float64],
    dv: npt.NDArray[np.float64],
    kappa: float,
    dt: float,
) -> npt.NDArray[np.complex128]:
    k_l = _weak_kraus(l_op, dw, kappa, dt)
    k_m = _weak_kraus(m_op, dv, kappa, dt)
    return np.linalg.inv(k_l @ k_m) @ k_m @ k_l


def weak_commutator_residual(
    lindblad: npt.ArrayLike,
    other: npt.ArrayLike,
    dw: float,
    dv: float,
    kappa: float,
    dt: float,
) -> tuple[float, float]:
    """
    Group commutator ``C = (K^L K^M)^-1 K^M K^L`` of two weak diffusive Kraus operators.

    Returns:
        ``(||C - exp([M, L] kappa dV dW)||, ||C - 1||)``.
    """
    l_op = as_operator(lindblad, "Lindblad operator")
    m_op = as_operator(other, "Lindblad operator")
    check_same_dim(l_op, m_op)
    c = _group_commutators(l_op, m_op, np.array([dw]), np.array([dv]), kappa, dt)[0]
    bch = mat_exp(commutator(m_op, l_op) * kappa * dv * dw)
    return (
        float(np.linalg.norm(c - bch)),
        float(np.linalg.norm(c - np.eye(l_op.shape[0]))),
    )


def weak_commutator_ensemble(
    lindblad: npt.ArrayLike,
    other: npt.ArrayLike,
    kappa: float,
    dt: float,
    n_samples: int,
    seed: SeedLike = None,
) -> CommutatorEnsemble:
    """Monte Carlo mean of ``C - 1`` over independent ``dW, dV ~ N(0, dt)``."""
    l_op = as_operator(lindblad, "Lindblad operator")
    m_op = as_operator(other, "Lindblad operator")
    check_same_dim(l_op, m_op)
    if n_samples < 2:
        raise InvalidInputError("need at least two samples")
    rng = np.random.default_rng(spawn_seeds(seed, 1)[0])
    dw = np.sqrt(dt) * rng.standard_normal(n_samples)
    dv = np.sqrt(dt) * rng.standard_normal(n_samples)
    shifted = _group_commutators(l_op, m_op, dw, dv, kappa, dt) - np.eye(l_op.shape[0])
    mean = shifted.mean(axis=0)
    spread = np.sum(np.abs(shifted - mean) ** 2) / (n_samples - 1)
    return CommutatorEnsemble(
        float(np.linalg.norm(mean)), float(np.sqrt(spread / n_samples)), n_samples
    )


def abelian_coordinates(
    record: MeasurementRecord, kappa: float, lindblad: npt.ArrayLike | None = None
) -> AbelianCoord:
    """
    Coordinates ``r = kappa T``, ``x = sqrt(kappa) sum dW`` of a single-channel Wiener record.

    Raises:
        UnsupportedError: If ``lindblad`` is given and not Hermitian, or the
            record is not a single Wiener channel.
    """
    if lindblad is not None and not is_hermitian(as_operator(lindblad), 1e-12):
        raise UnsupportedError("abelian coordinates need a Hermitian Lindblad operator")
    if record.n_steps == 0:
        return AbelianCoord(0.0, 0.0)
    if record.kind is not RecordKind.WIENER or record.n_channels != 1:
        raise UnsupportedError("abelian coordinates need a single-channel Wiener record")
    return AbelianCoord(kappa * record.duration, float(np.sqrt(kappa) * record.increments.sum()))


def abelian_kraus(lindblad: npt.ArrayLike, coord: AbelianCoord) -> Operator:
    """``exp(-L^2 r + L x)``."""
    op = as_operator(lindblad, "Lindblad operator")
    return mat_exp(-(op @ op) * coord.r + op * coord.x)


def sample_abelian_coordinates(
    kappa: float,
    duration: float,
    dt: float,
    n_samples: int,
    seed: SeedLike = None,
    antithetic: bool = True,
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """
    Sample ``x`` coordinates of Wiener records, split into the two halves of ``[0, T]``.

    Returns:
        ``(first_half, second_half)``; their sum is the coordinate at ``T``.
        With ``antithetic`` every record is paired with its negation.
    """
    if n_samples < 2 or not (kappa > 0 and dt > 0 and duration > 0):
        raise InvalidInputError("need n_samples >= 2 and positive kappa, dt, duration")
    n_steps = max(2, int(round(duration / dt)))
    half = n_steps // 2
    base = (n_samples + 1) // 2 if antithetic else n_samples
    n_chunks = -(-base // _COORD_CHUNK)
    firsts, seconds = [], []
    for i, child in enumerate(spawn_seeds(seed, n_chunks)):
        size = min(_COORD_CHUNK, base - i * _COORD_CHUNK)
        rng = np.random.default_rng(child)
        dw = np.sqrt(duration / n_steps) * rng.standard_normal((size, n_steps))
        firsts.append(np.sqrt(kappa) * dw[:, :half].sum(axis=1))
        seconds.append(np.sqrt(kappa) * dw[:, half:].sum(axis=1))
    first = np.concatenate(firsts)
    second = np.concatenate(seconds)
    if antithetic:
        first = np.concatenate([first, -first])[:n_samples]
        second = np.concatenate([second, -second])[:n_samples]
    return first, second


def kod_histogram(
    xs: npt.ArrayLike,
    r: float,
    scale: float,
    bins: int = KOD_BINS,
    half_width: float = KOD_HALF_WIDTH,
) -> KodHistogram:
    """
    Density histogram of ``xs`` on ``bins`` uniform bins over ``+/- half_width * sqrt(scale)``.

    The density is normalized over the window, so its mass is 1.
    """
    samples = np.asarray(xs, dtype=float)
    if samples.size == 0 or scale <= 0:
        raise InvalidInputError("kod_histogram needs samples and a positive scale")
    edge = half_width * np.sqrt(scale)
    counts, edges = np.histogram(samples, bins=bins, range=(-edge, edge))
    if counts.sum() == 0:
        raise InvalidInputError("no samples inside the histogram window")
    density = counts / (counts.sum() * (edges[1] - edges[0]))
    return KodHistogram(r, edges, density)


def kod_l1_to_gaussian(hist: KodHistogram, variance: float) -> float:
    """L1 distance to ``N(0, variance)`` evaluated at bin midpoints."""
    exact = scipy.stats.norm.pdf(hist.midpoints, scale=np.sqrt(variance))
    return float(np.sum(np.abs(hist.density - exact)) * hist.width)


def kod_splice_l1(full: KodHistogram, first: KodHistogram, second: KodHistogram) -> float:
    """
    L1 distance between a histogram and the discrete convolution of two others.

    All three must share the bin width and an odd bin count centered on zero.
    """
    if not np.isclose(full.width, first.width) or not np.isclose(full.width, second.width):
        raise InvalidInputError("splice needs histograms with a common bin width")
    conv = np.convolve(first.density, second.density) * full.width
    centre = (conv.size - 1) // 2
    half = (full.density.size - 1) // 2
    spliced = conv[centre - half : centre + half + 1]
    return float(np.sum(np.abs(full.density - spliced)) * full.width)
