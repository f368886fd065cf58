"""
System-meter dilation of the weak instruments.

The meter is a single bosonic mode truncated at ``fock_cutoff`` photons. The
system couples to it through ``U = exp(sqrt(kappa dt) (L (x) a^dagger - L^dagger (x) a))``
with the meter prepared in vacuum. Reading the meter in the number basis
yields the jump instrument; reading a quadrature ``Q = sigma (a + a^dagger)``
yields the diffusive one with ``dW = sqrt(dt) q / sigma``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .exceptions import DimensionMismatchError, GridError, InvalidInputError, TruncationError
from .instrument import Atom, Instrument, InstrumentKind
from .operators import Operator, anticommutator, as_operator, dagger, mat_exp, mat_exp_batch
from .superop import SuperOperator
from .utils import trapezoid_weights

logger = logging.getLogger(__name__)

DEFAULT_CUTOFF = 40
MIN_CUTOFF = 20

# Amplitude allowed in the top Fock levels of U|0>
LEAK_TOL = 1e-10
LEAK_LEVELS = 5

MAX_JUMP_LEVEL = 3

# Quadrature grids must span +/- GRID_HALF_WIDTH sigma with spacing <= sigma / GRID_MIN_DENSITY
GRID_HALF_WIDTH = 6.0
GRID_POINTS = 801
GRID_MIN_DENSITY = 10


@dataclass(frozen=True)
class MeterModel:
    """Truncated single-mode meter with pointer width ``sigma``."""

    kappa: float
    dt: float
    fock_cutoff: int = DEFAULT_CUTOFF
    sigma: float = 1.0
    system_dim: int = 2

    def __post_init__(self) -> None:
        if self.fock_cutoff < MIN_CUTOFF:
            raise InvalidInputError(f"fock_cutoff must be >= {MIN_CUTOFF}, got {self.fock_cutoff}")
        if not (self.kappa > 0 and self.dt > 0 and self.sigma > 0):
            raise InvalidInputError("kappa, dt and sigma must be positive")
        if self.system_dim < 1:
            raise InvalidInputError(f"system_dim must be >= 1, got {self.system_dim}")

    @property
    def levels(self) -> int:
        return self.fock_cutoff + 1

    @property
    def coupling(self) -> float:
        return float(np.sqrt(self.kappa * self.dt))


@dataclass(frozen=True)
class LocalOscillatorReport:
    """Comparison of a phase-shifted readout with a rephased Lindblad operator."""

    phi: float
    residual: float


@dataclass(frozen=True)
class SplitFormReport:
    """
    Residuals of the X/Y split form of the quadrature Kraus operator.

    ``pointwise`` is the Gaussian-weighted relative L2 distance between Kraus
    operators; ``operation`` is the Frobenius distance between the total
    operations the two families generate.
    """

    pointwise: float
    operation: float


def annihilator(cutoff: int) -> Operator:
    """Truncated annihilation operator on levels ``0..cutoff``."""
    return np.diag(np.sqrt(np.arange(1, cutoff + 1)), k=1).astype(complex)


def _lindblad_for(lindblad: npt.ArrayLike, meter: MeterModel) -> Operator:
    op = as_operator(lindblad, "Lindblad operator")
    if op.shape[0] != meter.system_dim:
        raise DimensionMismatchError(meter.system_dim, op.shape[0], "Lindblad operator")
    return op


def interaction_unitary(lindblad: npt.ArrayLike, meter: MeterModel) -> Operator:
    """
    The interaction unitary on system (x) meter, system index major.

    Raises:
        TruncationError: If ``U|0>`` puts more than 1e-10 amplitude into the
            top Fock levels.
    """
    op = _lindblad_for(lindblad, meter)
    a = annihilator(meter.fock_cutoff)
    generator = meter.coupling * (np.kron(op, dagger(a)) - np.kron(dagger(op), a))
    unitary = mat_exp(generator)
    blocks = unitary.reshape(meter.system_dim, meter.levels, meter.system_dim, meter.levels)
    leakage = float(np.linalg.norm(blocks[:, -LEAK_LEVELS:, :, 0]))
    if leakage > LEAK_TOL:
        raise TruncationError(leakage, meter.fock_cutoff)
    logger.debug("Interaction unitary built, top-level leakage %.2e", leakage)
    return unitary


def unitarity_defect(unitary: Operator, meter: MeterModel, margin: int = LEAK_LEVELS) -> float:
    """Frobenius norm of ``U^dagger U - 1`` restricted to photon numbers ``<= cutoff - margin``."""
    keep = np.tile(np.arange(meter.levels) <= meter.fock_cutoff - margin, meter.system_dim)
    gram = dagger(unitary) @ unitary - np.eye(unitary.shape[0])
    return float(np.linalg.norm(gram[np.ix_(keep, keep)]))


def meter_block(unitary: Operator, meter: MeterModel, n: int, m: int = 0) -> Operator:
    """System operator ``<n| U |m>``."""
    blocks = unitary.reshape(meter.system_dim, meter.levels, meter.system_dim, meter.levels)
    return np.ascontiguousarray(blocks[:, n, :, m])


def jump_kraus_extract(lindblad: npt.ArrayLike, meter: MeterModel, n: int) -> Operator:
    """
    Number-basis Kraus operator ``<n| U |0>``.

    For small ``kappa dt`` this approaches
    ``(sqrt(kappa dt) L)^n / sqrt(n!) exp(-1/2 kappa dt L^dagger L)``.
    """
    if not 0 <= n <= MAX_JUMP_LEVEL:
        raise InvalidInputError(f"n must lie in 0..{MAX_JUMP_LEVEL}, got {n}")
    return meter_block(interaction_unitary(lindblad, meter), meter, n)


def dilated_jump_instrument(
    lindblad: npt.ArrayLike, meter: MeterModel, n_max: int = 2
) -> Instrument:
    """Instrument read off the meter in the number basis, outcomes ``0..n_max``."""
    unitary = interaction_unitary(lindblad, meter)
    atoms = tuple(Atom(1.0, meter_block(unitary, meter, n)) for n in range(n_max + 1))
    return Instrument(meter.system_dim, atoms, InstrumentKind.DISCRETE)


def hermite_functions(n_max: int, q: npt.ArrayLike, sigma: float = 1.0) -> npt.NDArray[np.float64]:
    """
    Number-state wavefunctions ``psi_n(q)`` of ``Q = sigma (a + a^dagger)`` for ``n <= n_max``.

    Evaluated by the normalized upward recurrence, so no factorials appear.
    The vacuum is ``|psi_0(q)|^2 = N(q; 0, sigma^2)``.
    """
    x = np.asarray(q, dtype=float) / (sigma * np.sqrt(2.0))
    out = np.empty((n_max + 1, x.size))
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out / np.sqrt(sigma * np.sqrt(2.0))


def make_q_grid(meter: MeterModel, n_points: int = GRID_POINTS) -> npt.NDArray[np.float64]:
    """Uniform grid on ``+/- 6 sigma``."""
    half = GRID_HALF_WIDTH * meter.sigma
    return np.linspace(-half, half, n_points)


def _check_grid(q: npt.NDArray[np.float64], meter: MeterModel) -> None:
    half = GRID_HALF_WIDTH * meter.sigma * (1 - 1e-9)
    if q.ndim != 1 or q.size < 3 or q[0] > -half or q[-1] < half:
        raise GridError(f"quadrature grid must span +/- {GRID_HALF_WIDTH} sigma")
    if np.max(np.diff(q)) > meter.sigma / GRID_MIN_DENSITY:
        raise GridError(
            f"quadrature grid too coarse: spacing {np.max(np.diff(q)):.3g}"
            f" > sigma/{GRID_MIN_DENSITY}"
        )


def _quadrature_blocks(
    unitary: Operator, meter: MeterModel, q: npt.NDArray[np.float64]
) -> npt.NDArray[np.complex128]:
    blocks = unitary.reshape(meter.system_dim, meter.levels, meter.system_dim, meter.levels)
    psi = hermite_functions(meter.fock_cutoff, q, meter.sigma)
    return np.einsum("nq,anb->qab", psi, blocks[:, :, :, 0])


def quadrature_kraus_extract(
    lindblad: npt.ArrayLike, meter: MeterModel, q_grid: npt.ArrayLike | None = None
) -> npt.NDArray[np.complex128]:
    """
    Kraus amplitudes ``<q| U |0>`` on a grid, shape ``(len(q_grid), d, d)``.

    ``<q| U |0> dq`` pairs with the measure: the instrument element for the
    cell around ``q`` is ``dq <q|U|0> rho <q|U|0>^dagger``.

    Raises:
        GridError: If the grid does not span +/- 6 sigma or is too coarse.
    """
    q = make_q_grid(meter) if q_grid is None else np.asarray(q_grid, dtype=float)
    _check_grid(q, meter)
    return _quadrature_blocks(interaction_unitary(lindblad, meter), meter, q)


def wiener_increments(meter: MeterModel, q: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """``dW = sqrt(dt) q / sigma``."""
    return np.sqrt(meter.dt) * np.asarray(q, dtype=float) / meter.sigma


def reference_quadrature_kraus(
    lindblad: npt.ArrayLike, meter: MeterModel, q_grid: npt.ArrayLike | None = None
) -> npt.NDArray[np.complex128]:
    """``psi_0(q) exp(-1/2 (L^dagger L + L^2) kappa dt + L sqrt(kappa) dW)`` on the grid."""
    op = _lindblad_for(lindblad, meter)
    q = make_q_grid(meter) if q_grid is None else np.asarray(q_grid, dtype=float)
    dw = wiener_increments(meter, q)
    base = -0.5 * meter.kappa * meter.dt * (dagger(op) @ op + op @ op)
    gens = base + np.sqrt(meter.kappa) * dw[:, None, None] * op
    vacuum = hermite_functions(0, q, meter.sigma)[0]
    return vacuum[:, None, None] * mat_exp_batch(gens)


def weighted_l2(
    kraus: npt.NDArray[np.complex128],
    reference: npt.NDArray[np.complex128],
    q: npt.ArrayLike,
) -> float:
    """Relative L2 distance of two Kraus families over ``dq``."""
    w = trapezoid_weights(q)
    diff = np.einsum("q,qab->", w, np.abs(kraus - reference) ** 2)
    norm = np.einsum("q,qab->", w, np.abs(reference) ** 2)
    return float(np.sqrt(diff / norm))


def quadrature_total_operation(
    kraus: npt.NDArray[np.complex128], q: npt.ArrayLike
) -> SuperOperator:
    """Trapezoid sum of ``dq sandwich(K(q), K(q))``."""
    w = trapezoid_weights(q)
    n, d, _ = kraus.shape
    elements = np.einsum("qab,qce->qacbe", kraus.conj(), kraus).reshape(n, d * d, d * d)
    return np.einsum("q,qij->ij", w, elements)


def povm_marginal(kraus: npt.NDArray[np.complex128], q: npt.ArrayLike) -> Operator:
    """Trapezoid integral of ``K(q)^dagger K(q) dq``; the identity for a complete readout."""
    w = trapezoid_weights(q)
    return np.einsum("q,qba,qbc->ac", w, kraus.conj(), kraus)


def dilated_quadrature_instrument(
    lindblad: npt.ArrayLike, meter: MeterModel, q_grid: npt.ArrayLike | None = None
) -> Instrument:
    """Quadrature readout as an instrument with trapezoid weights on the grid."""
    q = make_q_grid(meter) if q_grid is None else np.asarray(q_grid, dtype=float)
    kraus = quadrature_kraus_extract(lindblad, meter, q)
    atoms = tuple(Atom(float(w), k) for w, k in zip(trapezoid_weights(q), kraus))
    return Instrument(meter.system_dim, atoms, InstrumentKind.QUADRATURE)


def local_oscillator_phase(
    lindblad: npt.ArrayLike,
    phi: float,
    meter: MeterModel,
    q_grid: npt.ArrayLike | None = None,
) -> LocalOscillatorReport:
    """
    Compare ``<q| exp(-i a^dagger a phi) U[L] |0>`` with ``<q| U[exp(-i phi) L] |0>``.

    The residual is the largest entrywise difference over the grid.
    """
    op = _lindblad_for(lindblad, meter)
    q = make_q_grid(meter) if q_grid is None else np.asarray(q_grid, dtype=float)
    _check_grid(q, meter)
    unitary = interaction_unitary(op, meter)
    phases = np.exp(-1j * phi * np.arange(meter.levels))
    rotated = np.kron(np.eye(meter.system_dim), np.diag(phases)) @ unitary
    shifted = _quadrature_blocks(rotated, meter, q)
    rephased = _quadrature_blocks(interaction_unitary(np.exp(-1j * phi) * op, meter), meter, q)
    return LocalOscillatorReport(phi, float(np.max(np.abs(shifted - rephased))))


def split_form_kraus(
    x_op: npt.ArrayLike,
    y_op: npt.ArrayLike,
    meter: MeterModel,
    q_grid: npt.ArrayLike | None = None,
) -> npt.NDArray[np.complex128]:
    """
    Split form for ``L = X + iY``:
    ``exp(-i {X,Y} kappa dt / 2 + i Y sqrt(kappa) dW) psi_0(q)``
    ``exp(-X^2 kappa dt + X sqrt(kappa) dW)``.
    """
    x = _lindblad_for(x_op, meter)
    y = _lindblad_for(y_op, meter)
    q = make_q_grid(meter) if q_grid is None else np.asarray(q_grid, dtype=float)
    dw = np.sqrt(meter.kappa) * wiener_increments(meter, q)
    kdt = meter.kappa * meter.dt
    phase = mat_exp_batch(-0.5j * kdt * anticommutator(x, y) + 1j * dw[:, None, None] * y)
    real = mat_exp_batch(-kdt * (x @ x) + dw[:, None, None] * x)
    vacuum = hermite_functions(0, q, meter.sigma)[0]
    return vacuum[:, None, None] * (phase @ real)


def quadrature_split_form_check(
    x_op: npt.ArrayLike,
    y_op: npt.ArrayLike,
    meter: MeterModel,
    q_grid: npt.ArrayLike | None = None,
) -> SplitFormReport:
    """
    Compare the extracted quadrature Kraus operators of ``L = X + iY`` with the split form.

    The pointwise distance carries an ``(dW^2 - dt)`` term, first order in
    ``kappa dt``, that averages out of the total operation.
    """
    x = _lindblad_for(x_op, meter)
    y = _lindblad_for(y_op, meter)
    q = make_q_grid(meter) if q_grid is None else np.asarray(q_grid, dtype=float)
    extracted = quadrature_kraus_extract(x + 1j * y, meter, q)
    split = split_form_kraus(x, y, meter, q)
    operation = np.linalg.norm(
        quadrature_total_operation(extracted, q) - quadrature_total_operation(split, q)
    )
    return SplitFormReport(weighted_l2(extracted, split, q), float(operation))
