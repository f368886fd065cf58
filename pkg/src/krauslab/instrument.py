"""
Instruments as weighted families of Kraus operators.

An instrument is a list of atoms ``(weight, K)``; atom ``i`` is the operation
``rho -> w_i K_i rho K_i^dagger``. Continuous outcomes (Wiener increments) are
discretized by Gauss-Hermite nodes, the node weight carrying the measure and
the matrix carrying the Kraus operator.

Example:
    >>> from krauslab.operators import SIGMA_MINUS
    >>> inst = jump_weak(SIGMA_MINUS, kappa=1.0, dt=1e-3)
    >>> len(inst)
    2
    >>> completeness_defect(inst) < 1e-5
    True
"""

from __future__ import annotations

import itertools
import json
import warnings
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
import numpy.typing as npt

from .exceptions import (
    AtomCapError,
    CombinatorialError,
    DimensionMismatchError,
    InvalidInputError,
    QuadratureError,
    RegimeWarning,
)
from .operators import (
    Operator,
    as_operator,
    check_same_dim,
    dagger,
    mat_exp,
    random_invertible,
)
from .superop import SuperOperator, sandwich

# Largest atom count convolve/repeat will build
DEFAULT_ATOM_CAP = 10**6

# Weak-measurement regime bound on kappa * dt
WEAK_REGIME = 0.1

DEFAULT_NODES = 21
MIN_NODES = 5

# Most Lindblad operators on one tensor grid
MAX_GRID_LINDBLADS = 3

# PSD tolerance for Born-rule states
STATE_TOL = 1e-10


class InstrumentKind(str, Enum):
    """Whether atoms are genuine outcomes or quadrature nodes of a continuum."""

    DISCRETE = "discrete"
    QUADRATURE = "quadrature"


class WeakKind(str, Enum):
    JUMP = "jump"
    DIFFUSIVE = "diffusive"


@dataclass(frozen=True, eq=False)
class Atom:
    """One instrument element ``weight * K . K^dagger``; compared by identity."""

    weight: float
    kraus: Operator

    def __post_init__(self) -> None:
        if not self.weight >= 0:
            raise InvalidInputError(f"atom weight must be nonnegative, got {self.weight}")


@dataclass(frozen=True, eq=False)
class Instrument:
    """
    Weighted Kraus family.

    Atoms hold arrays, so instruments compare and hash by identity.

    Attributes:
        dim: System dimension.
        atoms: The atoms, in outcome order.
        kind: Discrete outcomes or quadrature nodes.
        regime_warning: Set when a weak builder ran with kappa*dt above 0.1.
    """

    dim: int
    atoms: tuple[Atom, ...]
    kind: InstrumentKind = InstrumentKind.DISCRETE
    regime_warning: bool = False

    def __post_init__(self) -> None:
        if not self.atoms:
            raise InvalidInputError("an instrument needs at least one atom")
        for atom in self.atoms:
            if atom.kraus.shape != (self.dim, self.dim):
                raise DimensionMismatchError(self.dim, atom.kraus.shape[0], "Kraus operator")

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def weights(self) -> npt.NDArray[np.float64]:
        return np.array([atom.weight for atom in self.atoms], dtype=float)

    @property
    def kraus_stack(self) -> npt.NDArray[np.complex128]:
        """Kraus operators stacked along axis 0."""
        return np.stack([atom.kraus for atom in self.atoms])

    def to_dict(self) -> dict[str, Any]:
        return {
            "dim": self.dim,
            "kind": self.kind.value,
            "atoms": [
                {
                    "weight": atom.weight,
                    "kraus_re": atom.kraus.real.tolist(),
                    "kraus_im": atom.kraus.imag.tolist(),
                }
                for atom in self.atoms
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Instrument:
        try:
            atoms = tuple(
                Atom(
                    float(item["weight"]),
                    np.array(item["kraus_re"], dtype=float)
                    + 1j * np.array(item["kraus_im"], dtype=float),
                )
                for item in data["atoms"]
            )
            return cls(int(data["dim"]), atoms, InstrumentKind(data["kind"]))
        except (KeyError, TypeError) as e:
            raise InvalidInputError(f"malformed instrument record: {e}") from e

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> Instrument:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class WeakSpec:
    """Parameters of a weak instrument; ``build`` dispatches to the builders below."""

    lindblads: tuple[Operator, ...]
    kappa: float
    dt: float
    kind: WeakKind = WeakKind.DIFFUSIVE
    n_nodes: int = DEFAULT_NODES

    def __post_init__(self) -> None:
        if not (self.kappa > 0 and self.dt > 0):
            raise InvalidInputError("kappa and dt must be positive")
        if self.n_nodes < MIN_NODES:
            raise InvalidInputError(f"n_nodes must be >= {MIN_NODES}, got {self.n_nodes}")

    def build(self) -> Instrument:
        if self.kind is WeakKind.JUMP:
            return jump_weak(list(self.lindblads), self.kappa, self.dt)
        if len(self.lindblads) == 1:
            return diffusive_weak(self.lindblads[0], self.kappa, self.dt, self.n_nodes)
        return dmncos_weak(list(self.lindblads), self.kappa, self.dt, self.n_nodes)


def _check_rate(kappa: float, dt: float) -> bool:
    """Validate ``kappa`` and ``dt``; warn and return True outside the weak regime."""
    if not kappa > 0:
        raise InvalidInputError(f"kappa must be positive, got {kappa}")
    if not dt > 0:
        raise InvalidInputError(f"dt must be positive, got {dt}")
    if kappa * dt > WEAK_REGIME:
        warnings.warn(
            f"kappa*dt = {kappa * dt:.3g} is outside the weak regime (<= {WEAK_REGIME})",
            RegimeWarning,
            stacklevel=3,
        )
        return True
    return False


def _as_lindblad_list(lindblads: npt.ArrayLike | Sequence[npt.ArrayLike]) -> list[Operator]:
    if isinstance(lindblads, (list, tuple)) and not (lindblads and np.ndim(lindblads[0]) == 1):
        ops = [as_operator(op, "Lindblad operator") for op in lindblads]
    else:
        arr = np.asarray(lindblads, dtype=complex)
        if arr.ndim == 2:
            return [as_operator(arr, "Lindblad operator")]
        ops = [as_operator(op, "Lindblad operator") for op in arr]
    if not ops:
        raise InvalidInputError("at least one Lindblad operator is required")
    check_same_dim(*ops)
    return ops


def identity_instrument(dim: int) -> Instrument:
    return Instrument(dim, (Atom(1.0, np.eye(dim, dtype=complex)),))


def random_instrument(dim: int, rng: np.random.Generator, n_atoms: int = 3) -> Instrument:
    """``n_atoms`` invertible Kraus operators near the identity with weights in [0.1, 1)."""
    if n_atoms < 1:
        raise InvalidInputError(f"n_atoms must be >= 1, got {n_atoms}")
    atoms = tuple(
        Atom(float(rng.uniform(0.1, 1.0)), random_invertible(dim, rng)) for _ in range(n_atoms)
    )
    return Instrument(dim, atoms)


def jump_weak(
    lindblads: npt.ArrayLike | Sequence[npt.ArrayLike], kappa: float, dt: float
) -> Instrument:
    """
    Weak jump instrument.

    Atoms are ``(1, exp(-1/2 sum L^dagger L kappa dt))`` for no click and
    ``(kappa dt, L)`` for a click on each channel.

    Args:
        lindblads: One operator or a list of operators.
        kappa: Rate (1/time).
        dt: Time step.

    Returns:
        A discrete instrument; ``regime_warning`` is set when kappa*dt > 0.1.
    """
    ops = _as_lindblad_list(lindblads)
    flagged = _check_rate(kappa, dt)
    d = ops[0].shape[0]
    decay = sum((dagger(op) @ op for op in ops), np.zeros((d, d), dtype=complex))
    atoms = [Atom(1.0, mat_exp(-0.5 * kappa * dt * decay))]
    atoms.extend(Atom(kappa * dt, op) for op in ops)
    return Instrument(d, tuple(atoms), InstrumentKind.DISCRETE, flagged)


def _hermite_increments(n_nodes: int, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite nodes for dW ~ N(0, dt); weights normalized to sum to 1."""
    if n_nodes < MIN_NODES:
        raise InvalidInputError(f"n_nodes must be >= {MIN_NODES}, got {n_nodes}")
    nodes, weights = np.polynomial.hermite.hermgauss(n_nodes)
    return np.sqrt(2.0 * dt) * nodes, weights / weights.sum()


def _diffusive_atoms(
    ops: list[Operator], kappa: float, dt: float, n_nodes: int
) -> tuple[Atom, ...]:
    d = ops[0].shape[0]
    drift = sum(
        (dagger(op) @ op + op @ op for op in ops), np.zeros((d, d), dtype=complex)
    )
    base = -0.5 * kappa * dt * drift
    increments, weights = _hermite_increments(n_nodes, dt)
    atoms = []
    grid = itertools.product(range(n_nodes), repeat=len(ops))
    for index in grid:
        gen = base.copy()
        weight = 1.0
        for op, i in zip(ops, index):
            gen += np.sqrt(kappa) * increments[i] * op
            weight *= weights[i]
        atoms.append(Atom(float(weight), mat_exp(gen)))
    return tuple(atoms)


def diffusive_weak(
    lindblad: npt.ArrayLike,
    kappa: float,
    dt: float,
    n_nodes: int = DEFAULT_NODES,
    tolerance: float | None = None,
) -> Instrument:
    """
    Weak diffusive instrument on Gauss-Hermite nodes.

    Kraus operators are ``exp(-1/2 (L^dagger L + L^2) kappa dt + L sqrt(kappa) dW_i)``.

    Args:
        lindblad: Lindblad operator.
        kappa: Rate (1/time).
        dt: Time step.
        n_nodes: Number of Gauss-Hermite nodes (>= 5).
        tolerance: If given, the completeness defect must not exceed it.

    Raises:
        QuadratureError: If ``tolerance`` is given and not reached.
    """
    op = as_operator(lindblad, "Lindblad operator")
    flagged = _check_rate(kappa, dt)
    inst = Instrument(
        op.shape[0], _diffusive_atoms([op], kappa, dt, n_nodes), InstrumentKind.QUADRATURE, flagged
    )
    if tolerance is not None:
        defect = completeness_defect(inst)
        if defect > tolerance:
            raise QuadratureError(defect, tolerance)
    return inst


def dmncos_weak(
    lindblads: Sequence[npt.ArrayLike], kappa: float, dt: float, n_nodes: int = DEFAULT_NODES
) -> Instrument:
    """
    Simultaneous diffusive measurement of several observables on a tensor grid.

    Raises:
        CombinatorialError: For more than three Lindblad operators.
    """
    ops = _as_lindblad_list(list(lindblads))
    if len(ops) > MAX_GRID_LINDBLADS:
        raise CombinatorialError(len(ops), MAX_GRID_LINDBLADS)
    flagged = _check_rate(kappa, dt)
    return Instrument(
        ops[0].shape[0],
        _diffusive_atoms(ops, kappa, dt, n_nodes),
        InstrumentKind.QUADRATURE,
        flagged,
    )


def convolve(later: Instrument, earlier: Instrument, cap: int = DEFAULT_ATOM_CAP) -> Instrument:
    """
    Sequential composition: atoms ``(w1 w0, K1 K0)`` with the later Kraus on the left.

    Raises:
        DimensionMismatchError: If the instruments act on different systems.
        AtomCapError: If the product of atom counts exceeds ``cap``.
    """
    if later.dim != earlier.dim:
        raise DimensionMismatchError(later.dim, earlier.dim, "instrument")
    count = len(later) * len(earlier)
    if count > cap:
        raise AtomCapError(count, cap)
    products = np.einsum("iab,jbc->ijac", later.kraus_stack, earlier.kraus_stack)
    products = products.reshape(count, later.dim, later.dim)
    weights = np.outer(later.weights, earlier.weights).ravel()
    kind = (
        InstrumentKind.QUADRATURE
        if InstrumentKind.QUADRATURE in (later.kind, earlier.kind)
        else InstrumentKind.DISCRETE
    )
    atoms = tuple(Atom(float(w), k) for w, k in zip(weights, products))
    return Instrument(later.dim, atoms, kind, later.regime_warning or earlier.regime_warning)


def repeat(inst: Instrument, n: int, cap: int = DEFAULT_ATOM_CAP) -> Instrument:
    """``n``-fold self-convolution; ``repeat(inst, 0)`` is the identity instrument."""
    if n < 0:
        raise InvalidInputError(f"n must be nonnegative, got {n}")
    if len(inst) ** n > cap:
        raise AtomCapError(len(inst) ** n, cap)
    out = identity_instrument(inst.dim)
    for _ in range(n):
        out = convolve(inst, out, cap)
    return out


def total_operation(inst: Instrument) -> SuperOperator:
    """Sum of all instrument elements."""
    return sum(
        (atom.weight * sandwich(atom.kraus, atom.kraus) for atom in inst.atoms),
        np.zeros((inst.dim**2, inst.dim**2), dtype=complex),
    )


def povm(inst: Instrument) -> list[Operator]:
    """Effects ``w K^dagger K`` in atom order."""
    return [atom.weight * dagger(atom.kraus) @ atom.kraus for atom in inst.atoms]


def completeness_defect(inst: Instrument) -> float:
    """Frobenius norm of ``sum w K^dagger K - 1``."""
    total = sum(povm(inst), np.zeros((inst.dim, inst.dim), dtype=complex))
    return float(np.linalg.norm(total - np.eye(inst.dim)))


def check_state(rho: npt.ArrayLike, dim: int | None = None) -> Operator:
    """Validate a density-like operator: Hermitian, PSD and of positive trace."""
    r = as_operator(rho, "rho")
    if dim is not None and r.shape[0] != dim:
        raise DimensionMismatchError(dim, r.shape[0], "state")
    if np.max(np.abs(r - dagger(r))) > STATE_TOL:
        raise InvalidInputError("state must be Hermitian")
    eigs = np.linalg.eigvalsh(0.5 * (r + dagger(r)))
    if eigs[0] < -STATE_TOL:
        raise InvalidInputError(
            f"state is not positive semidefinite (min eigenvalue {eigs[0]:.3e})"
        )
    if not np.trace(r).real > 0:
        raise InvalidInputError("state must have positive trace")
    return r


def born_probability(rho: npt.ArrayLike, inst: Instrument, atom_index: int) -> float:
    """Generalized Born rule ``w_i tr(rho K_i^dagger K_i) / tr(rho)``."""
    r = check_state(rho, inst.dim)
    atom = inst.atoms[atom_index]
    effect = dagger(atom.kraus) @ atom.kraus
    return float(atom.weight * np.trace(r @ effect).real / np.trace(r).real)
