"""
Dense complex operators.

Operators are ``numpy`` arrays of shape ``(d, d)`` with dtype complex128. This
module holds the validation helpers, the matrix exponential used by every
exponential Kraus form, spectra, seeded random generators, and the standard
qubit operators.
"""

from __future__ import annotations

from typing import Union

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .exceptions import DimensionMismatchError, InvalidInputError

Operator = npt.NDArray[np.complex128]
SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]

# Hermiticity tolerance for herm_eigvals
HERMITIAN_TOL = 1e-10

# Taylor scaling-and-squaring parameters for mat_exp_batch:
# ||A / 2^s||_1 <= 0.5, so the degree-18 remainder is below 0.5^19/19! ~ 2e-23.
_TAYLOR_THETA = 0.5
_TAYLOR_DEGREE = 18

SIGMA_X: Operator = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y: Operator = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z: Operator = np.array([[1, 0], [0, -1]], dtype=complex)
# sigma_minus |1> = |0>, with |0> = (1, 0)
SIGMA_MINUS: Operator = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS: Operator = SIGMA_MINUS.conj().T.copy()
IDENTITY2: Operator = np.eye(2, dtype=complex)


def as_operator(a: npt.ArrayLike, name: str = "operator") -> Operator:
    """Return ``a`` as a complex square matrix, raising if it is not one."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise InvalidInputError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    return arr


def check_same_dim(*ops: Operator) -> int:
    """Return the common dimension of ``ops``."""
    dim = ops[0].shape[0]
    for op in ops[1:]:
        if op.shape[0] != dim:
            raise DimensionMismatchError(dim, op.shape[0])
    return int(dim)


def identity(dim: int) -> Operator:
    return np.eye(dim, dtype=complex)


def mat_exp(a: npt.ArrayLike) -> Operator:
    """
    Matrix exponential.

    Args:
        a: Square matrix with finite entries.

    Returns:
        e^a, computed by ``scipy.linalg.expm`` (Pade scaling and squaring).

    Raises:
        InvalidInputError: If any entry is NaN or infinite.

    Examples:
        >>> mat_exp(np.zeros((2, 2)))
        array([[1.+0.j, 0.+0.j],
               [0.+0.j, 1.+0.j]])
    """
    arr = as_operator(a)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("mat_exp requires finite entries")
    return np.asarray(scipy.linalg.expm(arr), dtype=complex)


def mat_exp_batch(a: npt.ArrayLike) -> npt.NDArray[np.complex128]:
    """
    Exponentiate a stack of matrices of shape ``(..., d, d)`` at once.

    Uses one Taylor scaling-and-squaring schedule for the whole stack, picked
    from the largest 1-norm, so every slice is exponentiated to the same
    relative accuracy as ``mat_exp``.
    """
    arr = np.asarray(a, dtype=complex)
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2]:
        raise InvalidInputError(f"mat_exp_batch expects (..., d, d), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("mat_exp_batch requires finite entries")

    eye = np.broadcast_to(np.eye(arr.shape[-1], dtype=complex), arr.shape)
    if arr.size == 0:
        return eye.copy()
    max_norm = float(np.abs(arr).sum(axis=-2).max())
    squarings = 0
    if max_norm > _TAYLOR_THETA:
        squarings = int(np.ceil(np.log2(max_norm / _TAYLOR_THETA)))
    scaled = arr / 2.0**squarings

    result = eye.copy()
    term = eye.copy()
    for k in range(1, _TAYLOR_DEGREE + 1):
        term = term @ scaled / k
        result = result + term
        if np.abs(term).max() <= np.finfo(float).eps * np.abs(result).max() * 1e-2:
            break
    for _ in range(squarings):
        result = result @ result
    return result


def dagger(a: Operator) -> Operator:
    return np.conj(a).T


def trace(a: Operator) -> complex:
    return complex(np.trace(a))


def frob_dist(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """Frobenius norm of ``a - b``."""
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


def is_hermitian(a: Operator, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= tol)


def herm_eigvals(a: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """
    Sorted real eigenvalues of a Hermitian matrix.

    Raises:
        InvalidInputError: If ``max|a - a^dagger| > 1e-10``.
    """
    arr = as_operator(a)
    if not is_hermitian(arr):
        raise InvalidInputError("herm_eigvals requires a Hermitian matrix")
    return np.asarray(np.linalg.eigvalsh(0.5 * (arr + dagger(arr))), dtype=float)


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def anticommutator(a: Operator, b: Operator) -> Operator:
    return a @ b + b @ a


def make_rng(seed: SeedLike = None) -> np.random.Generator:
    """Return a PCG64 generator; generators are passed through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    """Coerce ``seed`` to a ``SeedSequence`` that can be split into child streams."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(2**63)))
    return np.random.SeedSequence(seed)


def spawn_seeds(seed: SeedLike, n: int) -> list[np.random.SeedSequence]:
    """Split ``seed`` into ``n`` independent child streams, stable for a given seed."""
    return as_seed_sequence(seed).spawn(n)


def random_ginibre(dim: int, rng: np.random.Generator) -> Operator:
    """Matrix of i.i.d. standard complex Gaussians (E|z|^2 = 1)."""
    if dim < 1:
        raise InvalidInputError(f"dim must be >= 1, got {dim}")
    real = rng.standard_normal((dim, dim))
    imag = rng.standard_normal((dim, dim))
    return np.asarray((real + 1j * imag) / np.sqrt(2.0), dtype=complex)


def random_hermitian(dim: int, rng: np.random.Generator) -> Operator:
    g = random_ginibre(dim, rng)
    return 0.5 * (g + dagger(g))


def random_unitary(dim: int, rng: np.random.Generator) -> Operator:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    q, r = np.linalg.qr(random_ginibre(dim, rng))
    phases = np.diag(r) / np.abs(np.diag(r))
    return np.asarray(q * phases, dtype=complex)


def random_invertible(dim: int, rng: np.random.Generator, scale: float = 0.3) -> Operator:
    """Random invertible matrix near the identity, ``exp(scale * G)``."""
    return mat_exp(scale * random_ginibre(dim, rng))


def spin_half() -> tuple[Operator, Operator, Operator]:
    """Angular momentum components (Jx, Jy, Jz) at j = 1/2."""
    return 0.5 * SIGMA_X, 0.5 * SIGMA_Y, 0.5 * SIGMA_Z


# Named Lindblad sets used by the command line
PRESETS: dict[str, tuple[Operator, ...]] = {
    "qubit-decay": (SIGMA_MINUS,),
    "qubit-z": (0.5 * SIGMA_Z,),
    "qubit-xy": (0.5 * SIGMA_X, 0.5 * SIGMA_Y),
    "spinhalf-ism": spin_half(),
}
