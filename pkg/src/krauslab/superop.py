"""
Superoperator calculus.

Superoperators act on column-stacked operators: ``vec(A)[i + d*j] = A[i, j]``.
Under this convention the sandwich ``rho -> A rho B^dagger`` is the matrix
``kron(conj(B), A)``.

Internally a superoperator ``S`` is also viewed as a rank-4 tensor
``T[a, b, c, e]``, the coefficient of ``rho[c, e]`` in ``S(rho)[a, b]``. The
Choi involution swaps the output column index with the input row index.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .exceptions import DimensionMismatchError, InvalidInputError
from .operators import Operator, as_operator, check_same_dim, dagger

SuperOperator = npt.NDArray[np.complex128]
ChoiMatrix = npt.NDArray[np.complex128]

# Default tolerance for the CP/TP predicates
PREDICATE_TOL = 1e-8


class PredicateResult(NamedTuple):
    """Outcome of ``is_cp``/``is_tp``: verdict plus the quantity it was judged on."""

    ok: bool
    value: float


def superop_dim(s: SuperOperator) -> int:
    """System dimension ``d`` of a ``d^2 x d^2`` superoperator."""
    n = s.shape[0]
    d = int(round(np.sqrt(n)))
    if s.ndim != 2 or s.shape != (n, n) or d * d != n:
        raise InvalidInputError(f"not a superoperator: shape {s.shape}")
    return d


def vec(a: Operator) -> npt.NDArray[np.complex128]:
    return np.asarray(a, dtype=complex).reshape(-1, order="F")


def unvec(v: npt.ArrayLike) -> Operator:
    arr = np.asarray(v, dtype=complex)
    d = int(round(np.sqrt(arr.size)))
    return arr.reshape((d, d), order="F")


def identity_superop(dim: int) -> SuperOperator:
    return np.eye(dim * dim, dtype=complex)


def sandwich(a: npt.ArrayLike, b: npt.ArrayLike) -> SuperOperator:
    """
    The superoperator ``rho -> a rho b^dagger``.

    Raises:
        DimensionMismatchError: If ``a`` and ``b`` differ in dimension.
    """
    a_op = as_operator(a)
    b_op = as_operator(b)
    check_same_dim(a_op, b_op)
    return np.kron(np.conj(b_op), a_op)


def apply(s: SuperOperator, rho: npt.ArrayLike) -> Operator:
    rho_op = as_operator(rho, "rho")
    d = superop_dim(s)
    if rho_op.shape[0] != d:
        raise DimensionMismatchError(d, rho_op.shape[0], "state")
    return unvec(s @ vec(rho_op))


def compose(*maps: SuperOperator) -> SuperOperator:
    """``compose(Y, X)`` is Y after X."""
    out = maps[0]
    for m in maps[1:]:
        out = out @ m
    return out


def _to_tensor(s: SuperOperator) -> npt.NDArray[np.complex128]:
    d = superop_dim(s)
    # C-order reshape yields [b, a, e, c] for row a + d*b, column c + d*e
    return s.reshape(d, d, d, d).transpose(1, 0, 3, 2)


def _from_tensor(t: npt.NDArray[np.complex128]) -> SuperOperator:
    d = t.shape[0]
    return np.ascontiguousarray(t.transpose(1, 0, 3, 2)).reshape(d * d, d * d)


def hs_adjoint(s: SuperOperator) -> SuperOperator:
    """
    Hilbert-Schmidt adjoint: ``tr(Y^dagger S(X)) = tr(S^adj(Y)^dagger X)``.

    On vectorized operators this is the conjugate transpose, so the adjoint
    of ``sandwich(A, B)`` is ``sandwich(A^dagger, B^dagger)``.
    """
    superop_dim(s)
    return np.conj(s).T


def choi_involution(s: SuperOperator) -> SuperOperator:
    """Index reshuffle ``(|a><c| . |d><b|)^# = |a><b| . |d><c|``; an involution."""
    return _from_tensor(_to_tensor(s).transpose(0, 2, 1, 3))


def to_choi(s: SuperOperator) -> ChoiMatrix:
    """
    Choi matrix of ``s``, unnormalized.

    ``to_choi(sandwich(K, K))`` is ``vec(K) vec(K)^dagger``; the identity
    channel maps to ``d`` times the maximally entangled projector.
    """
    return choi_involution(s)


def cj_quasi_adjoint(s: SuperOperator) -> SuperOperator:
    """Choi-Jamiolkowski quasi-adjoint ``# . adj . #``; ``sandwich(A, B) -> sandwich(B, A)``."""
    return choi_involution(hs_adjoint(choi_involution(s)))


def is_cp(s: SuperOperator, tol: float = PREDICATE_TOL) -> PredicateResult:
    """Complete positivity via the minimum eigenvalue of the Hermitized Choi matrix."""
    c = to_choi(s)
    min_eig = float(np.linalg.eigvalsh(0.5 * (c + np.conj(c).T))[0])
    return PredicateResult(min_eig >= -tol, min_eig)


def is_tp(s: SuperOperator, tol: float = PREDICATE_TOL) -> PredicateResult:
    """Trace preservation via the Frobenius norm of ``S^adj(1) - 1``."""
    d = superop_dim(s)
    eye = np.eye(d, dtype=complex)
    defect = float(np.linalg.norm(apply(hs_adjoint(s), eye) - eye))
    return PredicateResult(defect <= tol, defect)


def lindblad_dissipator(lindblads: Sequence[npt.ArrayLike]) -> SuperOperator:
    """
    Sum over ``L`` of ``L . L^dagger - 1/2 (L^dagger L . 1 + 1 . L^dagger L)``.

    Raises:
        InvalidInputError: If ``lindblads`` is empty.
        DimensionMismatchError: If the operators differ in dimension.
    """
    if len(lindblads) == 0:
        raise InvalidInputError("lindblad_dissipator needs at least one operator")
    ops = [as_operator(op, "Lindblad operator") for op in lindblads]
    d = check_same_dim(*ops)
    eye = np.eye(d, dtype=complex)
    total = np.zeros((d * d, d * d), dtype=complex)
    for op in ops:
        decay = dagger(op) @ op
        total += sandwich(op, op) - 0.5 * (sandwich(decay, eye) + sandwich(eye, decay))
    return total


def channel_exp(generator: SuperOperator, s: float) -> SuperOperator:
    """``exp(generator * s)``; CP and TP for a dissipator and ``s >= 0``."""
    superop_dim(generator)
    return np.asarray(scipy.linalg.expm(generator * s), dtype=complex)
