"""Custom exceptions for krauslab."""

from __future__ import annotations


class KrausLabError(Exception):
    """Base exception for all krauslab errors."""


class InvalidInputError(KrausLabError, ValueError):
    """Argument is malformed or outside the domain of the operation."""


class DimensionMismatchError(InvalidInputError):
    """Operands do not share a dimension."""

    def __init__(self, expected: int, actual: int, what: str = "operator") -> None:
        self.expected = expected
        self.actual = actual
        super().__init__(f"Dimension mismatch for {what}: expected {expected}, got {actual}")


class AtomCapError(KrausLabError):
    """Instrument convolution would exceed the atom cap."""

    def __init__(self, count: int, cap: int) -> None:
        self.count = count
        self.cap = cap
        super().__init__(
            f"Instrument would have {count} atoms, above the cap of {cap}. "
            "Sample long sequences with krauslab.trajectory.ensemble_channel instead"
        )


class CombinatorialError(KrausLabError):
    """Too many Lindblad operators for a tensor-grid instrument."""

    def __init__(self, n_lindblads: int, limit: int) -> None:
        self.n_lindblads = n_lindblads
        self.limit = limit
        super().__init__(
            f"Tensor grid over {n_lindblads} Lindblad operators requested; the limit is {limit}"
        )


class QuadratureError(KrausLabError):
    """Quadrature cannot reach the requested tolerance."""

    def __init__(self, achieved: float, tolerance: float) -> None:
        self.achieved = achieved
        self.tolerance = tolerance
        super().__init__(
            f"Quadrature defect {achieved:.3e} exceeds the requested tolerance {tolerance:.3e}; "
            "increase n_nodes"
        )


class TruncationError(KrausLabError):
    """Fock truncation of the meter leaks amplitude."""

    def __init__(self, leakage: float, cutoff: int) -> None:
        self.leakage = leakage
        self.cutoff = cutoff
        super().__init__(
            f"Fock cutoff {cutoff} too small: amplitude {leakage:.3e} reaches the top levels"
        )


class GridError(InvalidInputError):
    """Quadrature grid is too coarse, too narrow, or leaks the integrand."""


class CFLError(InvalidInputError):
    """Explicit solver step violates its stability condition."""

    def __init__(self, ratio: float, limit: float) -> None:
        self.ratio = ratio
        self.limit = limit
        super().__init__(f"CFL violation: kappa*dt / min(dr, dx^2) = {ratio:.3g} > {limit}")


class UnsupportedError(KrausLabError):
    """Request lies outside what the implementation covers."""


class GroupTableError(InvalidInputError):
    """Multiplication table does not define a group."""


class RepresentationError(KrausLabError):
    """Map from group elements to matrices is not a homomorphism."""

    def __init__(self, residual: float) -> None:
        self.residual = residual
        super().__init__(f"Representation fails the homomorphism check (residual {residual:.3e})")


class ConfigError(KrausLabError):
    """Run configuration is invalid."""

    def __init__(self, key: str, message: str) -> None:
        self.key = key
        super().__init__(f"Invalid configuration key '{key}': {message}")


class RegimeWarning(UserWarning):
    """Parameters lie outside the weak-measurement regime."""
