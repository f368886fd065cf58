"""Utility functions for krauslab."""

from __future__ import annotations

import ast
import re
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from .exceptions import InvalidInputError
from .operators import PRESETS, Operator, as_operator

# Floats written to result files keep 17 significant digits (exact round trip)
FLOAT_DIGITS = 17

# Scalar pattern: plain float with optional exponent, or a ratio "a/b"
_NUMBER = r"(?:\d+(?:\.\d*)?|\.\d+)(?:e[+-]?\d+)?"
_SCALAR_PATTERN = re.compile(
    rf"^\s*([+-]?{_NUMBER})\s*(?:/\s*({_NUMBER}))?\s*$",
    re.IGNORECASE,
)


def parse_scalar(value: int | float | str) -> float:
    """
    Parse a real parameter.

    Accepts:
        - Numbers: returned as float
        - Strings: decimal or scientific notation, optionally a ratio ``a/b``

    Args:
        value: Number or string.

    Returns:
        The value as float.

    Raises:
        InvalidInputError: If the string cannot be parsed.

    Examples:
        >>> parse_scalar("1e-3")
        0.001
        >>> parse_scalar("1/4")
        0.25
        >>> parse_scalar(2)
        2.0
    """
    if isinstance(value, (int, float)):
        return float(value)

    match = _SCALAR_PATTERN.match(value)
    if not match:
        raise InvalidInputError(
            f"Invalid number format: '{value}'. Expected e.g. '0.5', '1e-3' or '1/4'"
        )
    numerator, denominator = match.groups()
    if denominator is None:
        return float(numerator)
    if float(denominator) == 0:
        raise InvalidInputError(f"Division by zero in '{value}'")
    return float(numerator) / float(denominator)


def parse_scalar_list(value: str | Sequence[float]) -> list[float]:
    """
    Parse a comma-separated list of reals.

    Examples:
        >>> parse_scalar_list("1e-2, 1e-3,1e-4")
        [0.01, 0.001, 0.0001]
    """
    if not isinstance(value, str):
        return [float(v) for v in value]
    items = [item for item in value.split(",") if item.strip()]
    if not items:
        raise InvalidInputError("Expected a comma-separated list of numbers, got an empty string")
    return [parse_scalar(item) for item in items]


def format_float(value: float) -> str:
    """
    Format a float for result files with 17 significant digits.

    Examples:
        >>> format_float(0.1)
        '0.10000000000000001'
        >>> format_float(1.0)
        '1'
    """
    return f"{value:.{FLOAT_DIGITS}g}"


def parse_matrix_literal(text: str) -> Operator:
    """
    Parse a nested-list matrix literal such as ``[[0, 1], [0, 0]]`` or ``[[0, -1j], [1j, 0]]``.

    Raises:
        InvalidInputError: If the text is not a square numeric matrix literal.
    """
    try:
        value = ast.literal_eval(text.strip())
    except (ValueError, SyntaxError) as e:
        raise InvalidInputError(f"Invalid matrix literal: '{text}'") from e
    try:
        return as_operator(np.array(value, dtype=complex), "matrix literal")
    except (TypeError, ValueError) as e:
        raise InvalidInputError(f"Invalid matrix literal: '{text}'") from e


def parse_lindblads(spec: str) -> tuple[Operator, ...]:
    """
    Resolve a Lindblad specification.

    Accepts a preset name (``qubit-decay``, ``qubit-z``, ``qubit-xy``,
    ``spinhalf-ism``) or matrix literals separated by ``;``.

    Examples:
        >>> len(parse_lindblads("qubit-xy"))
        2
        >>> parse_lindblads("[[0, 1], [0, 0]]")[0].shape
        (2, 2)
    """
    key = spec.strip().lower()
    if key in PRESETS:
        return tuple(op.copy() for op in PRESETS[key])
    if not key.startswith("["):
        raise InvalidInputError(
            f"Unknown Lindblad preset '{spec}'. Choose from {', '.join(sorted(PRESETS))} "
            "or give matrix literals separated by ';'"
        )
    ops = tuple(parse_matrix_literal(part) for part in spec.split(";") if part.strip())
    if len({op.shape for op in ops}) != 1:
        raise InvalidInputError("All Lindblad operators must share one dimension")
    return ops


def fit_order(steps: Sequence[float], errors: Sequence[float]) -> float:
    """
    Least-squares slope of ``log(error)`` against ``log(step)``.

    Args:
        steps: Step sizes (dt, h, mollifier width, ...).
        errors: Positive error measurements at those steps.

    Returns:
        The fitted convergence order.

    Raises:
        InvalidInputError: With fewer than two points or nonpositive values.
    """
    x = np.asarray(steps, dtype=float)
    y = np.asarray(errors, dtype=float)
    if x.size < 2 or x.shape != y.shape:
        raise InvalidInputError("fit_order needs at least two (step, error) pairs")
    if np.any(x <= 0) or np.any(y <= 0):
        raise InvalidInputError("fit_order needs positive steps and errors")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def trapezoid_weights(grid: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Trapezoid-rule weights for a sorted 1-D grid."""
    x = np.asarray(grid, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InvalidInputError("trapezoid weights need a 1-D grid of at least two points")
    gaps = np.diff(x)
    weights = np.zeros_like(x)
    weights[:-1] += 0.5 * gaps
    weights[1:] += 0.5 * gaps
    return weights
