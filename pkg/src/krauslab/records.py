"""Result records written by the command-line suites."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, ClassVar

from .exceptions import InvalidInputError
from .utils import format_float


class Comparison(str, Enum):
    """How a measured value is held against its tolerance."""

    AT_MOST = "<="  # residuals, distances
    AT_LEAST = ">="  # orders, witnesses

    def holds(self, value: float, tolerance: float) -> bool:
        if math.isnan(value):
            return False
        if self is Comparison.AT_MOST:
            return value <= tolerance
        return value >= tolerance


def _format_params(params: dict[str, Any]) -> str:
    parts = []
    for key in sorted(params):
        value = params[key]
        text = format_float(value) if isinstance(value, float) else str(value)
        parts.append(f"{key}={text}")
    return ";".join(parts)


@dataclass(frozen=True)
class CheckRow:
    """
    One measured quantity with its declared tolerance.

    Attributes:
        check: Name of the identity or property.
        params: Parameters the value was measured at.
        value: Measured residual, order or ratio.
        tolerance: Declared bound.
        comparison: Whether ``value`` must stay below or above ``tolerance``.
    """

    CSV_HEADER: ClassVar[tuple[str, ...]] = (
        "check",
        "params",
        "value",
        "tolerance",
        "comparison",
        "passed",
    )

    check: str
    value: float
    tolerance: float
    comparison: Comparison = Comparison.AT_MOST
    params: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def at_most(cls, check: str, value: float, tolerance: float, **params: Any) -> CheckRow:
        return cls(check, float(value), float(tolerance), Comparison.AT_MOST, params)

    @classmethod
    def at_least(cls, check: str, value: float, tolerance: float, **params: Any) -> CheckRow:
        return cls(check, float(value), float(tolerance), Comparison.AT_LEAST, params)

    @property
    def passed(self) -> bool:
        return self.comparison.holds(self.value, self.tolerance)

    def to_csv_row(self) -> list[str]:
        return [
            self.check,
            _format_params(self.params),
            format_float(self.value),
            format_float(self.tolerance),
            self.comparison.value,
            "pass" if self.passed else "FAIL",
        ]

    def describe(self) -> str:
        status = "ok  " if self.passed else "FAIL"
        params = _format_params(self.params)
        suffix = f" [{params}]" if params else ""
        return (
            f"{status} {self.check}{suffix}: "
            f"{self.value:.3e} {self.comparison.value} {self.tolerance:.3e}"
        )


@dataclass
class RunManifest:
    """Inputs and environment of one suite run."""

    subcommand: str
    seed: int
    threads: int = 1
    params: dict[str, Any] = field(default_factory=dict)
    versions: dict[str, str] = field(default_factory=dict)
    rows_total: int = 0
    rows_failed: int = 0

    @property
    def passed(self) -> bool:
        return self.rows_failed == 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "subcommand": self.subcommand,
            "seed": self.seed,
            "threads": self.threads,
            "params": {k: _jsonable(v) for k, v in sorted(self.params.items())},
            "versions": dict(sorted(self.versions.items())),
            "rows_total": self.rows_total,
            "rows_failed": self.rows_failed,
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunManifest:
        try:
            return cls(
                subcommand=str(data["subcommand"]),
                seed=int(data["seed"]),
                threads=int(data.get("threads", 1)),
                params=dict(data.get("params", {})),
                versions=dict(data.get("versions", {})),
                rows_total=int(data.get("rows_total", 0)),
                rows_failed=int(data.get("rows_failed", 0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidInputError(f"Invalid run manifest: {e}") from e


def _jsonable(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)
