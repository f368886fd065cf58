"""Tests for result records."""

import math

import pytest

from krauslab.exceptions import InvalidInputError
from krauslab.records import CheckRow, Comparison, RunManifest


class TestCheckRow:
    """Tests for check rows."""

    def test_at_most(self):
        assert CheckRow.at_most("residual", 1e-13, 1e-12).passed
        assert not CheckRow.at_most("residual", 1e-11, 1e-12).passed

    def test_at_least(self):
        row = CheckRow.at_least("order", 1.95, 1.8, steps="1/2")
        assert row.passed
        assert row.comparison is Comparison.AT_LEAST
        assert row.params == {"steps": "1/2"}

    def test_nan_fails(self):
        assert not CheckRow.at_most("residual", math.nan, 1.0).passed
        assert not CheckRow.at_least("order", math.nan, 1.0).passed

    def test_infinite_order_passes(self):
        assert CheckRow.at_least("order", math.inf, 1.8).passed

    def test_csv_row(self):
        row = CheckRow.at_most("jump_n2_norm", 0.1, 0.25, dt=0.01, kind="jump")
        assert row.to_csv_row() == [
            "jump_n2_norm",
            "dt=0.01;kind=jump",
            "0.10000000000000001",
            "0.25",
            "<=",
            "pass",
        ]

    def test_describe(self):
        row = CheckRow.at_most("lie_bracket", 2e-4, 1e-4)
        assert row.describe() == "FAIL lie_bracket: 2.000e-04 <= 1.000e-04"
        ok = CheckRow.at_least("order", 2.0, 1.8, dt=0.5)
        assert ok.describe().startswith("ok   order [dt=0.5]:")


class TestRunManifest:
    """Tests for run manifests."""

    def test_to_dict(self):
        manifest = RunManifest("haar", 7, params={"dts": [0.1, 0.01], "b": 1.0})
        data = manifest.to_dict()
        assert list(data["params"]) == ["b", "dts"]
        assert data["params"]["dts"] == [0.1, 0.01]
        assert data["passed"] is True

    def test_from_dict(self):
        manifest = RunManifest("iga", 3, rows_total=5, rows_failed=1)
        restored = RunManifest.from_dict(manifest.to_dict())
        assert restored.subcommand == "iga"
        assert restored.rows_failed == 1
        assert not restored.passed

    def test_invalid(self):
        with pytest.raises(InvalidInputError, match="Invalid run manifest"):
            RunManifest.from_dict({"seed": 1})
