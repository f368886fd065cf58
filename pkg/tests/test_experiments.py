"""Tests for the command-line suites."""

import csv
import math

import pytest

import krauslab
from krauslab.exceptions import ConfigError, InvalidInputError


def by_name(rows):
    return {row.check: row for row in rows}


class TestIga:
    """Tests for the finite group-algebra suite."""

    def test_all_groups_pass(self):
        rows = krauslab.run_checks("iga", group="all", seed=3)
        assert rows
        assert all(row.passed for row in rows), [r.describe() for r in rows if not r.passed]
        assert {row.params["group"] for row in rows} == {"Z2", "S3", "Q8"}
        assert {"delta_inversion", "delta_trikernel"} <= {row.check for row in rows}

    def test_writes_result_directory(self, tmp_path):
        krauslab.run_checks("iga", out=tmp_path / "iga")
        assert (tmp_path / "iga" / "manifest.json").exists()
        assert (tmp_path / "iga" / "results.csv").exists()

    def test_missing_table(self, tmp_path):
        with pytest.raises(ConfigError, match="table"):
            krauslab.run_checks("iga", table=str(tmp_path / "missing.txt"))


class TestSemigroup:
    """Tests for the convolution semigroup suite."""

    def test_exact_rows(self):
        rows = krauslab.run_checks("semigroup", kind="jump", dts="1e-2,1e-3", pairs=5, repeats=3)
        named = by_name(rows)
        for check in (
            "convolution_group_property",
            "repeat_vs_compose",
            "channel_semigroup",
            "superop_choi_involution",
            "superop_adjoint_reversal",
            "superop_channel_tp_defect",
        ):
            assert named[check].passed, named[check].describe()
        assert [row.check for row in rows].count("weak_channel_residual") == 2

    def test_seeded(self):
        first = krauslab.run_checks("semigroup", kind="jump", dts="1e-2,1e-3", pairs=3, seed=4)
        second = krauslab.run_checks("semigroup", kind="jump", dts="1e-2,1e-3", pairs=3, seed=4)
        assert [r.value for r in first] == [r.value for r in second]


class TestUnravel:
    """Tests for the trajectory ensemble suite."""

    params = {"N": 200, "dt": "1e-2", "kappaT": "0.5", "checkpoints": 2}

    def test_rows(self):
        rows = krauslab.run_checks("unravel", seed=1, **self.params)
        checks = [row.check for row in rows]
        assert checks == ["channel_distance", "mean_weight_defect"] * 2 + ["dt_bias_order"]
        assert all(math.isfinite(row.value) for row in rows[:-1])

    def test_tolerance_is_sampling_plus_step_bias(self):
        rows = krauslab.run_checks("unravel", seed=1, **self.params)
        expected = 5.0 / math.sqrt(200) + 10.0 * 1.0 * 1e-2
        for row in rows[:-1]:
            assert row.tolerance == pytest.approx(expected)

    def test_standard_errors_in_results(self, tmp_path):
        rows = krauslab.run_checks("unravel", seed=1, out=tmp_path / "u", **self.params)
        named = by_name(rows)
        assert named["channel_distance"].params["stderr"] > 0
        assert named["mean_weight_defect"].params["weight_stderr"] > 0
        with open(tmp_path / "u" / "results.csv", newline="") as fh:
            lines = list(csv.reader(fh))
        text = [",".join(line) for line in lines]
        assert sum("stderr=" in line for line in text if "channel_distance" in line) == 2
        assert sum("weight_stderr=" in line for line in text if "mean_weight_defect" in line) == 2

    @pytest.mark.parametrize("kind", ["diffusive", "jump"])
    def test_dt_bias_is_first_order(self, kind):
        rows = krauslab.run_checks("unravel", kind=kind, seed=1, **self.params)
        row = by_name(rows)["dt_bias_order"]
        assert row.passed
        assert row.value >= 0.9
        assert row.params["kind"] == kind

    def test_antithetic_switch(self):
        rows = krauslab.run_checks("unravel", seed=1, antithetic="yes", **self.params)
        assert len(rows) == 5
        with pytest.raises(InvalidInputError, match="Wiener"):
            krauslab.run_checks("unravel", seed=1, kind="jump", antithetic="yes", **self.params)

    def test_thread_count_does_not_change_values(self):
        one = krauslab.run_checks("unravel", seed=1, threads=1, **self.params)
        two = krauslab.run_checks("unravel", seed=1, threads=2, **self.params)
        assert [r.value for r in one] == [r.value for r in two]


class TestKod:
    """Tests for the Kraus-operator density suite."""

    def test_rows(self):
        rows = krauslab.run_checks("kod", N=2000, dt="1e-2", seed=2)
        named = by_name(rows)
        assert set(named) == {"kod_l1_to_gaussian", "kod_splice_l1", "abelian_kraus"}
        assert named["abelian_kraus"].passed

    def test_default_bins(self):
        rows = krauslab.run_checks("kod", N=2000, dt="1e-2", seed=2)
        assert by_name(rows)["kod_l1_to_gaussian"].params["bins"] == 101

    def test_even_bins_rejected(self):
        with pytest.raises(ConfigError, match="bins"):
            krauslab.run_checks("kod", bins=50)


class TestCommutative:
    """Tests for the commutative analog suite."""

    @pytest.mark.slow
    def test_eigenfunction_labels(self):
        rows = krauslab.run_checks("commutative", ell="0.7")
        labelled = [row for row in rows if row.check == "eigenfunction_residual"]
        assert [row.params["ell"] for row in labelled] == [-1.0, -0.5, 0.0, 0.5, 0.7, 1.0]
        assert all(row.tolerance == 1e-6 and row.passed for row in labelled)


class TestWeakcomm:
    """Tests for the weak commutativity suite."""

    def test_needs_two_operators(self):
        with pytest.raises(ConfigError, match="at least 2"):
            krauslab.run_checks("weakcomm", preset="qubit-decay", N=100)


@pytest.mark.slow
@pytest.mark.parametrize(
    "subcommand", ["semigroup", "dilate", "intertwine", "commutative", "iga", "haar"]
)
def test_default_suite_passes(subcommand):
    rows = krauslab.run_checks(subcommand, seed=0)
    assert all(row.passed for row in rows), [r.describe() for r in rows if not r.passed]


@pytest.mark.slow
def test_unravel_at_reference_parameters():
    rows = krauslab.run_checks(
        "unravel", preset="qubit-decay", kappaT=1, dt="1e-3", N=10_000, seed=7
    )
    assert all(row.passed for row in rows), [r.describe() for r in rows if not r.passed]
