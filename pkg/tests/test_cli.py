"""Tests for CLI functionality."""

import csv
import json

import pytest

from krauslab import __version__
from krauslab.__main__ import EXIT_ERROR, EXIT_OK, main
from krauslab.finite_groups import cyclic_group


class TestHelp:
    """Tests for help and version output."""

    def test_no_arguments_prints_help(self, capsys):
        assert main([]) == EXIT_OK
        out = capsys.readouterr().out
        assert "usage: krauslab" in out
        assert "unravel" in out

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main(["--version"])
        assert exc_info.value.code == 0
        assert __version__ in capsys.readouterr().out

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["teleport"])
        assert exc_info.value.code == 2


class TestRun:
    """Tests for running suites from the command line."""

    def test_iga(self, tmp_path, capsys):
        out = tmp_path / "iga"
        assert main(["iga", "--group", "z2", "--seed", "5", "--out", str(out)]) == EXIT_OK

        printed = capsys.readouterr().out
        assert "krauslab iga: seed 5, 1 thread(s)" in printed
        assert "0 failed" in printed

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["subcommand"] == "iga"
        assert manifest["seed"] == 5
        assert manifest["params"] == {"group": "z2", "table": ""}
        assert manifest["passed"] is True
        with (out / "results.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == manifest["rows_total"] > 0
        assert {row["passed"] for row in rows} == {"pass"}

    def test_options_after_subcommand(self, tmp_path):
        out = tmp_path / "after"
        assert main(["iga", "--group", "z2", "--out", str(out), "--seed", "2"]) == EXIT_OK
        assert json.loads((out / "manifest.json").read_text())["seed"] == 2

    def test_table_file(self, tmp_path):
        table = tmp_path / "z3.txt"
        table.write_text(cyclic_group(3).to_text())
        out = tmp_path / "table"
        assert main(["iga", "--table", str(table), "--out", str(out)]) == EXIT_OK
        assert "group=z3" in (out / "results.csv").read_text()

    def test_config_file(self, tmp_path):
        out = tmp_path / "from-file"
        ini = tmp_path / "run.ini"
        ini.write_text(f"[run]\nsubcommand = iga\nseed = 9\nout = {out}\n\n[iga]\ngroup = z2\n")
        assert main(["--config", str(ini)]) == EXIT_OK
        assert json.loads((out / "manifest.json").read_text())["seed"] == 9

    def test_rerun_is_identical(self, tmp_path):
        for name in ("a", "b"):
            assert main(["iga", "--group", "z2", "--out", str(tmp_path / name)]) == EXIT_OK
        assert (tmp_path / "a" / "results.csv").read_bytes() == (
            tmp_path / "b" / "results.csv"
        ).read_bytes()


class TestErrors:
    """Tests for invalid input."""

    def test_bad_parameter(self, tmp_path, capsys):
        out = tmp_path / "bad"
        assert main(["kod", "--bins", "50", "--out", str(out)]) == EXIT_ERROR
        assert "Error: Invalid configuration key 'bins'" in capsys.readouterr().err
        assert not out.exists()

    def test_subcommand_mismatch(self, tmp_path, capsys):
        ini = tmp_path / "run.ini"
        ini.write_text("[run]\nsubcommand = kod\n")
        assert main(["iga", "--config", str(ini), "--out", str(tmp_path / "x")]) == EXIT_ERROR
        assert "Error:" in capsys.readouterr().err

    def test_missing_table(self, tmp_path, capsys):
        code = main(["iga", "--table", str(tmp_path / "missing.txt"), "--out", str(tmp_path)])
        assert code == EXIT_ERROR
        assert "table" in capsys.readouterr().err
