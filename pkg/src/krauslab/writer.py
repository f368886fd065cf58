"""Result directory writer."""

from __future__ import annotations

import csv
import json
import logging
import platform
from collections.abc import Iterable
from pathlib import Path

import numpy as np
import scipy

from .records import CheckRow, RunManifest

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
RESULTS_NAME = "results.csv"


def library_versions() -> dict[str, str]:
    """Versions recorded in every manifest."""
    from . import __version__

    return {
        "krauslab": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


class ResultWriter:
    """
    Collect check rows and write them to a result directory.

    The directory receives ``manifest.json`` (inputs, versions, seed, verdict)
    and ``results.csv`` (one row per check). Both are written once, at close.

    Example:
        >>> with ResultWriter("out/iga", manifest) as rw:
        ...     rw.extend(rows)
        >>> rw.passed
        True

    Attributes:
        out_dir: Result directory, created at close.
        manifest: Run description; its row counts are filled in at close.
    """

    def __init__(self, out_dir: str | Path, manifest: RunManifest) -> None:
        self.out_dir = Path(out_dir)
        self.manifest = manifest
        self._rows: list[CheckRow] = []
        self._closed = False

    @property
    def rows(self) -> list[CheckRow]:
        return list(self._rows)

    @property
    def failed(self) -> list[CheckRow]:
        return [row for row in self._rows if not row.passed]

    @property
    def passed(self) -> bool:
        return not self.failed

    def add(self, row: CheckRow) -> None:
        self._check_closed()
        self._rows.append(row)
        logger.debug(row.describe())

    def extend(self, rows: Iterable[CheckRow]) -> None:
        for row in rows:
            self.add(row)

    def close(self) -> list[Path]:
        """
        Write the manifest and results files.

        Returns:
            Paths of the files written.
        """
        paths = [self.out_dir / MANIFEST_NAME, self.out_dir / RESULTS_NAME]
        if self._closed:
            return paths
        self._closed = True

        self.manifest.rows_total = len(self._rows)
        self.manifest.rows_failed = len(self.failed)
        if not self.manifest.versions:
            self.manifest.versions = library_versions()

        self.out_dir.mkdir(parents=True, exist_ok=True)
        manifest_path, results_path = paths
        manifest_path.write_text(json.dumps(self.manifest.to_dict(), indent=2) + "\n")
        with results_path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CheckRow.CSV_HEADER)
            for row in self._rows:
                writer.writerow(row.to_csv_row())
        logger.info("wrote %d rows to %s", len(self._rows), self.out_dir)
        return paths

    def _check_closed(self) -> None:
        if self._closed:
            raise RuntimeError("ResultWriter is closed")

    def __enter__(self) -> ResultWriter:
        return self

    def __exit__(self, exc_type: object, exc_val: object, exc_tb: object) -> None:
        if exc_type is not None:
            # Error path: leave no partial result directory behind
            self._closed = True
        else:
            self.close()
