"""CSV bundle reading.

Every simulator output starts with a `# config_hash=... seed=...` header
line; files from different runs must never be mixed into one figure, so
the hash is parsed and checked by the renderer.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np

_HEADER_RE = re.compile(r"^#\s*config_hash=(\S+)\s+seed=(\d+)\s*$")


class BundleError(ValueError):
    """Raised for missing, empty or inconsistent input files."""


@dataclass(frozen=True)
class CsvTable:
    path: str
    config_hash: str
    seed: int
    columns: tuple
    data: dict  # column name -> float ndarray

    def __getitem__(self, column: str) -> np.ndarray:
        return self.data[column]

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.data.values())))


def _parse_cell(cell: str) -> float:
    if cell == "-inf":
        return -np.inf
    return float(cell)


def read_table(path: str) -> CsvTable:
    if not os.path.exists(path):
        raise BundleError(f"missing input file: {path}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        match = _HEADER_RE.match(header)
        if not match:
            raise BundleError(f"{path}: missing config-hash header line")
        columns = tuple(fh.readline().strip().split(","))
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if not rows:
        raise BundleError(f"{path}: no data rows")
    values = np.array([[_parse_cell(c) for c in row] for row in rows])
    data = {name: values[:, i] for i, name in enumerate(columns)}
    return CsvTable(path=path, config_hash=match.group(1),
                    seed=int(match.group(2)), columns=columns, data=data)


def check_same_config(tables: list[CsvTable]) -> str:
    hashes = {t.config_hash for t in tables}
    if len(hashes) > 1:
        detail = ", ".join(f"{os.path.basename(t.path)}={t.config_hash}"
                           for t in tables)
        raise BundleError(f"input files come from different configs: "
                          f"{detail}")
    return tables[0].config_hash
