"""Rectangular result tables shared by the solvers and the experiment harness."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ResultTable:
    """Named columns of numbers plus free-form metadata.

    NaN entries are only allowed in rows whose ``diverged`` column is nonzero.
    """

    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = list(self.columns)
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("duplicate column names")
        rows, self.rows = self.rows, []
        for row in rows:
            self.append(row)

    def append(self, row) -> None:
        if isinstance(row, dict):
            missing = set(self.columns) - set(row)
            if missing:
                raise ValueError(f"row lacks columns {sorted(missing)}")
            row = [row[c] for c in self.columns]
        row = [float(v) for v in row]
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} entries, table has {len(self.columns)} columns")
        flagged = "diverged" in self.columns and row[self.columns.index("diverged")] != 0
        if not flagged and not all(np.isfinite(row)):
            raise ValueError("non-finite entry in a row without a diverged flag")
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        try:
            k = self.columns.index(name)
        except ValueError:
            raise KeyError(f"no column {name!r}; have {self.columns}") from None
        return np.array([row[k] for row in self.rows], dtype=float)

    def __len__(self) -> int:
        return len(self.rows)

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(len(self.rows), len(self.columns))
