"""Per-iteration solve traces and their CSV form.

Every solver appends aligned rows; the CSV schema is fixed per solver so
runs of different methods can be overlaid by downstream tooling. Missing
values (e.g. alpha for SIRT) serialize as empty fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NTM_COLUMNS = ("iter", "alpha", "gamma", "res_norm", "F_norm", "dinv", "theta", "case_id")
PNTM_COLUMNS = NTM_COLUMNS + ("outer_iter", "inner_iter", "subspace_dim", "proj_res")
GBIT_COLUMNS = ("iter", "alpha", "res_norm", "F_norm", "subspace_dim", "lsqr_res")
SIRT_COLUMNS = ("iter", "alpha", "res_norm")
CGLS_COLUMNS = ("iter", "alpha", "res_norm")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if np.isnan(v):
        return ""
    return repr(v)


@dataclass
class SolveTrace:
    """Column-aligned iteration log for one solver run."""

    columns: tuple
    rows: list = field(default_factory=list)
    # columns kept in memory but not written to CSV (diagnostics like dir_norm)
    extra_columns: tuple = ()
    extra_rows: list = field(default_factory=list)

    def append(self, *values, extra=()):
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))
        if self.extra_columns:
            self.extra_rows.append(tuple(extra))

    def column(self, name) -> np.ndarray:
        if name in self.columns:
            idx = self.columns.index(name)
            data = [row[idx] for row in self.rows]
        elif name in self.extra_columns:
            idx = self.extra_columns.index(name)
            data = [row[idx] for row in self.extra_rows]
        else:
            raise KeyError(name)
        return np.array(
            [np.nan if v is None else float(v) for v in data], dtype=float
        )

    def last(self, name):
        return self.column(name)[-1]

    def __len__(self):
        return len(self.rows)

    def write_csv(self, path):
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
