"""Cleaning and feature preparation: imputation, dedup, IQR fences, scaling, splits."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .data_core import CORE_INDICATORS, SampleTable
from .errors import ColumnError, DataError


# -- imputation ---------------------------------------------------------------


@dataclass(frozen=True)
class Imputer:
    """Fill values learned from one table: numeric means and text modes."""

    means: Dict[str, float]
    modes: Dict[str, str]

    def apply_matrix(self, X: np.ndarray, columns: Sequence[str]) -> np.ndarray:
        out = np.array(X, dtype=np.float64, copy=True)
        for j, c in enumerate(columns):
            holes = np.isnan(out[:, j])
            if holes.any():
                out[holes, j] = self.means[c]
        return out


def _mode(values) -> str:
    counts = Counter(v for v in values if v is not None)
    best = max(counts.values())
    # Counter preserves insertion order, so the first-seen value wins ties.
    return next(v for v, c in counts.items() if c == best)


def fit_imputer(table: SampleTable, columns: Optional[Sequence[str]] = None) -> Imputer:
    cols = table.columns if columns is None else columns
    means, modes = {}, {}
    for c in cols:
        col = table.column(c)
        present = ~table.missing_mask(c)
        if not present.any():
            raise DataError(f"column {c!r} is entirely missing; cannot impute")
        if col.dtype.kind == "f":
            means[c] = float(np.mean(col[present]))
        else:
            modes[c] = _mode(col)
    return Imputer(means, modes)


def impute(table: SampleTable, imputer: Optional[Imputer] = None) -> SampleTable:
    """Replace missing numeric cells by the column mean and text cells by the mode.

    With ``imputer`` given, its stored statistics are used instead of ones
    computed from ``table``, and only the columns it covers are filled.
    """
    holes = [c for c in table.columns if table.missing_mask(c).any()]
    if imputer is None:
        imputer = fit_imputer(table, holes)
    else:
        holes = [c for c in holes if c in imputer.means or c in imputer.modes]
    if not holes:
        return table
    updates = {}
    for c in holes:
        col = table.column(c)
        mask = table.missing_mask(c)
        if col.dtype.kind == "f":
            filled = col.copy()
            filled[mask] = imputer.means[c]
        else:
            filled = np.array(col, dtype=object)
            filled[mask] = imputer.modes[c]
        updates[c] = filled
    return table.with_columns(updates)


# -- duplicates ---------------------------------------------------------------


def _row_keys(table: SampleTable) -> List[tuple]:
    cols = []
    for c in table.columns:
        col = table.column(c)
        if col.dtype.kind == "f":
            cols.append([None if math.isnan(v) else v for v in col.tolist()])
        else:
            cols.append(list(col))
    return list(zip(*cols)) if cols else []


def dedup(table: SampleTable) -> SampleTable:
    """Keep the first occurrence of each set of rows equal in every column."""
    seen = set()
    keep = []
    for i, key in enumerate(_row_keys(table)):
        if key not in seen:
            seen.add(key)
            keep.append(i)
    if len(keep) == table.n_rows:
        return table
    return table.take(keep)


# -- outliers -----------------------------------------------------------------


@dataclass(frozen=True)
class ColumnFences:
    q1: float
    q3: float
    iqr: float
    lower_fence: float
    upper_fence: float
    removed_row_ids: List[int] = field(default_factory=list)


@dataclass(frozen=True)
class OutlierReport:
    k: float
    columns: Dict[str, ColumnFences]
    removed_row_ids: List[int]
    n_input: int
    n_kept: int

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "n_input": self.n_input,
            "n_kept": self.n_kept,
            "removed_row_ids": list(self.removed_row_ids),
            "columns": {
                c: {
                    "q1": f.q1, "q3": f.q3, "iqr": f.iqr,
                    "lower_fence": f.lower_fence, "upper_fence": f.upper_fence,
                    "removed_row_ids": list(f.removed_row_ids),
                }
                for c, f in self.columns.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _complete_column(table: SampleTable, name: str) -> np.ndarray:
    col = table.column(name)
    if col.dtype.kind != "f":
        raise DataError(f"column {name!r} is not numeric")
    if np.isnan(col).any():
        raise DataError(f"column {name!r} has missing values; impute first")
    return col


def iqr_filter(
    table: SampleTable,
    columns: Optional[Sequence[str]] = None,
    k: float = 1.5,
) -> Tuple[SampleTable, OutlierReport]:
    """Drop every row lying strictly outside ``[Q1 - k*IQR, Q3 + k*IQR]`` in any column."""
    if not k > 0:
        raise DataError("k must be positive")
    cols = CORE_INDICATORS if columns is None else tuple(columns)
    n = table.n_rows
    bad = np.zeros(n, dtype=bool)
    fences = {}
    ids = table.row_ids
    for c in cols:
        col = _complete_column(table, c)
        if n == 0:
            fences[c] = ColumnFences(math.nan, math.nan, math.nan, -math.inf, math.inf)
            continue
        q1, q3 = (float(q) for q in np.quantile(col, [0.25, 0.75], method="linear"))
        iqr = q3 - q1
        lo, hi = q1 - k * iqr, q3 + k * iqr
        out = (col < lo) | (col > hi)
        bad |= out
        fences[c] = ColumnFences(q1, q3, iqr, lo, hi, ids[out].tolist())
    kept = table.take(np.flatnonzero(~bad))
    report = OutlierReport(k, fences, ids[bad].tolist(), n, kept.n_rows)
    return kept, report


def apply_fences(table: SampleTable, report: OutlierReport) -> SampleTable:
    """Filter ``table`` with fences from an earlier :func:`iqr_filter` call."""
    bad = np.zeros(table.n_rows, dtype=bool)
    for c, f in report.columns.items():
        col = _complete_column(table, c)
        bad |= (col < f.lower_fence) | (col > f.upper_fence)
    return table.take(np.flatnonzero(~bad))


# -- scaling ------------------------------------------------------------------


@dataclass(frozen=True)
class Scaler:
    """Per-column z-score parameters (population std)."""

    columns: Tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    @property
    def zero_variance(self) -> np.ndarray:
        return self.std == 0

    @classmethod
    def fit_matrix(cls, X: np.ndarray, columns: Sequence[str]) -> "Scaler":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(columns):
            raise DataError("matrix shape does not match columns")
        if X.shape[0] < 2:
            raise DataError("at least 2 rows are needed to fit a scaler")
        if np.isnan(X).any():
            raise DataError("cannot fit a scaler on missing values")
        mean = X.mean(axis=0)
        std = np.sqrt(((X - mean) ** 2).mean(axis=0))
        mean.setflags(write=False)
        std.setflags(write=False)
        return cls(tuple(columns), mean, std)

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.columns):
            raise DataError(
                f"expected {len(self.columns)} feature columns, got "
                f"{X.shape[1] if X.ndim == 2 else X.ndim}"
            )
        safe = np.where(self.zero_variance, 1.0, self.std)
        Z = (X - self.mean) / safe
        Z[:, self.zero_variance] = 0.0
        return Z

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        mean = np.array(d["mean"], dtype=np.float64)
        std = np.array(d["std"], dtype=np.float64)
        mean.setflags(write=False)
        std.setflags(write=False)
        return cls(tuple(d["columns"]), mean, std)


def fit_scaler(table: SampleTable, columns: Optional[Sequence[str]] = None) -> Scaler:
    cols = CORE_INDICATORS if columns is None else tuple(columns)
    return Scaler.fit_matrix(np.column_stack([_complete_column(table, c) for c in cols])
                             if cols else np.empty((table.n_rows, 0)), cols)


def transform(scaler: Scaler, table: SampleTable) -> np.ndarray:
    """Scale ``table``'s columns with the scaler's stored mean and std."""
    if not isinstance(scaler, Scaler):
        raise DataError("transform needs a fitted Scaler")
    for c in scaler.columns:
        if c not in table:
            raise ColumnError(c, table.columns)
    return scaler.apply(table.matrix(scaler.columns))


# -- splitting and correlation ------------------------------------------------


def split_train_test(
    table: SampleTable, test_fraction: float = 0.2, seed: int = 42
) -> Tuple[SampleTable, SampleTable]:
    if not 0 < test_fraction < 1:
        raise DataError("test_fraction must lie strictly between 0 and 1")
    n = table.n_rows
    n_train = int(math.floor(n * (1 - test_fraction) + 0.5))
    if n < 2 or n_train < 1 or n_train >= n:
        raise DataError(f"cannot split {n} rows with test_fraction={test_fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    return table.take(perm[:n_train]), table.take(perm[n_train:])


def correlation_matrix(table: SampleTable, columns: Optional[Sequence[str]] = None) -> np.ndarray:
    """Pearson correlation between the given columns (core indicators by default)."""
    cols = CORE_INDICATORS if columns is None else tuple(columns)
    X = np.column_stack([_complete_column(table, c) for c in cols])
    D = X - X.mean(axis=0)
    norms = np.sqrt((D * D).sum(axis=0))
    flat = [c for c, s in zip(cols, norms) if s == 0]
    if flat:
        raise DataError(f"correlation undefined for constant columns: {', '.join(flat)}")
    U = D / norms
    R = np.clip(U.T @ U, -1.0, 1.0)
    R = (R + R.T) / 2
    np.fill_diagonal(R, 1.0)
    return R
