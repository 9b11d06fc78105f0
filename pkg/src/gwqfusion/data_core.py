"""Sample tables, CSV ingestion, descriptive statistics and the synthetic generator.

A :class:`SampleTable` is columnar and immutable. Numeric columns are float64
arrays in which ``NaN`` marks an absent cell; since non-finite numbers are
rejected at every entry point, ``NaN`` never stands for a measured value.
Text columns are object arrays holding ``str`` or ``None``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import ColumnError, DataError

CORE_INDICATORS: tuple[str, ...] = ("pH", "EC", "TH", "Ca", "Mg", "Na", "K", "F", "Cl")
CONCENTRATIONS = frozenset(CORE_INDICATORS) - {"pH"}
EXTRA_INDICATORS: tuple[str, ...] = ("CO3", "HCO3", "SO4", "NO3", "PO4", "SiO2")
META_TEXT: tuple[str, ...] = ("well_id", "district")
META_NUMERIC: tuple[str, ...] = ("latitude", "longitude", "year")

_KNOWN_NUMERIC = frozenset(CORE_INDICATORS + EXTRA_INDICATORS + META_NUMERIC)
_KNOWN_TEXT = frozenset(META_TEXT)


@dataclass(frozen=True)
class WaterSample:
    """One row of a :class:`SampleTable`, with ``None`` for absent values."""

    well_id: Optional[str]
    district: Optional[str]
    latitude: Optional[float]
    longitude: Optional[float]
    year: Optional[int]
    indicators: Dict[str, Optional[float]]
    extras: Dict[str, object] = field(default_factory=dict)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class SampleTable:
    """Immutable columnar table of water samples.

    ``row_ids`` are stable integer identifiers assigned at load/generation time
    and carried through every filtering operation, so reports can name the
    original rows.
    """

    __slots__ = ("_columns", "_data", "_row_ids", "column_index")

    def __init__(
        self,
        data: Mapping[str, Sequence],
        row_ids: Optional[Sequence[int]] = None,
        columns: Optional[Sequence[str]] = None,
    ):
        columns = list(columns) if columns is not None else list(data)
        missing = [c for c in CORE_INDICATORS if c not in data]
        if missing:
            raise DataError(f"table lacks core indicator columns: {', '.join(missing)}")
        if set(columns) != set(data):
            raise DataError("column order does not match data keys")

        store: Dict[str, np.ndarray] = {}
        n = None
        for name in columns:
            arr = _coerce_column(name, data[name])
            if n is None:
                n = len(arr)
            elif len(arr) != n:
                raise DataError(f"column {name!r} has {len(arr)} rows, expected {n}")
            store[name] = _freeze(arr)
        n = n or 0

        if row_ids is None:
            ids = np.arange(n, dtype=np.int64)
        else:
            ids = np.asarray(row_ids, dtype=np.int64).copy()
            if ids.shape != (n,):
                raise DataError("row_ids length does not match row count")
            if len(np.unique(ids)) != n:
                raise DataError("row_ids must be unique")

        self._columns = tuple(columns)
        self._data = store
        self._row_ids = _freeze(ids)
        self.column_index = {c: i for i, c in enumerate(self._columns)}

    # -- basic access -----------------------------------------------------

    @property
    def columns(self) -> tuple[str, ...]:
        return self._columns

    @property
    def row_ids(self) -> np.ndarray:
        return self._row_ids

    @property
    def n_rows(self) -> int:
        return len(self._row_ids)

    def __len__(self) -> int:
        return self.n_rows

    def __contains__(self, name: str) -> bool:
        return name in self._data

    def column(self, name: str) -> np.ndarray:
        try:
            return self._data[name]
        except KeyError:
            raise ColumnError(name, self._columns) from None

    def is_numeric(self, name: str) -> bool:
        return self.column(name).dtype.kind == "f"

    @property
    def numeric_columns(self) -> tuple[str, ...]:
        return tuple(c for c in self._columns if self._data[c].dtype.kind == "f")

    @property
    def text_columns(self) -> tuple[str, ...]:
        return tuple(c for c in self._columns if self._data[c].dtype.kind != "f")

    def missing_mask(self, name: str) -> np.ndarray:
        col = self.column(name)
        if col.dtype.kind == "f":
            return np.isnan(col)
        return np.array([v is None for v in col], dtype=bool)

    def has_missing(self, columns: Optional[Iterable[str]] = None) -> bool:
        cols = self._columns if columns is None else columns
        return any(self.missing_mask(c).any() for c in cols)

    def matrix(self, columns: Sequence[str]) -> np.ndarray:
        """Numeric columns stacked as an ``(n_rows, len(columns))`` float array."""
        out = np.empty((self.n_rows, len(columns)), dtype=np.float64)
        for j, name in enumerate(columns):
            col = self.column(name)
            if col.dtype.kind != "f":
                raise DataError(f"column {name!r} is not numeric")
            out[:, j] = col
        return out

    # -- derivation -------------------------------------------------------

    def take(self, positions: Sequence[int]) -> "SampleTable":
        """Rows at the given positions, in the given order."""
        idx = np.asarray(positions, dtype=np.int64)
        return SampleTable(
            {c: self._data[c][idx] for c in self._columns},
            row_ids=self._row_ids[idx],
            columns=self._columns,
        )

    def with_columns(self, updates: Mapping[str, Sequence]) -> "SampleTable":
        data = dict(self._data)
        columns = list(self._columns)
        for name, values in updates.items():
            if name not in data:
                columns.append(name)
            data[name] = values
        return SampleTable(data, row_ids=self._row_ids, columns=columns)

    def sorted_by_id(self) -> "SampleTable":
        return self.take(np.argsort(self._row_ids, kind="stable"))

    def rows(self) -> Iterator[WaterSample]:
        known = set(CORE_INDICATORS) | _KNOWN_TEXT | set(META_NUMERIC)
        for i in range(self.n_rows):
            def get(name):
                if name not in self._data:
                    return None
                v = self._data[name][i]
                if isinstance(v, float) and math.isnan(v):
                    return None
                return v.item() if isinstance(v, np.generic) else v

            year = get("year")
            yield WaterSample(
                well_id=get("well_id"),
                district=get("district"),
                latitude=get("latitude"),
                longitude=get("longitude"),
                year=None if year is None else int(year),
                indicators={c: get(c) for c in CORE_INDICATORS},
                extras={c: get(c) for c in self._columns if c not in known},
            )

    def equals(self, other: "SampleTable") -> bool:
        """Value equality (missing cells compare equal), row ids included."""
        if self._columns != other._columns or not np.array_equal(self._row_ids, other._row_ids):
            return False
        for c in self._columns:
            a, b = self._data[c], other._data[c]
            if a.dtype.kind == "f":
                if b.dtype.kind != "f" or not np.array_equal(a, b, equal_nan=True):
                    return False
            elif list(a) != list(b):
                return False
        return True

    def __repr__(self) -> str:
        return f"SampleTable(n_rows={self.n_rows}, columns={list(self._columns)})"


def _coerce_column(name: str, values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype.kind in "fiub":
        arr = arr.astype(np.float64, copy=True)
        if np.isinf(arr).any():
            raise DataError(f"column {name!r} contains non-finite values")
        if name in CONCENTRATIONS and (arr[~np.isnan(arr)] < 0).any():
            raise DataError(f"column {name!r} contains negative concentrations")
        return arr
    if name in _KNOWN_NUMERIC:
        # Lists with None holes for numeric columns.
        out = np.array([np.nan if v is None else float(v) for v in values], dtype=np.float64)
        return _coerce_column(name, out)
    out = np.empty(len(arr), dtype=object)
    for i, v in enumerate(values):
        out[i] = None if v is None else str(v)
    return out


# -- CSV ----------------------------------------------------------------------


def default_schema() -> Dict[str, str]:
    return {c: c for c in CORE_INDICATORS}


def _parse_number(cell: str) -> float:
    v = float(cell)
    if not math.isfinite(v):
        raise ValueError("non-finite")
    return v


def load_csv(path, schema: Optional[Mapping[str, str]] = None) -> SampleTable:
    """Read a UTF-8 CSV with a header row into a :class:`SampleTable`.

    ``schema`` maps canonical column names (``"EC"``, ``"well_id"`` ...) to the
    header used in the file. Unmapped core indicators are looked up under
    their canonical name. Columns that are neither mapped nor known keep their
    header as name and become numeric only if every non-empty cell parses.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    mapping = default_schema()
    if schema:
        mapping.update(schema)
    header_to_name = {v: k for k, v in mapping.items()}

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty, header row expected") from None
        raw_rows = [r for r in reader if r]

    header = [h.strip() for h in header]
    names = [header_to_name.get(h, h) for h in header]
    absent = [f"{c} (header {mapping[c]!r})" for c in CORE_INDICATORS if c not in names]
    if absent:
        raise DataError(f"{path}: header lacks core indicator columns: {', '.join(absent)}")
    if len(set(names)) != len(names):
        raise DataError(f"{path}: duplicate column names in header")

    cells: List[List[Optional[str]]] = [[] for _ in names]
    for lineno, row in enumerate(raw_rows, start=2):
        if len(row) != len(names):
            raise DataError(f"{path}: line {lineno} has {len(row)} fields, expected {len(names)}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            cells[j].append(cell if cell else None)

    data: Dict[str, np.ndarray] = {}
    for j, name in enumerate(names):
        col = cells[j]
        strict = name in _KNOWN_NUMERIC
        if name in _KNOWN_TEXT:
            data[name] = np.array(col, dtype=object)
            continue
        parsed = np.empty(len(col), dtype=np.float64)
        ok = True
        for i, cell in enumerate(col):
            if cell is None:
                parsed[i] = np.nan
                continue
            try:
                parsed[i] = _parse_number(cell)
            except ValueError:
                if strict:
                    raise DataError(
                        f"{path}: row {i + 1} (line {i + 2}), column {header[j]!r}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
                ok = False
                break
        if ok:
            if name in CONCENTRATIONS and (parsed[~np.isnan(parsed)] < 0).any():
                i = int(np.flatnonzero(parsed < 0)[0])
                raise DataError(
                    f"{path}: row {i + 1}, column {header[j]!r}: negative concentration"
                )
            data[name] = parsed
        else:
            data[name] = np.array(col, dtype=object)
    return SampleTable(data, columns=names)


def format_number(v: float) -> str:
    if math.isnan(v):
        return ""
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_csv(table: SampleTable, path, schema: Optional[Mapping[str, str]] = None) -> None:
    """Write a table with the conventions :func:`load_csv` reads back."""
    mapping = dict(schema or {})
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([mapping.get(c, c) for c in table.columns])
        cols = [table.column(c) for c in table.columns]
        numeric = [c.dtype.kind == "f" for c in cols]
        for i in range(table.n_rows):
            w.writerow(
                format_number(col[i]) if num else ("" if col[i] is None else col[i])
                for col, num in zip(cols, numeric)
            )


# -- statistics ---------------------------------------------------------------


@dataclass(frozen=True)
class ColumnStats:
    count: int
    mean: float
    std: float
    min: float
    q25: float
    q50: float
    q75: float
    max: float

    def as_dict(self) -> Dict[str, float]:
        return {
            "count": self.count, "mean": self.mean, "std": self.std, "min": self.min,
            "25%": self.q25, "50%": self.q50, "75%": self.q75, "max": self.max,
        }


@dataclass(frozen=True)
class StatsSummary:
    columns: Dict[str, ColumnStats]

    def __getitem__(self, name: str) -> ColumnStats:
        try:
            return self.columns[name]
        except KeyError:
            raise ColumnError(name, list(self.columns)) from None

    def __contains__(self, name: str) -> bool:
        return name in self.columns


def column_stats(values: np.ndarray) -> ColumnStats:
    v = np.sort(np.asarray(values, dtype=np.float64)[~np.isnan(values)])
    if v.size == 0:
        raise DataError("column has no non-missing values")
    # Sorted first so that any permutation of the input yields identical bits.
    mean = float(np.mean(v))
    std = float(np.sqrt(np.mean((v - mean) ** 2)))
    q25, q50, q75 = (float(q) for q in np.quantile(v, [0.25, 0.5, 0.75], method="linear"))
    return ColumnStats(int(v.size), mean, std, float(v[0]), q25, q50, q75, float(v[-1]))


def summarize(table: SampleTable, columns: Optional[Sequence[str]] = None) -> StatsSummary:
    """Count/mean/std/quartiles per column over non-missing values.

    Defaults to the nine core indicators. ``std`` divides by n; quantiles
    interpolate linearly between order statistics.
    """
    if table.n_rows == 0:
        raise DataError("cannot summarize an empty table")
    cols = CORE_INDICATORS if columns is None else tuple(columns)
    out = {}
    for c in cols:
        col = table.column(c)
        if col.dtype.kind != "f":
            raise DataError(f"column {c!r} is not numeric")
        try:
            out[c] = column_stats(col)
        except DataError:
            raise DataError(f"column {c!r} is entirely missing") from None
    return StatsSummary(out)


# Target statistics for the synthetic generator (a 1989-record groundwater survey).
SURVEY_SUMMARY = StatsSummary({
    "pH": ColumnStats(1989, 7.844, 0.389, 4.990, 7.660, 7.900, 8.100, 8.850),
    "EC": ColumnStats(1989, 681.356, 471.700, 35, 350, 570, 890, 3650),
    "TH": ColumnStats(1989, 220.059, 144.709, 6, 113, 192, 291, 1235),
    "Ca": ColumnStats(1989, 45.870, 28.911, 1, 26, 40, 59, 263),
    "Mg": ColumnStats(1989, 26.922, 22.488, 0, 11, 22, 38, 196),
    "Na": ColumnStats(1989, 48.880, 53.802, 1, 17, 32, 60, 708),
    "K": ColumnStats(1989, 10.901, 22.542, 0, 1.600, 3.600, 10.100, 345),
    "F": ColumnStats(1989, 0.385, 0.393, 0, 0.140, 0.270, 0.480, 4.680),
    "Cl": ColumnStats(1989, 77.419, 81.407, 2, 25, 51, 98, 739),
})

# Loadings on the shared latent factor (dissolved-solids proxy).
LATENT_LOADINGS = {"EC": 0.9, "TH": 0.8, "Cl": 0.75, "Ca": 0.6, "Mg": 0.55, "Na": 0.6}

_DISTRICTS = (
    "Angul", "Balasore", "Bargarh", "Cuttack", "Ganjam", "Jajpur", "Kalahandi",
    "Keonjhar", "Khordha", "Koraput", "Mayurbhanj", "Puri", "Sambalpur", "Sundargarh",
)
_LAT_RANGE = (17.78, 22.73)
_LON_RANGE = (81.37, 87.53)


def _tail_exponent(s: ColumnStats) -> float:
    """Exponent of the power-law tails that makes the quantile map hit ``s.mean``.

    The quantile function is linear between (q25, q50, q75) and follows
    ``x = q75 + (max - q75) * t**p`` above q75 (mirrored below q25), so its mean
    is ``m(p) = mid + (tail_hi - tail_lo) / (4 (p + 1))``.
    """
    base = (s.q25 + s.q75) / 4 + ((s.q25 + s.q50) / 2 + (s.q50 + s.q75) / 2) / 4
    spread = (s.max - s.q75) - (s.q25 - s.min)
    if spread == 0:
        return 1.0
    k = (s.mean - base) * 4 / spread  # = 1/(p+1)
    p = 1.0 / k - 1.0 if k > 0 else math.inf
    return float(np.clip(p, 0.05, 200.0))


def _quantile_map(u: np.ndarray, s: ColumnStats, p: float) -> np.ndarray:
    knots_u = np.array([0.25, 0.5, 0.75])
    knots_x = np.array([s.q25, s.q50, s.q75])
    x = np.interp(u, knots_u, knots_x)
    hi = u > 0.75
    x[hi] = s.q75 + (s.max - s.q75) * ((u[hi] - 0.75) / 0.25) ** p
    lo = u < 0.25
    x[lo] = s.q25 - (s.q25 - s.min) * ((0.25 - u[lo]) / 0.25) ** p
    return np.clip(x, s.min, s.max)


def synth_generate(targets: StatsSummary, n: int, seed: int) -> SampleTable:
    """Generate ``n`` samples whose marginals follow ``targets``.

    Each core indicator is drawn through a Gaussian copula: a latent normal
    (sharing one factor across EC/TH/Cl and the major ions) is mapped to a
    uniform and then through a monotone quantile function that passes through
    the target quartiles, spans exactly [min, max], and has power-law tails
    tuned so the column mean matches the target mean.
    """
    if n < 1:
        raise DataError("n must be >= 1")
    for c in CORE_INDICATORS:
        s = targets[c]
        if not s.max > s.min:
            raise DataError(f"degenerate target for {c!r}: max <= min")
        if not (s.min <= s.q25 <= s.q50 <= s.q75 <= s.max):
            raise DataError(f"target quartiles for {c!r} are not ordered")

    rng = np.random.default_rng(seed)
    latent = rng.standard_normal(n)
    data: Dict[str, object] = {
        "well_id": np.array([f"W{i + 1:05d}" for i in range(n)], dtype=object),
        "district": np.array(rng.choice(_DISTRICTS, size=n), dtype=object),
        "latitude": np.round(rng.uniform(*_LAT_RANGE, size=n), 4),
        "longitude": np.round(rng.uniform(*_LON_RANGE, size=n), 4),
        "year": rng.integers(2015, 2023, size=n).astype(np.float64),
    }
    for c in CORE_INDICATORS:
        s = targets[c]
        rho = LATENT_LOADINGS.get(c, 0.0)
        z = rho * latent + math.sqrt(1.0 - rho * rho) * rng.standard_normal(n)
        data[c] = _quantile_map(ndtr(z), s, _tail_exponent(s))
    order = ["well_id", "district", "latitude", "longitude", "year", *CORE_INDICATORS]
    return SampleTable(data, columns=order)
