"""Sub-indices, Groundwater Quality Index aggregation and quality bands.

Compliant values score 100 and the index is the root-sum-of-squares of the
sub-indices, so with nine indicators fully compliant water scores 300. The
band table, read literally, calls that score "Unsuitable" even though the
text states that lower scores mean better water. Both rules are implemented
exactly as published; the index is used as a regression target, where the
contradiction does not matter.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Tuple

import numpy as np

from .data_core import SampleTable
from .errors import ColumnError, ConfigError, DataError


@dataclass(frozen=True)
class Limit:
    std_min: float
    std_max: float

    def __post_init__(self):
        object.__setattr__(self, "std_min", float(self.std_min))
        object.__setattr__(self, "std_max", float(self.std_max))
        if not (math.isfinite(self.std_min) and math.isfinite(self.std_max)):
            raise ConfigError("limits must be finite")
        if not self.std_min < self.std_max:
            raise ConfigError(f"std_min {self.std_min} must be below std_max {self.std_max}")


class WhoLimits(Mapping[str, Limit]):
    """Ordered indicator -> acceptable range table."""

    def __init__(self, limits: Mapping[str, Limit]):
        if not limits:
            raise ConfigError("at least one indicator limit is required")
        self._limits = {k: v if isinstance(v, Limit) else Limit(*v) for k, v in limits.items()}

    def __getitem__(self, key: str) -> Limit:
        return self._limits[key]

    def __iter__(self):
        return iter(self._limits)

    def __len__(self) -> int:
        return len(self._limits)

    def __repr__(self) -> str:
        return f"WhoLimits({self._limits!r})"

    @classmethod
    def default(cls) -> "WhoLimits":
        return cls(DEFAULT_LIMITS)

    def to_dict(self) -> dict:
        return {k: [v.std_min, v.std_max] for k, v in self._limits.items()}

    @classmethod
    def from_json(cls, path) -> "WhoLimits":
        """Load a limits file.

        The file maps indicator names to ``[std_min, std_max]`` (or to an
        object with those keys) and by itself defines the indicator set. Set
        the top-level key ``"extend_defaults": true`` to override only some
        default entries.
        """
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"limits file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"limits file {path} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("limits file must hold a JSON object")
        extend = bool(doc.pop("extend_defaults", False))
        parsed = {}
        for name, entry in doc.items():
            if isinstance(entry, dict):
                lo, hi = entry.get("std_min"), entry.get("std_max")
            elif isinstance(entry, (list, tuple)) and len(entry) == 2:
                lo, hi = entry
            else:
                raise ConfigError(f"bad limit entry for {name!r}")
            try:
                parsed[name] = Limit(float(lo), float(hi))
            except (TypeError, ValueError):
                raise ConfigError(f"bad limit entry for {name!r}") from None
        if extend:
            merged = dict(DEFAULT_LIMITS)
            merged.update(parsed)
            parsed = merged
        return cls(parsed)


DEFAULT_LIMITS: Dict[str, Limit] = {
    "pH": Limit(6.5, 8.5),
    "EC": Limit(1, 1500),
    "TH": Limit(1, 300),
    "Ca": Limit(1, 75),
    "Mg": Limit(1, 50),
    "Na": Limit(1, 200),
    "K": Limit(1, 12),
    "F": Limit(1, 1.5),
    "Cl": Limit(1, 250),
}


def sub_index(value: float, limits: Limit, concentration: bool = True) -> float:
    if not math.isfinite(value):
        raise DataError(f"non-finite indicator value {value!r}")
    if concentration and value < 0:
        raise DataError(f"negative concentration {value!r}")
    if value < limits.std_min:
        si = value / limits.std_min * 100.0
    elif value > limits.std_max:
        si = limits.std_max / value * 100.0
    else:
        si = 100.0
    return min(max(si, 0.0), 100.0)


def sub_index_array(values: np.ndarray, limits: Limit, concentration: bool = True) -> np.ndarray:
    """Vectorised :func:`sub_index`."""
    v = np.asarray(values, dtype=np.float64)
    if not np.isfinite(v).all():
        raise DataError("non-finite indicator values")
    if concentration and (v < 0).any():
        raise DataError("negative concentrations")
    with np.errstate(divide="ignore"):
        si = np.where(
            v < limits.std_min,
            v / limits.std_min * 100.0,
            np.where(v > limits.std_max, limits.std_max / np.where(v > 0, v, 1.0) * 100.0, 100.0),
        )
    return np.clip(si, 0.0, 100.0)


def aggregate(sub_indices: Iterable[float]) -> float:
    s = [float(x) for x in sub_indices]
    if not s:
        raise DataError("cannot aggregate an empty list of sub-indices")
    for x in s:
        if not 0.0 <= x <= 100.0:
            raise DataError(f"sub-index {x!r} outside [0, 100]")
    return math.sqrt(sum(x * x for x in s))


class BandLabel(str, enum.Enum):
    EXCELLENT = "Excellent"
    GOOD = "Good"
    POOR = "Poor"
    VERY_POOR = "Very Poor"
    UNSUITABLE = "Unsuitable"


@dataclass(frozen=True)
class QualityBand:
    label: BandLabel
    lower: float
    upper: float
    out_of_table: bool = False


_BANDS: Tuple[Tuple[BandLabel, float, float], ...] = (
    (BandLabel.EXCELLENT, 0.0, 50.0),
    (BandLabel.GOOD, 50.0, 100.0),
    (BandLabel.POOR, 100.0, 200.0),
    (BandLabel.VERY_POOR, 200.0, 300.0),
    (BandLabel.UNSUITABLE, 300.0, 400.0),
)


def classify(gwqi: float) -> QualityBand:
    """Band for a GWQI score: ``[lo, hi)`` intervals, the last one closed at 400."""
    if math.isnan(gwqi) or gwqi < 0:
        raise DataError(f"GWQI must be non-negative, got {gwqi!r}")
    for label, lo, hi in _BANDS:
        if lo <= gwqi < hi:
            return QualityBand(label, lo, hi)
    if gwqi == 400.0:
        return QualityBand(BandLabel.UNSUITABLE, 300.0, 400.0)
    return QualityBand(BandLabel.UNSUITABLE, 300.0, 400.0, out_of_table=True)


def compute_targets(table: SampleTable, limits: Optional[WhoLimits] = None) -> np.ndarray:
    """GWQI score for every row, from unscaled indicator values."""
    limits = WhoLimits.default() if limits is None else limits
    n = table.n_rows
    total = np.zeros(n, dtype=np.float64)
    for name, lim in limits.items():
        if name not in table:
            raise ColumnError(name, table.columns)
        col = table.column(name)
        if col.dtype.kind != "f":
            raise DataError(f"indicator column {name!r} is not numeric")
        if np.isnan(col).any():
            raise DataError(f"indicator column {name!r} has missing values; impute first")
        si = sub_index_array(col, lim, concentration=name != "pH")
        total += si * si
    return np.sqrt(total)
