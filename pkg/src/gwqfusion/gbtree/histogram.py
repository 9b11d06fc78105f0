"""Quantile binning of feature columns."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..errors import DataError


@dataclass(frozen=True)
class BinMapper:
    """Per-feature sorted bin edges.

    A value ``x`` falls in bin ``#{edges < x}``, so ``bin(x) <= b`` exactly
    when ``x <= edges[b]``; training on bins and predicting on raw values with
    ``edges[b]`` as threshold therefore route every row identically.
    """

    edges: Tuple[np.ndarray, ...]

    @property
    def n_features(self) -> int:
        return len(self.edges)

    @property
    def n_bins(self) -> np.ndarray:
        return np.array([len(e) + 1 for e in self.edges], dtype=np.intp)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(f"expected a matrix with {self.n_features} columns")
        out = np.empty(X.shape, dtype=np.intp)
        for j, e in enumerate(self.edges):
            out[:, j] = np.searchsorted(e, X[:, j], side="left")
        return out

    def to_list(self) -> List[List[float]]:
        return [e.tolist() for e in self.edges]

    @classmethod
    def from_list(cls, edges: Sequence[Sequence[float]]) -> "BinMapper":
        return cls(tuple(np.asarray(e, dtype=np.float64) for e in edges))


def _feature_edges(col: np.ndarray, n_bins: int) -> np.ndarray:
    uniq = np.unique(col)
    if uniq.size <= n_bins:
        # One bin per distinct value; cut halfway between neighbours.
        mid = (uniq[:-1] + uniq[1:]) / 2
        return np.where(mid < uniq[1:], mid, uniq[:-1])
    probs = np.linspace(0.0, 1.0, n_bins + 1)[1:-1]
    edges = np.unique(np.quantile(col, probs, method="linear"))
    return edges[edges < uniq[-1]]


def build_histograms(X: np.ndarray, n_bins: int = 64) -> Tuple[BinMapper, np.ndarray]:
    """Fit quantile bin edges (at most ``n_bins`` bins per feature) and bin ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise DataError("build_histograms needs a non-empty 2-D matrix")
    if n_bins < 2:
        raise DataError("n_bins must be at least 2")
    if not np.isfinite(X).all():
        raise DataError("feature matrix contains non-finite values")
    mapper = BinMapper(tuple(_feature_edges(X[:, j], n_bins) for j in range(X.shape[1])))
    return mapper, mapper.transform(X)
