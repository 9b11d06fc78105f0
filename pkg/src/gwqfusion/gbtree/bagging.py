"""Bootstrap-aggregated regression trees (random-forest baseline)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..errors import ConfigError
from .boosting import Hyperparams, _check_xy, _sample_size
from .histogram import BinMapper, build_histograms
from .tree import LeafwiseTree, grow_leafwise


@dataclass(frozen=True)
class BaggedModel:
    bins: BinMapper
    trees: Tuple[LeafwiseTree, ...]

    @property
    def n_features(self) -> int:
        return self.bins.n_features

    def tree_predictions(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.stack([t.predict(X) for t in self.trees])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.tree_predictions(X).mean(axis=0)


def fit_bagged(
    X, y, n_trees: int = 100, params: Optional[Hyperparams] = None, seed: int = 42,
    bootstrap: bool = True,
) -> BaggedModel:
    """Average of ``n_trees`` unshrunk trees, each grown on a bootstrap resample.

    Trees fit the raw target (leaf value = regularised leaf mean); tree shape
    follows ``params.max_depth``, ``num_leaves`` and ``colsample``.
    """
    if n_trees < 1:
        raise ConfigError("n_trees must be >= 1")
    params = params or Hyperparams(max_depth=8, num_leaves=255)
    X, y = _check_xy(X, y)
    n, m = X.shape
    bins, B = build_histograms(X, params.n_bins)
    rng = np.random.default_rng(seed)
    g = -y
    n_cols = _sample_size(params.colsample, m)
    trees = []
    for _ in range(n_trees):
        rows = np.sort(rng.integers(0, n, n)) if bootstrap else np.arange(n)
        cols = np.arange(m) if n_cols == m else np.sort(rng.choice(m, n_cols, replace=False))
        trees.append(grow_leafwise(
            B, g, rows, cols, bins.n_bins, bins.edges,
            max_depth=params.max_depth, num_leaves=params.num_leaves,
            lam=params.l2_leaf_reg, gamma=params.min_split_gain,
            min_samples_leaf=params.min_samples_leaf,
        ))
    return BaggedModel(bins, tuple(trees))
