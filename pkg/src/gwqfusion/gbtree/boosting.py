"""Gradient boosting on squared loss with leaf-wise or symmetric trees."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional, Tuple, Union

import numpy as np

from ..errors import ConfigError, DataError
from .histogram import BinMapper, build_histograms
from .tree import (
    LEAFWISE,
    SYMMETRIC,
    LeafwiseTree,
    ObliviousTree,
    grow_leafwise,
    grow_symmetric,
    tree_from_dict,
)

log = logging.getLogger(__name__)

MODEL_FORMAT = "gwqfusion.boosted"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    """Boosting settings.

    ``learning_rate`` is the shrinkage applied to every tree; ``min_split_gain``
    is the per-split complexity penalty and ``l2_leaf_reg`` the L2 penalty on
    leaf weights.
    """

    n_estimators: int = 300
    learning_rate: float = 0.03
    max_depth: int = 6
    num_leaves: int = 31
    subsample: float = 1.0
    colsample: float = 1.0
    l2_leaf_reg: float = 0.0
    min_split_gain: float = 0.0
    n_bins: int = 64
    min_samples_leaf: int = 1
    seed: int = 42

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ConfigError("n_estimators must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ConfigError("learning_rate must lie in (0, 1]")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0")
        if self.num_leaves < 1:
            raise ConfigError("num_leaves must be >= 1")
        if not 0 < self.subsample <= 1 or not 0 < self.colsample <= 1:
            raise ConfigError("subsample and colsample must lie in (0, 1]")
        if self.l2_leaf_reg < 0 or self.min_split_gain < 0:
            raise ConfigError("regularisation terms must be non-negative")
        if self.n_bins < 2:
            raise ConfigError("n_bins must be >= 2")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")

    def override(self, **kw) -> "Hyperparams":
        unknown = set(kw) - set(asdict(self))
        if unknown:
            raise ConfigError(f"unknown hyperparameters: {', '.join(sorted(unknown))}")
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)


def symmetric_defaults() -> Hyperparams:
    """CatBoost-style settings used for the symmetric-tree model."""
    return Hyperparams(n_estimators=300, learning_rate=0.03, max_depth=6, l2_leaf_reg=3.0, seed=42)


def leafwise_defaults() -> Hyperparams:
    """LightGBM-style settings used for the leaf-wise model."""
    return Hyperparams(
        n_estimators=300, learning_rate=0.03, max_depth=4, num_leaves=31,
        subsample=0.7, colsample=0.8, l2_leaf_reg=0.0, seed=42,
    )


Tree = Union[LeafwiseTree, ObliviousTree]


@dataclass(frozen=True)
class BoostedModel:
    style: str
    base_score: float
    shrinkage: float
    bins: BinMapper
    trees: Tuple[Tree, ...]
    params: Hyperparams
    # Training-only diagnostics; not serialised.
    train_mse: Tuple[float, ...] = field(default=(), compare=False, repr=False)
    train_predictions: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    degenerate: bool = False

    @property
    def n_features(self) -> int:
        return self.bins.n_features

    def predict(self, X: np.ndarray) -> np.ndarray:
        return predict(self, X)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "style": self.style,
            "base_score": self.base_score,
            "shrinkage": self.shrinkage,
            "n_features": self.n_features,
            "bin_edges": self.bins.to_list(),
            "params": self.params.to_dict(),
            "degenerate": self.degenerate,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostedModel":
        if d.get("format") != MODEL_FORMAT:
            raise DataError(f"not a boosted-model document (format={d.get('format')!r})")
        if d.get("version") != MODEL_VERSION:
            raise DataError(
                f"unsupported model version {d.get('version')!r}; this build reads {MODEL_VERSION}"
            )
        return cls(
            style=d["style"],
            base_score=float(d["base_score"]),
            shrinkage=float(d["shrinkage"]),
            bins=BinMapper.from_list(d["bin_edges"]),
            trees=tuple(tree_from_dict(t) for t in d["trees"]),
            params=Hyperparams(**d["params"]),
            degenerate=bool(d.get("degenerate", False)),
        )


def _check_xy(X, y) -> Tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1:
        raise DataError("X must be 2-D and y 1-D")
    if X.shape[0] != y.shape[0]:
        raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if X.shape[0] < 2:
        raise DataError("at least 2 training rows are required")
    if not np.isfinite(y).all():
        raise DataError("targets contain non-finite values")
    return X, y


def _sample_size(fraction: float, n: int) -> int:
    return max(1, int(round(fraction * n)))


def _boost(X, y, params: Hyperparams, style: str) -> BoostedModel:
    X, y = _check_xy(X, y)
    n, m = X.shape
    bins, B = build_histograms(X, params.n_bins)
    n_bins = bins.n_bins
    degenerate = bool((n_bins == 1).all())
    if degenerate and (params.num_leaves > 1 or params.max_depth > 0):
        log.warning("all features are constant; model reduces to the base score")

    rng = np.random.default_rng(params.seed)
    base = float(np.mean(y))
    pred = np.full(n, base)
    history = [float(np.mean((pred - y) ** 2))]
    trees: List[Tree] = []
    n_rows = _sample_size(params.subsample, n)
    n_cols = _sample_size(params.colsample, m)
    all_rows = np.arange(n)
    all_cols = np.arange(m)

    for _ in range(params.n_estimators):
        g = pred - y
        rows = all_rows if n_rows == n else np.sort(rng.choice(n, n_rows, replace=False))
        cols = all_cols if n_cols == m else np.sort(rng.choice(m, n_cols, replace=False))
        if style == LEAFWISE:
            tree = grow_leafwise(
                B, g, rows, cols, n_bins, bins.edges,
                max_depth=params.max_depth, num_leaves=params.num_leaves,
                lam=params.l2_leaf_reg, gamma=params.min_split_gain,
                min_samples_leaf=params.min_samples_leaf,
            )
        else:
            tree = grow_symmetric(
                B, g, rows, cols, n_bins, bins.edges,
                max_depth=params.max_depth, lam=params.l2_leaf_reg,
                gamma=params.min_split_gain,
            )
        pred += params.learning_rate * tree.value[tree.apply_binned(B)]
        trees.append(tree)
        history.append(float(np.mean((pred - y) ** 2)))

    pred.setflags(write=False)
    return BoostedModel(
        style=style, base_score=base, shrinkage=params.learning_rate, bins=bins,
        trees=tuple(trees), params=params, train_mse=tuple(history),
        train_predictions=pred, degenerate=degenerate,
    )


def fit_leafwise(X, y, params: Optional[Hyperparams] = None) -> BoostedModel:
    """Boost best-first trees bounded by ``num_leaves`` and ``max_depth``."""
    return _boost(X, y, params or leafwise_defaults(), LEAFWISE)


def fit_symmetric(X, y, params: Optional[Hyperparams] = None) -> BoostedModel:
    """Boost oblivious trees of depth at most ``max_depth``."""
    return _boost(X, y, params or symmetric_defaults(), SYMMETRIC)


def predict(model, X) -> np.ndarray:
    """Predictions of a boosted or bagged model."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        got = X.shape[1] if X.ndim == 2 else f"{X.ndim}-D input"
        raise DataError(f"model expects {model.n_features} feature columns, got {got}")
    if not isinstance(model, BoostedModel):
        return model.predict(X)
    out = np.full(X.shape[0], model.base_score)
    for tree in model.trees:
        out += model.shrinkage * tree.value[tree.apply(X)]
    return out


def feature_importance(model) -> np.ndarray:
    """Total split gain per feature as percentages summing to 100."""
    total = np.zeros(model.n_features)
    for tree in model.trees:
        for f, gain in tree.splits():
            total[f] += gain
    s = total.sum()
    if not s > 0:
        raise DataError("model has no splits; feature importance is undefined")
    return total / s * 100.0
