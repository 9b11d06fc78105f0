"""From-scratch gradient-boosted regression trees."""

from .bagging import BaggedModel, fit_bagged
from .boosting import (
    BoostedModel,
    Hyperparams,
    feature_importance,
    fit_leafwise,
    fit_symmetric,
    leafwise_defaults,
    predict,
    symmetric_defaults,
)
from .histogram import BinMapper, build_histograms
from .objective import leaf_weight, split_gain
from .tree import LEAFWISE, SYMMETRIC, LeafwiseTree, ObliviousTree, Split, find_best_split

__all__ = [
    "BaggedModel", "BinMapper", "BoostedModel", "Hyperparams", "LEAFWISE", "LeafwiseTree",
    "ObliviousTree", "SYMMETRIC", "Split", "build_histograms", "feature_importance",
    "find_best_split", "fit_bagged", "fit_leafwise", "fit_symmetric", "leaf_weight",
    "leafwise_defaults", "predict", "split_gain", "symmetric_defaults",
]
