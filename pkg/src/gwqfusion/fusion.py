"""Weighted blend of the symmetric-tree and leaf-wise models with a DE-fitted bias."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .de_opt import DeConfig, optimize
from .errors import DataError

WEIGHT_BOUNDS = ((0.4, 1.0), (0.4, 1.0), (-5.0, 5.0))


@dataclass(frozen=True)
class FusionWeights:
    w_cat: float
    w_lgb: float
    b: float

    def to_dict(self) -> dict:
        return {"w_cat": self.w_cat, "w_lgb": self.w_lgb, "b": self.b}

    @classmethod
    def from_dict(cls, d: dict) -> "FusionWeights":
        return cls(float(d["w_cat"]), float(d["w_lgb"]), float(d["b"]))


def default_fusion_de(seed: int = 42) -> DeConfig:
    return DeConfig(
        bounds=WEIGHT_BOUNDS, population_size=30, scaling_factor=0.8,
        crossover_rate=0.9, max_iterations=50, seed=seed,
    )


def fuse_predict(w: FusionWeights, y_cat, y_lgb) -> np.ndarray:
    y_cat = np.asarray(y_cat, dtype=np.float64)
    y_lgb = np.asarray(y_lgb, dtype=np.float64)
    if y_cat.shape != y_lgb.shape:
        raise DataError(f"prediction lengths differ: {y_cat.shape} vs {y_lgb.shape}")
    return w.w_cat * y_cat + w.w_lgb * y_lgb + w.b


def _rmse(y, p) -> float:
    return float(np.sqrt(np.mean((y - p) ** 2)))


def fit_fusion(y_true, y_cat, y_lgb, de: Optional[DeConfig] = None) -> FusionWeights:
    """Minimise the blend's RMSE over ``[0.4, 1] x [0.4, 1] x [-5, 5]``.

    ``de`` may override population, F, CR, iterations and seed; its bounds
    are always replaced by the weight box.
    """
    y_true = np.asarray(y_true, dtype=np.float64)
    y_cat = np.asarray(y_cat, dtype=np.float64)
    y_lgb = np.asarray(y_lgb, dtype=np.float64)
    if not (y_true.shape == y_cat.shape == y_lgb.shape) or y_true.ndim != 1:
        raise DataError("y_true, y_cat and y_lgb must be 1-D vectors of equal length")
    if y_true.size < 2:
        raise DataError("at least 2 predictions are needed to fit fusion weights")
    config = default_fusion_de() if de is None else de.with_(bounds=WEIGHT_BOUNDS)

    def objective(x: np.ndarray) -> float:
        return _rmse(y_true, x[0] * y_cat + x[1] * y_lgb + x[2])

    res = optimize(objective, config)
    w_cat, w_lgb, b = (float(v) for v in res.best_point)
    return FusionWeights(w_cat, w_lgb, b)
