"""Regression metrics, k-fold cross-validation of the fused model, importances."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .data_core import CORE_INDICATORS, SampleTable
from .de_opt import DeConfig
from .errors import DataError
from .fusion import FusionWeights, default_fusion_de, fit_fusion, fuse_predict
from .gbtree import (
    BoostedModel,
    Hyperparams,
    feature_importance,
    fit_leafwise,
    fit_symmetric,
    leafwise_defaults,
    symmetric_defaults,
)
from .gwqi import WhoLimits, compute_targets
from .preprocess import Scaler, fit_imputer, impute

log = logging.getLogger(__name__)

MODELS = ("cat", "lgb", "fusion")
METRICS = ("rmse", "mse", "mae", "r2")
REPORT_VERSION = 1


@dataclass(frozen=True)
class MetricSet:
    rmse: float
    mse: float
    mae: float
    r2: float  # NaN when the targets are constant

    def to_dict(self) -> Dict[str, Optional[float]]:
        return {m: _json_float(getattr(self, m)) for m in METRICS}


def _json_float(v: float) -> Optional[float]:
    return None if math.isnan(v) else v


def metrics(y_true, y_pred) -> MetricSet:
    y = np.asarray(y_true, dtype=np.float64)
    p = np.asarray(y_pred, dtype=np.float64)
    if y.shape != p.shape or y.ndim != 1:
        raise DataError(f"y_true and y_pred must be equal-length vectors ({y.shape} vs {p.shape})")
    if y.size == 0:
        raise DataError("metrics need at least one observation")
    resid = y - p
    sse = float(np.sum(resid * resid))
    mse = sse / y.size
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst > 0:
        r2 = 1.0 - sse / sst
    else:
        log.warning("R^2 undefined for constant targets")
        r2 = math.nan
    return MetricSet(math.sqrt(mse), mse, float(np.mean(np.abs(resid))), r2)


def kfold_split(n: int, k: int = 10, seed: int = 42, shuffle: bool = True
                ) -> List[Tuple[np.ndarray, np.ndarray]]:
    """(train, validation) position arrays; the first ``n % k`` folds get one extra row."""
    if k < 2 or k > n:
        raise DataError(f"need 2 <= k <= n, got k={k}, n={n}")
    order = np.random.default_rng(seed).permutation(n) if shuffle else np.arange(n)
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    folds = []
    start = 0
    for size in sizes:
        val = np.sort(order[start:start + size])
        mask = np.ones(n, dtype=bool)
        mask[val] = False
        folds.append((np.flatnonzero(mask), val))
        start += size
    return folds


def combine_importances(i_cat, i_lgb, w: FusionWeights) -> np.ndarray:
    """``(w_cat * i_cat + w_lgb * i_lgb) / (w_cat + w_lgb)``, elementwise."""
    denom = w.w_cat + w.w_lgb
    if denom == 0:
        raise DataError("fusion weights w_cat + w_lgb must be non-zero")
    return (w.w_cat * np.asarray(i_cat, dtype=np.float64)
            + w.w_lgb * np.asarray(i_lgb, dtype=np.float64)) / denom


def fused_importance(model_cat: BoostedModel, model_lgb: BoostedModel, w: FusionWeights) -> np.ndarray:
    """Weight-averaged gain importances of the two models, in percent."""
    if model_cat.n_features != model_lgb.n_features:
        raise DataError("models were trained on different feature counts")
    return combine_importances(feature_importance(model_cat), feature_importance(model_lgb), w)


@dataclass
class FoldResult:
    index: int
    train_ids: List[int]
    validation_ids: List[int]
    train: Dict[str, MetricSet]
    validation: Dict[str, MetricSet]
    weights: FusionWeights
    importances: np.ndarray


@dataclass
class CvReport:
    features: Tuple[str, ...]
    folds: List[FoldResult]
    config: dict = field(default_factory=dict)

    def aggregate(self, split: str) -> Dict[str, Dict[str, float]]:
        """Per-model mean of each metric over folds (each metric averaged separately)."""
        out = {}
        for m in MODELS:
            out[m] = {
                k: float(np.mean([getattr(getattr(f, split)[m], k) for f in self.folds]))
                for k in METRICS
            }
        return out

    @property
    def importances(self) -> Dict[str, float]:
        mean = np.mean([f.importances for f in self.folds], axis=0)
        return dict(zip(self.features, mean.tolist()))

    def to_dict(self) -> dict:
        aggregates = {s: self.aggregate(s) for s in ("train", "validation")}
        for s in aggregates.values():
            for mset in s.values():
                for k, v in mset.items():
                    mset[k] = _json_float(v)
        return {
            "version": REPORT_VERSION,
            "features": list(self.features),
            "models": {
                "cat": "symmetric (oblivious) trees",
                "lgb": "leaf-wise histogram trees",
                "fusion": "w_cat * cat + w_lgb * lgb + b",
            },
            "config": self.config,
            "folds": [
                {
                    "fold": f.index,
                    "n_train": len(f.train_ids),
                    "n_validation": len(f.validation_ids),
                    "validation_ids": f.validation_ids,
                    "weights": f.weights.to_dict(),
                    "train": {m: f.train[m].to_dict() for m in MODELS},
                    "validation": {m: f.validation[m].to_dict() for m in MODELS},
                    "importances": dict(zip(self.features, f.importances.tolist())),
                }
                for f in self.folds
            ],
            "aggregates": aggregates,
            "importances": self.importances,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def csv_rows(self) -> List[List[object]]:
        rows: List[List[object]] = [["fold", "split", "model", *METRICS]]
        for f in self.folds:
            for split in ("train", "validation"):
                for m in MODELS:
                    ms = getattr(f, split)[m]
                    rows.append([f.index, split, m, *(getattr(ms, k) for k in METRICS)])
        return rows


def prepare_fold(
    train: SampleTable, val: SampleTable, features: Sequence[str], limits: WhoLimits,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, Scaler]:
    """Impute with training means, compute GWQI targets on raw values, then scale."""
    cols = list(dict.fromkeys([*features, *limits]))
    imputer = fit_imputer(train, cols)
    train_i = impute(train, imputer)
    val_i = impute(val, imputer)
    y_train = compute_targets(train_i, limits)
    y_val = compute_targets(val_i, limits)
    X_train = train_i.matrix(features)
    X_val = val_i.matrix(features)
    scaler = Scaler.fit_matrix(X_train, features)
    return scaler.apply(X_train), y_train, scaler.apply(X_val), y_val, scaler


def cross_validate(
    table: SampleTable,
    limits: Optional[WhoLimits] = None,
    params_cat: Optional[Hyperparams] = None,
    params_lgb: Optional[Hyperparams] = None,
    de: Optional[DeConfig] = None,
    k: int = 10,
    seed: int = 42,
    features: Sequence[str] = CORE_INDICATORS,
) -> CvReport:
    """K-fold evaluation of both boosted models and their DE-weighted blend.

    Rows are put in row-id order before folding, so the report depends only
    on the set of (row id, values) pairs, not on the input order. Fold ``i``
    fits the blend with DE seed ``de.seed + i``.
    """
    limits = WhoLimits.default() if limits is None else limits
    params_cat = params_cat or symmetric_defaults()
    params_lgb = params_lgb or leafwise_defaults()
    de = de or default_fusion_de(seed)
    features = tuple(features)
    if table.n_rows < 2 * k:
        raise DataError(f"cross-validation with k={k} needs at least {2 * k} rows, got {table.n_rows}")

    table = table.sorted_by_id()
    ids = table.row_ids
    folds = []
    for i, (tr, va) in enumerate(kfold_split(table.n_rows, k, seed)):
        X_tr, y_tr, X_va, y_va, _ = prepare_fold(table.take(tr), table.take(va), features, limits)
        if np.ptp(y_tr) == 0:
            raise DataError(f"fold {i}: training targets are constant")
        cat = fit_symmetric(X_tr, y_tr, params_cat)
        lgb = fit_leafwise(X_tr, y_tr, params_lgb)
        p_tr = {"cat": cat.train_predictions, "lgb": lgb.train_predictions}
        p_va = {"cat": cat.predict(X_va), "lgb": lgb.predict(X_va)}
        w = fit_fusion(y_tr, p_tr["cat"], p_tr["lgb"], de.with_(seed=de.seed + i))
        p_tr["fusion"] = fuse_predict(w, p_tr["cat"], p_tr["lgb"])
        p_va["fusion"] = fuse_predict(w, p_va["cat"], p_va["lgb"])
        folds.append(FoldResult(
            index=i,
            train_ids=ids[tr].tolist(),
            validation_ids=ids[va].tolist(),
            train={m: metrics(y_tr, p_tr[m]) for m in MODELS},
            validation={m: metrics(y_va, p_va[m]) for m in MODELS},
            weights=w,
            importances=fused_importance(cat, lgb, w),
        ))
        log.info("fold %d: validation RMSE cat=%.4f lgb=%.4f fusion=%.4f", i,
                 folds[-1].validation["cat"].rmse, folds[-1].validation["lgb"].rmse,
                 folds[-1].validation["fusion"].rmse)

    config = {
        "k": k, "seed": seed, "features": list(features), "limits": limits.to_dict(),
        "params_cat": params_cat.to_dict(), "params_lgb": params_lgb.to_dict(),
        "de": {
            "population_size": de.pop_size, "scaling_factor": de.scaling_factor,
            "crossover_rate": de.crossover_rate, "max_iterations": de.max_iterations,
            "seed": de.seed,
        },
    }
    return CvReport(features, folds, config)
