"""Deployable predictor: imputer, scaler, both boosted models and fusion weights in one JSON file."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .data_core import CORE_INDICATORS, SampleTable
from .de_opt import DeConfig
from .errors import ColumnError, DataError
from .fusion import FusionWeights, default_fusion_de, fit_fusion, fuse_predict
from .gbtree import BoostedModel, Hyperparams, fit_leafwise, fit_symmetric, leafwise_defaults, symmetric_defaults
from .gwqi import Limit, WhoLimits, compute_targets
from .preprocess import Imputer, Scaler, fit_imputer, impute

BUNDLE_FORMAT = "gwqfusion.bundle"
BUNDLE_VERSION = 1


@dataclass(frozen=True)
class Predictions:
    cat: np.ndarray
    lgb: np.ndarray
    fusion: np.ndarray


@dataclass(frozen=True)
class ModelBundle:
    features: Tuple[str, ...]
    limits: WhoLimits
    fill_means: Dict[str, float]
    scaler: Scaler
    cat: BoostedModel
    lgb: BoostedModel
    weights: FusionWeights

    def predict_matrix(self, X_raw: np.ndarray) -> Predictions:
        """Predictions from unscaled features; ``NaN`` cells take the stored training means."""
        X = np.asarray(X_raw, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.features):
            raise DataError(f"expected {len(self.features)} feature columns: {', '.join(self.features)}")
        X = Imputer(self.fill_means, {}).apply_matrix(X, self.features)
        Z = self.scaler.apply(X)
        y_cat = self.cat.predict(Z)
        y_lgb = self.lgb.predict(Z)
        return Predictions(y_cat, y_lgb, fuse_predict(self.weights, y_cat, y_lgb))

    def predict_table(self, table: SampleTable) -> Predictions:
        for c in self.features:
            if c not in table:
                raise ColumnError(c, table.columns)
        return self.predict_matrix(table.matrix(self.features))

    def to_dict(self) -> dict:
        return {
            "format": BUNDLE_FORMAT,
            "version": BUNDLE_VERSION,
            "features": list(self.features),
            "limits": self.limits.to_dict(),
            "fill_means": dict(self.fill_means),
            "scaler": self.scaler.to_dict(),
            "fusion": self.weights.to_dict(),
            "models": {"cat": self.cat.to_dict(), "lgb": self.lgb.to_dict()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelBundle":
        if not isinstance(d, dict) or d.get("format") != BUNDLE_FORMAT:
            raise DataError("not a model bundle document")
        if d.get("version") != BUNDLE_VERSION:
            raise DataError(
                f"model bundle version {d.get('version')!r} is not supported (expected {BUNDLE_VERSION})"
            )
        try:
            features = tuple(d["features"])
            scaler = Scaler.from_dict(d["scaler"])
            cat = BoostedModel.from_dict(d["models"]["cat"])
            lgb = BoostedModel.from_dict(d["models"]["lgb"])
            bundle = cls(
                features=features,
                limits=WhoLimits({k: Limit(float(v[0]), float(v[1])) for k, v in d["limits"].items()}),
                fill_means={k: float(v) for k, v in d["fill_means"].items()},
                scaler=scaler,
                cat=cat,
                lgb=lgb,
                weights=FusionWeights.from_dict(d["fusion"]),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise DataError(f"malformed model bundle: missing or bad field {exc}") from None
        if scaler.columns != features or cat.n_features != len(features) or lgb.n_features != len(features):
            raise DataError("model bundle is inconsistent: feature counts disagree")
        return bundle

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ModelBundle":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise DataError(f"model bundle not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"model bundle {path} is not valid JSON: {exc}") from None
        return cls.from_dict(doc)


def train_bundle(
    table: SampleTable,
    limits: Optional[WhoLimits] = None,
    params_cat: Optional[Hyperparams] = None,
    params_lgb: Optional[Hyperparams] = None,
    de: Optional[DeConfig] = None,
    features: Sequence[str] = CORE_INDICATORS,
) -> Tuple[ModelBundle, Predictions]:
    """Fit the whole pipeline on ``table``; also returns the in-sample predictions."""
    limits = WhoLimits.default() if limits is None else limits
    features = tuple(features)
    de = de or default_fusion_de()
    if table.n_rows < 2:
        raise DataError("training needs at least 2 rows")
    cols = list(dict.fromkeys([*features, *limits]))
    imputer = fit_imputer(table, cols)
    filled = impute(table, imputer)
    y = compute_targets(filled, limits)
    if np.ptp(y) == 0:
        raise DataError("GWQI targets are constant; nothing to learn")
    X = filled.matrix(features)
    scaler = Scaler.fit_matrix(X, features)
    Z = scaler.apply(X)
    cat = fit_symmetric(Z, y, params_cat or symmetric_defaults())
    lgb = fit_leafwise(Z, y, params_lgb or leafwise_defaults())
    w = fit_fusion(y, cat.train_predictions, lgb.train_predictions, de)
    bundle = ModelBundle(
        features=features,
        limits=limits,
        fill_means={c: imputer.means[c] for c in features},
        scaler=scaler,
        cat=cat,
        lgb=lgb,
        weights=w,
    )
    preds = Predictions(
        cat.train_predictions, lgb.train_predictions,
        fuse_predict(w, cat.train_predictions, lgb.train_predictions),
    )
    return bundle, preds
