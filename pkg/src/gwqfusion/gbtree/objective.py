"""Regularised squared-loss split gain and leaf weight.

With ``g = prediction - target`` and unit hessians, a leaf holding gradient
sum ``G`` and hessian sum ``H`` under L2 penalty ``lam`` has optimal weight
``-G / (H + lam)`` and contributes ``-G**2 / (2 (H + lam))`` to the objective.
"""

from __future__ import annotations

import numpy as np

from ..errors import FitError


def leaf_weight(G: float, H: float, lam: float) -> float:
    if H + lam <= 0:
        raise FitError("leaf weight undefined: H + lambda must be positive")
    return -G / (H + lam)


def split_gain(G_L: float, H_L: float, G_R: float, H_R: float, lam: float, gamma: float) -> float:
    return 0.5 * (
        G_L * G_L / (H_L + lam)
        + G_R * G_R / (H_R + lam)
        - (G_L + G_R) ** 2 / (H_L + H_R + lam)
    ) - gamma


def _score(G: np.ndarray, H: np.ndarray, lam: float) -> np.ndarray:
    denom = H + lam
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(denom > 0, G * G / np.where(denom > 0, denom, 1.0), 0.0)


def split_gain_array(G_L, H_L, G_R, H_R, lam: float, gamma: float) -> np.ndarray:
    """Vectorised :func:`split_gain`; empty unregularised sides score 0."""
    return 0.5 * (_score(G_L, H_L, lam) + _score(G_R, H_R, lam) - _score(G_L + G_R, H_L + H_R, lam)) - gamma


def leaf_weight_array(G: np.ndarray, H: np.ndarray, lam: float) -> np.ndarray:
    """Vectorised :func:`leaf_weight`; leaves with ``H + lam == 0`` get weight 0."""
    denom = H + lam
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(denom > 0, -G / np.where(denom > 0, denom, 1.0), 0.0)
