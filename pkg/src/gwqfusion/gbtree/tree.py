"""Regression trees and the two growth strategies.

Both growers work on binned features and unit-hessian squared-loss
gradients. ``LeafwiseTree`` is grown best-first under a leaf budget;
``ObliviousTree`` uses one (feature, threshold) pair per depth level.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .objective import leaf_weight_array, split_gain_array

LEAFWISE = "leafwise"
SYMMETRIC = "symmetric"

# Gains below this fraction of the node's sum of squared gradients are
# rounding noise (e.g. any split of a constant-residual node).
GAIN_RTOL = 1e-12


@dataclass(frozen=True)
class Split:
    feature: int
    bin: int
    gain: float


def _histograms(binned: np.ndarray, g: np.ndarray, rows: np.ndarray,
                features: np.ndarray, width: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gradient sums and row counts per (feature, bin) over ``rows``."""
    k = len(features)
    sub = binned[np.ix_(rows, features)] + np.arange(k, dtype=np.intp) * width
    flat = sub.ravel()
    gw = np.broadcast_to(g[rows][:, None], sub.shape).ravel()
    G = np.bincount(flat, weights=gw, minlength=k * width).reshape(k, width)
    C = np.bincount(flat, minlength=k * width).reshape(k, width).astype(np.float64)
    return G, C


def find_best_split(
    binned: np.ndarray,
    g: np.ndarray,
    rows: np.ndarray,
    features: Sequence[int],
    n_bins: np.ndarray,
    lam: float,
    gamma: float,
    min_samples_leaf: int = 1,
) -> Optional[Split]:
    """Highest-gain ``bin(x_f) <= b`` split of ``rows``, or ``None``.

    Ties go to the lowest feature index, then the lowest threshold. A
    split must leave ``min_samples_leaf`` rows on each side and beat the
    rounding floor to be returned.
    """
    features = np.asarray(sorted(features), dtype=np.intp)
    if len(rows) < 2 * min_samples_leaf or len(features) == 0:
        return None
    width = int(n_bins.max())
    G, C = _histograms(binned, g, rows, features, width)
    GL = np.cumsum(G, axis=1)[:, :-1]
    CL = np.cumsum(C, axis=1)[:, :-1]
    GT = G.sum(axis=1, keepdims=True)
    CT = C.sum(axis=1, keepdims=True)
    gain = split_gain_array(GL, CL, GT - GL, CT - CL, lam, gamma)
    valid = (CL >= min_samples_leaf) & (CT - CL >= min_samples_leaf)
    valid &= np.arange(width - 1)[None, :] < (n_bins[features] - 1)[:, None]
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf)
    pos = int(np.argmax(gain))
    fi, b = divmod(pos, width - 1)
    best = float(gain[fi, b])
    floor = GAIN_RTOL * float(np.dot(g[rows], g[rows]))
    if not best > floor:
        return None
    return Split(int(features[fi]), int(b), best)


class LeafwiseTree:
    """Binary tree stored as flat node arrays; leaves have ``feature == -1``."""

    style = LEAFWISE

    def __init__(self, feature, threshold, bin, left, right, value, gain):
        self.feature = np.asarray(feature, dtype=np.intp)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.bin = np.asarray(bin, dtype=np.intp)
        self.left = np.asarray(left, dtype=np.intp)
        self.right = np.asarray(right, dtype=np.intp)
        self.value = np.asarray(value, dtype=np.float64)
        self.gain = np.asarray(gain, dtype=np.float64)
        for a in (self.feature, self.threshold, self.bin, self.left, self.right, self.value, self.gain):
            a.setflags(write=False)
        self.depth = self._depth()

    def _depth(self) -> int:
        depth = np.zeros(len(self.feature), dtype=np.intp)
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max()) if len(depth) else 0

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def _route(self, X: np.ndarray, cut: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        node = np.zeros(n, dtype=np.intp)
        rows = np.arange(n)
        for _ in range(self.depth):
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                break
            go_left = X[rows, np.where(inner, f, 0)] <= cut[node]
            node = np.where(inner, np.where(go_left, self.left[node], self.right[node]), node)
        return node

    def apply(self, X: np.ndarray) -> np.ndarray:
        return self._route(X, self.threshold)

    def apply_binned(self, B: np.ndarray) -> np.ndarray:
        return self._route(B, self.bin)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def splits(self) -> List[Tuple[int, float]]:
        inner = self.feature >= 0
        return list(zip(self.feature[inner].tolist(), self.gain[inner].tolist()))

    def to_dict(self) -> dict:
        return {
            "style": LEAFWISE,
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "bin": self.bin.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "gain": self.gain.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LeafwiseTree":
        return cls(d["feature"], d["threshold"], d["bin"], d["left"], d["right"], d["value"], d["gain"])


class ObliviousTree:
    """Perfect binary tree with one shared (feature, threshold) per level.

    Leaf index bits are read most-significant first: level ``d`` contributes
    ``(x[feature[d]] > threshold[d]) << (depth - 1 - d)``.
    """

    style = SYMMETRIC

    def __init__(self, feature, threshold, bin, value, gain):
        self.feature = np.asarray(feature, dtype=np.intp)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.bin = np.asarray(bin, dtype=np.intp)
        self.value = np.asarray(value, dtype=np.float64)
        self.gain = np.asarray(gain, dtype=np.float64)
        for a in (self.feature, self.threshold, self.bin, self.value, self.gain):
            a.setflags(write=False)
        if len(self.value) != 2 ** len(self.feature):
            raise ValueError("oblivious tree needs 2**depth leaf values")

    @property
    def depth(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return len(self.value)

    def _route(self, X: np.ndarray, cut: np.ndarray) -> np.ndarray:
        idx = np.zeros(X.shape[0], dtype=np.intp)
        for d in range(self.depth):
            idx = idx * 2 + (X[:, self.feature[d]] > cut[d])
        return idx

    def apply(self, X: np.ndarray) -> np.ndarray:
        return self._route(X, self.threshold)

    def apply_binned(self, B: np.ndarray) -> np.ndarray:
        return self._route(B, self.bin)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def splits(self) -> List[Tuple[int, float]]:
        return list(zip(self.feature.tolist(), self.gain.tolist()))

    def to_dict(self) -> dict:
        return {
            "style": SYMMETRIC,
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "bin": self.bin.tolist(),
            "value": self.value.tolist(),
            "gain": self.gain.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObliviousTree":
        return cls(d["feature"], d["threshold"], d["bin"], d["value"], d["gain"])


def tree_from_dict(d: dict):
    if d.get("style") == LEAFWISE:
        return LeafwiseTree.from_dict(d)
    if d.get("style") == SYMMETRIC:
        return ObliviousTree.from_dict(d)
    raise ValueError(f"unknown tree style {d.get('style')!r}")


def grow_leafwise(
    binned: np.ndarray,
    g: np.ndarray,
    rows: np.ndarray,
    features: Sequence[int],
    n_bins: np.ndarray,
    edges: Sequence[np.ndarray],
    *,
    max_depth: int,
    num_leaves: int,
    lam: float,
    gamma: float,
    min_samples_leaf: int,
) -> LeafwiseTree:
    """Best-first growth: always split the open leaf with the largest gain.

    ``rows`` may contain repeats (bootstrap samples); each repeat counts as a
    separate observation.
    """
    feature: List[int] = [-1]
    threshold: List[float] = [0.0]
    bins: List[int] = [-1]
    left: List[int] = [-1]
    right: List[int] = [-1]
    gains: List[float] = [0.0]
    node_rows = {0: rows}
    depth = {0: 0}
    heap: List[tuple] = []
    counter = 0

    def consider(node: int) -> None:
        nonlocal counter
        if depth[node] >= max_depth:
            return
        s = find_best_split(binned, g, node_rows[node], features, n_bins, lam, gamma, min_samples_leaf)
        if s is not None:
            # Heap order: larger gain first, then earlier-created node.
            heapq.heappush(heap, (-s.gain, counter, node, s))
            counter += 1

    consider(0)
    n_leaves = 1
    while heap and n_leaves < num_leaves:
        _, _, node, s = heapq.heappop(heap)
        r = node_rows.pop(node)
        go_left = binned[r, s.feature] <= s.bin
        lo, hi = len(feature), len(feature) + 1
        for _ in range(2):
            feature.append(-1)
            threshold.append(0.0)
            bins.append(-1)
            left.append(-1)
            right.append(-1)
            gains.append(0.0)
        feature[node], bins[node], gains[node] = s.feature, s.bin, s.gain
        threshold[node] = float(edges[s.feature][s.bin])
        left[node], right[node] = lo, hi
        node_rows[lo], node_rows[hi] = r[go_left], r[~go_left]
        depth[lo] = depth[hi] = depth[node] + 1
        n_leaves += 1
        consider(lo)
        consider(hi)

    value = np.zeros(len(feature), dtype=np.float64)
    for node, r in node_rows.items():
        value[node] = leaf_weight_array(np.sum(g[r]), float(len(r)), lam)
    return LeafwiseTree(feature, threshold, bins, left, right, value, gains)


def grow_symmetric(
    binned: np.ndarray,
    g: np.ndarray,
    rows: np.ndarray,
    features: Sequence[int],
    n_bins: np.ndarray,
    edges: Sequence[np.ndarray],
    *,
    max_depth: int,
    lam: float,
    gamma: float,
) -> ObliviousTree:
    """Level-wise growth choosing the split that maximises the summed gain over all leaves."""
    features = np.asarray(sorted(features), dtype=np.intp)
    k = len(features)
    width = int(n_bins.max())
    gr = g[rows]
    leaf = np.zeros(len(rows), dtype=np.intp)
    floor = GAIN_RTOL * float(np.dot(gr, gr))
    sub = binned[np.ix_(rows, features)]
    valid = np.arange(width - 1)[None, :] < (n_bins[features] - 1)[:, None]
    chosen_f: List[int] = []
    chosen_b: List[int] = []
    chosen_gain: List[float] = []

    for d in range(max_depth):
        if k == 0:
            break
        L = 2 ** d
        flat = (leaf[:, None] * (k * width) + np.arange(k) * width + sub).ravel()
        gw = np.broadcast_to(gr[:, None], sub.shape).ravel()
        G = np.bincount(flat, weights=gw, minlength=L * k * width).reshape(L, k, width)
        C = np.bincount(flat, minlength=L * k * width).reshape(L, k, width).astype(np.float64)
        GL = np.cumsum(G, axis=2)[:, :, :-1]
        CL = np.cumsum(C, axis=2)[:, :, :-1]
        GT = G.sum(axis=2, keepdims=True)
        CT = C.sum(axis=2, keepdims=True)
        total = split_gain_array(GL, CL, GT - GL, CT - CL, lam, gamma).sum(axis=0)
        total = np.where(valid, total, -np.inf)
        pos = int(np.argmax(total))
        fi, b = divmod(pos, width - 1)
        best = float(total[fi, b])
        if not best > floor:
            break
        chosen_f.append(int(features[fi]))
        chosen_b.append(int(b))
        chosen_gain.append(best)
        leaf = leaf * 2 + (sub[:, fi] > b)

    depth = len(chosen_f)
    Gl = np.bincount(leaf, weights=gr, minlength=2 ** depth)
    Cl = np.bincount(leaf, minlength=2 ** depth).astype(np.float64)
    value = leaf_weight_array(Gl, Cl, lam)
    thr = [float(edges[f][b]) for f, b in zip(chosen_f, chosen_b)]
    return ObliviousTree(chosen_f, thr, chosen_b, value, chosen_gain)
