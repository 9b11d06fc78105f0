"""Reference implementations used by the tests.

Written directly from the defining formulas in plain Python (or with
off-the-shelf solvers) and deliberately share no code with the package.
"""

import itertools
import math

import numpy as np
from scipy.optimize import lsq_linear

WHO = {
    "pH": (6.5, 8.5), "EC": (1.0, 1500.0), "TH": (1.0, 300.0), "Ca": (1.0, 75.0),
    "Mg": (1.0, 50.0), "Na": (1.0, 200.0), "K": (1.0, 12.0), "F": (1.0, 1.5), "Cl": (1.0, 250.0),
}
BOX = ((0.4, 1.0), (0.4, 1.0), (-5.0, 5.0))


def brute_sub_index(value, lo, hi):
    if value < lo:
        si = value / lo * 100
    elif value > hi:
        si = hi / value * 100
    else:
        si = 100
    return min(100.0, max(0.0, si))


def brute_gwqi(row, limits=WHO):
    total = 0.0
    for name, (lo, hi) in limits.items():
        s = brute_sub_index(row[name], lo, hi)
        total += s * s
    return math.sqrt(total)


def brute_band(score):
    table = [(0, 50, "Excellent"), (50, 100, "Good"), (100, 200, "Poor"),
             (200, 300, "Very Poor"), (300, 400, "Unsuitable")]
    for lo, hi, label in table:
        if lo <= score < hi:
            return label
    return "Unsuitable"


def exhaustive_best_gain(X, g, lam=0.0, gamma=0.0, min_leaf=1):
    """Max over every feature and every cut between consecutive distinct values."""
    n, m = len(X), len(X[0])
    best = -math.inf
    G = sum(g)
    for f in range(m):
        values = sorted(set(row[f] for row in X))
        for a, b in zip(values, values[1:]):
            cut = (a + b) / 2
            left = [i for i in range(n) if X[i][f] <= cut]
            if len(left) < min_leaf or n - len(left) < min_leaf:
                continue
            GL = sum(g[i] for i in left)
            HL = float(len(left))
            GR, HR = G - GL, n - HL
            gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - G * G / (n + lam)) - gamma
            best = max(best, gain)
    return best


def _rmse(y, p):
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(y, p)) / len(y))


def fusion_lsq_optimum(y, y_cat, y_lgb, box=BOX):
    """Box-constrained least squares over (w_cat, w_lgb, b); returns (point, rmse)."""
    A = np.column_stack([y_cat, y_lgb, np.ones(len(y))])
    lo = [b[0] for b in box]
    hi = [b[1] for b in box]
    res = lsq_linear(A, np.asarray(y, dtype=float), bounds=(lo, hi), method="bvls", tol=1e-14)
    p = A @ res.x
    return res.x, float(np.sqrt(np.mean((np.asarray(y) - p) ** 2)))


def fusion_grid_best(y, y_cat, y_lgb, shape=(13, 13, 21), box=BOX):
    axes = [np.linspace(lo, hi, k) for (lo, hi), k in zip(box, shape)]
    y = np.asarray(y, dtype=float)
    best = math.inf
    for wc, wl in itertools.product(axes[0], axes[1]):
        base = wc * np.asarray(y_cat) + wl * np.asarray(y_lgb)
        for b in axes[2]:
            best = min(best, float(np.sqrt(np.mean((y - base - b) ** 2))))
    return best


def hand_metrics(y, p):
    n = len(y)
    sq = [(a - b) ** 2 for a, b in zip(y, p)]
    mse = sum(sq) / n
    mae = sum(abs(a - b) for a, b in zip(y, p)) / n
    mean = sum(y) / n
    sst = sum((a - mean) ** 2 for a in y)
    r2 = 1 - sum(sq) / sst if sst > 0 else float("nan")
    return {"rmse": math.sqrt(mse), "mse": mse, "mae": mae, "r2": r2}


def box_quadratic_optimum(Q, c, box):
    """min 0.5 x'Qx + c'x on a box, Q positive definite, by projected gradient with exact line search."""
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    x = np.clip(np.zeros(len(c)), lo, hi)
    step = 1.0 / np.linalg.eigvalsh(Q).max()
    for _ in range(20000):
        x_new = np.clip(x - step * (Q @ x + c), lo, hi)
        if np.max(np.abs(x_new - x)) < 1e-15:
            break
        x = x_new
    return x, float(0.5 * x @ Q @ x + c @ x)
