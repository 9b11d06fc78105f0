"""File renderers for summaries, correlations, CV results and the importance chart."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .data_core import ColumnStats, StatsSummary
from .errors import DataError
from .evaluation import METRICS, MODELS, CvReport

STAT_ROWS = ("count", "mean", "std", "min", "25%", "50%", "75%", "max")


def _num(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def write_rows(path, rows: Iterable[Sequence[object]]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in rows:
            w.writerow([_num(v) if isinstance(v, (int, float, np.number)) else v for v in row])


def summary_rows(summary: StatsSummary) -> list:
    """One row per statistic with one column per indicator."""
    cols = list(summary.columns)
    rows = [["statistic", *cols]]
    for stat in STAT_ROWS:
        rows.append([stat, *(summary[c].as_dict()[stat] for c in cols)])
    return rows


def read_summary_csv(path) -> StatsSummary:
    """Inverse of writing :func:`summary_rows`; usable as generator targets."""
    try:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except FileNotFoundError:
        raise DataError(f"summary file not found: {path}") from None
    if not rows or rows[0][0] != "statistic":
        raise DataError(f"{path}: not a summary CSV (first header cell must be 'statistic')")
    cols = rows[0][1:]
    table = {r[0]: r[1:] for r in rows[1:]}
    missing = [s for s in STAT_ROWS if s not in table]
    if missing:
        raise DataError(f"{path}: summary lacks rows {', '.join(missing)}")
    out = {}
    try:
        for j, c in enumerate(cols):
            v = {s: float(table[s][j]) for s in STAT_ROWS}
            out[c] = ColumnStats(int(v["count"]), v["mean"], v["std"], v["min"],
                                 v["25%"], v["50%"], v["75%"], v["max"])
    except (ValueError, IndexError):
        raise DataError(f"{path}: malformed summary cell") from None
    return StatsSummary(out)


def correlation_rows(columns: Sequence[str], R: np.ndarray) -> list:
    rows = [["", *columns]]
    for c, r in zip(columns, R):
        rows.append([c, *(float(v) for v in r)])
    return rows


def cv_summary_rows(report: CvReport) -> list:
    rows = [["split", "model", *METRICS]]
    for split in ("train", "validation"):
        agg = report.aggregate(split)
        for m in MODELS:
            rows.append([split, m, *(agg[m][k] for k in METRICS)])
    return rows


def importance_svg(importances: Mapping[str, float], title: str = "Fused feature importance (%)") -> str:
    """Horizontal bar chart, largest first, as a standalone SVG document."""
    items = sorted(importances.items(), key=lambda kv: (-kv[1], kv[0]))
    if not items:
        raise DataError("no importances to plot")
    bar_h, gap, left, width, top = 22, 8, 90, 360, 40
    height = top + len(items) * (bar_h + gap) + 20
    peak = max(v for _, v in items) or 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{left + width + 80}" height="{height}" '
        f'font-family="sans-serif" font-size="12">',
        f'<text x="{left}" y="22" font-size="14" font-weight="bold">{escape(title)}</text>',
    ]
    for i, (name, val) in enumerate(items):
        y = top + i * (bar_h + gap)
        w = max(val, 0.0) / peak * width
        parts.append(f'<text x="{left - 8}" y="{y + bar_h * 0.7:.1f}" text-anchor="end">{escape(name)}</text>')
        parts.append(f'<rect x="{left}" y="{y}" width="{w:.2f}" height="{bar_h}" fill="#3b7dd8"/>')
        parts.append(f'<text x="{left + w + 6:.2f}" y="{y + bar_h * 0.7:.1f}">{val:.2f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
