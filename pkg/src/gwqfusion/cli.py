"""Command-line driver: ``gwqfusion <command> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 internal error. Outputs are staged next to their final names and only
moved into place once every file of the command has been written and
validated, so a failed run leaves no partial results behind.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .bundle import ModelBundle, train_bundle
from .data_core import CORE_INDICATORS, SURVEY_SUMMARY, SampleTable, load_csv, summarize, synth_generate, write_csv
from .de_opt import DeConfig
from .errors import ConfigError, DataError, FitError
from .evaluation import cross_validate
from .fusion import default_fusion_de
from .gbtree import Hyperparams, leafwise_defaults, symmetric_defaults
from .gwqi import WhoLimits, classify, compute_targets
from .preprocess import correlation_matrix, dedup, impute, iqr_filter
from .reports import (
    correlation_rows,
    cv_summary_rows,
    importance_svg,
    read_summary_csv,
    summary_rows,
    write_rows,
)

log = logging.getLogger("gwqfusion")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
FORMATS = ("json", "csv", "svg")
DEFAULT_FORMATS = {"summarize": ("csv",), "evaluate": ("json", "csv")}
DE_KEYS = ("population_size", "scaling_factor", "crossover_rate", "max_iterations")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: Optional[Path] = None
    schema: Dict[str, str] = field(default_factory=dict)
    limits: Optional[Path] = None
    params_cat: Dict[str, object] = field(default_factory=dict)
    params_lgb: Dict[str, object] = field(default_factory=dict)
    de: Dict[str, object] = field(default_factory=dict)
    folds: int = 10
    seed: int = 42
    out_dir: Path = Path(".")
    formats: tuple = ()
    model: Optional[Path] = None
    n: int = 2000
    targets: Optional[Path] = None

    # -- derived settings -------------------------------------------------

    def who_limits(self) -> WhoLimits:
        return WhoLimits.default() if self.limits is None else WhoLimits.from_json(self.limits)

    def hyperparams(self) -> tuple[Hyperparams, Hyperparams]:
        out = []
        for base, over in ((symmetric_defaults(), self.params_cat), (leafwise_defaults(), self.params_lgb)):
            kw = {"seed": self.seed, **over}
            try:
                out.append(base.override(**kw))
            except TypeError as exc:
                raise ConfigError(f"bad hyperparameter value: {exc}") from None
        return out[0], out[1]

    def de_config(self) -> DeConfig:
        unknown = set(self.de) - set(DE_KEYS)
        if unknown:
            raise ConfigError(f"unknown DE settings: {', '.join(sorted(unknown))}")
        try:
            return default_fusion_de(self.seed).with_(**self.de)
        except TypeError as exc:
            raise ConfigError(f"bad DE setting: {exc}") from None

    def require_input(self) -> Path:
        if self.input is None:
            raise ConfigError(f"{self.command} needs --input")
        return self.input


_CONFIG_KEYS = {
    "input", "schema", "limits", "params_cat", "params_lgb", "de", "folds", "seed",
    "out_dir", "format", "model", "n", "targets",
}


def _parse_formats(value) -> tuple:
    items = value.split(",") if isinstance(value, str) else list(value)
    items = [str(v).strip().lower() for v in items if str(v).strip()]
    bad = [v for v in items if v not in FORMATS]
    if bad:
        raise ConfigError(f"unknown report format(s): {', '.join(bad)}; choose from {', '.join(FORMATS)}")
    return tuple(dict.fromkeys(items))


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the JSON config file, then command-line flags."""
    doc: dict = {}
    if args.config is not None:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    cfg = RunConfig(command=args.command)
    flags = {
        "input": args.input, "limits": args.limits, "folds": args.folds, "seed": args.seed,
        "out_dir": args.out_dir, "format": args.format, "model": args.model, "n": args.n,
        "targets": args.targets, "schema": args.schema,
    }
    merged = {**doc, **{k: v for k, v in flags.items() if v is not None}}
    for key in ("input", "limits", "out_dir", "model", "targets"):
        if merged.get(key) is not None:
            setattr(cfg, key, Path(merged[key]))
    for key in ("folds", "seed", "n"):
        if key in merged:
            v = merged[key]
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{key} must be an integer")
            setattr(cfg, key, v)
    for key in ("params_cat", "params_lgb", "de"):
        if key in merged:
            if not isinstance(merged[key], dict):
                raise ConfigError(f"{key} must be a JSON object")
            setattr(cfg, key, dict(merged[key]))
    schema = merged.get("schema")
    if isinstance(schema, str):
        schema = _read_schema(schema)
    if schema is not None:
        if not isinstance(schema, dict) or not all(isinstance(v, str) for v in schema.values()):
            raise ConfigError("schema must map column names to header strings")
        cfg.schema = dict(schema)
    fmt = merged.get("format")
    cfg.formats = _parse_formats(fmt) if fmt is not None else DEFAULT_FORMATS.get(cfg.command, ())
    if cfg.folds < 2:
        raise ConfigError("--folds must be >= 2")
    if cfg.n < 1:
        raise ConfigError("--n must be >= 1")
    return cfg


def _read_schema(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"schema file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"schema file {path} is not valid JSON: {exc}") from None
    return doc


# -- staged outputs -----------------------------------------------------------


class Outputs:
    """Files of one command, staged under temporary names until :meth:`commit`."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self._staged: List[tuple[Path, Path]] = []

    def path(self, name: str) -> Path:
        final = Path(name) if Path(name).is_absolute() or Path(name).parent != Path(".") else self.out_dir / name
        tmp = final.with_name(f".{final.name}.partial")
        self._staged.append((final, tmp))
        return tmp

    def write_text(self, name: str, text: str) -> None:
        self.path(name).write_text(text, encoding="utf-8")

    def commit(self) -> List[Path]:
        for final, tmp in self._staged:
            _validate(tmp, final.suffix)
        for final, tmp in self._staged:
            os.replace(tmp, final)
        done = [final for final, _ in self._staged]
        self._staged = []
        return done

    def discard(self) -> None:
        for _, tmp in self._staged:
            try:
                tmp.unlink()
            except FileNotFoundError:
                pass
        self._staged = []


def _validate(path: Path, suffix: str) -> None:
    if not path.is_file() or path.stat().st_size == 0:
        raise FitError(f"output {path} was not written")
    text = path.read_text(encoding="utf-8")
    if suffix == ".json":
        json.loads(text)
    elif suffix == ".csv":
        rows = list(csv.reader(text.splitlines()))
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise FitError(f"output {path} is not a rectangular CSV")
    elif suffix == ".svg" and "</svg>" not in text:
        raise FitError(f"output {path} is not a complete SVG document")


# -- commands -----------------------------------------------------------------


def _load(cfg: RunConfig) -> SampleTable:
    table = load_csv(cfg.require_input(), cfg.schema or None)
    log.info("loaded %d rows from %s", table.n_rows, cfg.input)
    return table


def _id_columns(table: SampleTable) -> tuple[list, list]:
    header, cols = ["row_id"], [table.row_ids.tolist()]
    if "well_id" in table:
        header.append("well_id")
        cols.append(["" if v is None else v for v in table.column("well_id")])
    return header, cols


def cmd_summarize(cfg: RunConfig, out: Outputs) -> None:
    table = _load(cfg)
    summary = summarize(table)
    if "csv" in cfg.formats:
        write_rows(out.path("summary.csv"), summary_rows(summary))
    if "json" in cfg.formats:
        doc = {c: s.as_dict() for c, s in summary.columns.items()}
        out.write_text("summary.json", json.dumps(doc, indent=2) + "\n")
    complete = ~np.any([table.missing_mask(c) for c in CORE_INDICATORS], axis=0)
    try:
        R = correlation_matrix(table.take(np.flatnonzero(complete)), CORE_INDICATORS)
    except DataError as exc:
        log.warning("correlation matrix skipped: %s", exc)
        return
    if "csv" in cfg.formats:
        write_rows(out.path("correlation.csv"), correlation_rows(CORE_INDICATORS, R))
    if "json" in cfg.formats:
        doc = {"columns": list(CORE_INDICATORS), "matrix": R.tolist()}
        out.write_text("correlation.json", json.dumps(doc, indent=2) + "\n")


def cmd_clean(cfg: RunConfig, out: Outputs) -> None:
    table = dedup(impute(_load(cfg)))
    kept, report = iqr_filter(table, CORE_INDICATORS)
    write_csv(kept, out.path("cleaned.csv"), cfg.schema or None)
    out.write_text("outliers.json", report.to_json() + "\n")
    log.info("kept %d of %d rows", report.n_kept, report.n_input)


def cmd_gwqi(cfg: RunConfig, out: Outputs) -> None:
    table = _load(cfg)
    scores = compute_targets(table, cfg.who_limits())
    header, cols = _id_columns(table)
    rows = [[*header, "gwqi", "band", "out_of_table"]]
    for i, g in enumerate(scores.tolist()):
        band = classify(g)
        rows.append([*(c[i] for c in cols), g, band.label.value, str(band.out_of_table).lower()])
    write_rows(out.path("gwqi.csv"), rows)


def cmd_train(cfg: RunConfig, out: Outputs) -> None:
    table = _load(cfg)
    p_cat, p_lgb = cfg.hyperparams()
    bundle, preds = train_bundle(table, cfg.who_limits(), p_cat, p_lgb, cfg.de_config())
    bundle.save(out.path(str(cfg.model) if cfg.model else "model.json"))
    log.info("fusion weights: %s", bundle.weights.to_dict())


def cmd_predict(cfg: RunConfig, out: Outputs) -> None:
    if cfg.model is None:
        raise ConfigError("predict needs --model")
    bundle = ModelBundle.load(cfg.model)
    table = _load(cfg)
    preds = bundle.predict_table(table)
    header, cols = _id_columns(table)
    rows = [[*header, "cat", "lgb", "gwqi_pred"]]
    for i in range(table.n_rows):
        rows.append([*(c[i] for c in cols), float(preds.cat[i]), float(preds.lgb[i]), float(preds.fusion[i])])
    write_rows(out.path("predictions.csv"), rows)


def cmd_evaluate(cfg: RunConfig, out: Outputs) -> None:
    table = dedup(_load(cfg))
    p_cat, p_lgb = cfg.hyperparams()
    if table.n_rows < 2 * cfg.folds:
        raise DataError(
            f"{cfg.folds}-fold evaluation needs at least {2 * cfg.folds} rows, got {table.n_rows}"
        )
    report = cross_validate(table, cfg.who_limits(), p_cat, p_lgb, cfg.de_config(), k=cfg.folds, seed=cfg.seed)
    if "json" in cfg.formats:
        out.write_text("cv_report.json", report.to_json() + "\n")
    if "csv" in cfg.formats:
        write_rows(out.path("cv_folds.csv"), report.csv_rows())
        write_rows(out.path("cv_summary.csv"), cv_summary_rows(report))
    if "svg" in cfg.formats:
        out.write_text("importance.svg", importance_svg(report.importances))
    agg = report.aggregate("validation")
    for m, v in agg.items():
        log.info("validation %s: rmse=%.4f r2=%.4f", m, v["rmse"], v["r2"])


def cmd_synth(cfg: RunConfig, out: Outputs) -> None:
    targets = SURVEY_SUMMARY if cfg.targets is None else read_summary_csv(cfg.targets)
    table = synth_generate(targets, cfg.n, cfg.seed)
    write_csv(table, out.path("synthetic.csv"), cfg.schema or None)


COMMANDS: Dict[str, Callable[[RunConfig, Outputs], None]] = {
    "summarize": cmd_summarize,
    "clean": cmd_clean,
    "gwqi": cmd_gwqi,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "synth": cmd_synth,
}

_HELP = {
    "summarize": "descriptive statistics and correlation matrix of the indicators",
    "clean": "impute, drop duplicates and remove IQR outliers",
    "gwqi": "per-row GWQI score and quality band",
    "train": "fit both models and the fusion weights; write a model bundle",
    "evaluate": "k-fold cross-validation report",
    "predict": "fused GWQI predictions from a model bundle",
    "synth": "generate a synthetic sample table",
}


# -- argument parsing ---------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--input", help="input CSV")
    g.add_argument("--config", help="JSON run configuration; flags take precedence")
    g.add_argument("--out-dir", dest="out_dir", help="directory for outputs (default: .)")
    g.add_argument("--seed", type=int, help="global seed (default 42)")
    g.add_argument("--folds", type=int, help="cross-validation folds (default 10)")
    g.add_argument("--format", help="comma-separated report formats: json,csv,svg")
    g.add_argument("--limits", help="JSON file of WHO limits")
    g.add_argument("--schema", help="JSON file mapping column names to CSV headers")
    g.add_argument("--model", help="model bundle path (train writes it, predict reads it)")
    g.add_argument("--n", type=int, help="rows to generate (synth, default 2000)")
    g.add_argument("--targets", help="summary CSV to calibrate synth against")
    g.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = _Parser(prog="gwqfusion", description="Groundwater quality index modelling toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=_HELP[name], description=_HELP[name])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    out: Optional[Outputs] = None
    try:
        cfg = resolve_config(args)
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        out = Outputs(cfg.out_dir)
        COMMANDS[cfg.command](cfg, out)
        for path in out.commit():
            print(path)
        return EXIT_OK
    except ConfigError as exc:
        code, msg = EXIT_USAGE, f"configuration error: {exc}"
    except (DataError, FitError, OSError) as exc:
        code, msg = EXIT_DATA, f"error: {exc}"
    except Exception as exc:  # pragma: no cover - last-resort guard
        log.debug("internal error", exc_info=True)
        code, msg = EXIT_INTERNAL, f"internal error: {type(exc).__name__}: {exc}"
    if out is not None:
        out.discard()
    print(msg, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
