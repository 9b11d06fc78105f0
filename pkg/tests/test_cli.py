import csv
import json

import numpy as np
import pytest

from gwqfusion.bundle import ModelBundle
from gwqfusion.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from gwqfusion.data_core import CORE_INDICATORS, load_csv, summarize, write_csv

from conftest import IN_RANGE, make_table

FAST = {
    "params_cat": {"n_estimators": 10, "max_depth": 3},
    "params_lgb": {"n_estimators": 10},
    "de": {"max_iterations": 10},
}


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def write_table(path, rows, **extra):
    write_csv(make_table(rows, **extra), path)
    return path


@pytest.fixture
def fast_config(tmp_path):
    p = tmp_path / "fast.json"
    p.write_text(json.dumps(FAST), encoding="utf-8")
    return p


@pytest.fixture
def synth_csv(tmp_path):
    out = tmp_path / "synth"
    assert main(["synth", "--n", "60", "--seed", "3", "--out-dir", str(out)]) == EXIT_OK
    return out / "synthetic.csv"


# -- summarize ---------------------------------------------------------------------


def test_summarize_three_rows(tmp_path, capsys):
    rows = [IN_RANGE, {**IN_RANGE, "EC": 800.0, "Na": 70.0}, {**IN_RANGE, "EC": 1200.0, "pH": 7.9}]
    src = write_table(tmp_path / "in.csv", rows)
    assert main(["summarize", "--input", str(src), "--out-dir", str(tmp_path)]) == EXIT_OK
    table = read_rows(tmp_path / "summary.csv")
    assert table[0] == ["statistic", *CORE_INDICATORS]
    assert [r[0] for r in table[1:]] == ["count", "mean", "std", "min", "25%", "50%", "75%", "max"]
    expected = summarize(load_csv(src))
    for r in table[1:]:
        for c, cell in zip(CORE_INDICATORS, r[1:]):
            assert abs(float(cell) - expected.columns[c].as_dict()[r[0]]) <= 1e-9
    assert str(tmp_path / "summary.csv") in capsys.readouterr().out


def test_summarize_json_and_correlation(tmp_path, synth_csv):
    assert main(["summarize", "--input", str(synth_csv), "--out-dir", str(tmp_path),
                 "--format", "json,csv"]) == EXIT_OK
    doc = json.loads((tmp_path / "correlation.json").read_text())
    R = np.array(doc["matrix"])
    assert R.shape == (9, 9) and np.allclose(np.diag(R), 1)
    assert set(json.loads((tmp_path / "summary.json").read_text())) == set(CORE_INDICATORS)


def test_summarize_missing_file(tmp_path, capsys):
    missing = tmp_path / "absent.csv"
    assert main(["summarize", "--input", str(missing), "--out-dir", str(tmp_path)]) == EXIT_DATA
    assert str(missing) in capsys.readouterr().err
    assert not list(tmp_path.iterdir())


# -- clean -------------------------------------------------------------------------


def test_clean_removes_extreme_row(tmp_path):
    rows = [{**IN_RANGE, "EC": 400.0 + 10 * i} for i in range(10)]
    rows.append({**IN_RANGE, "EC": 50_000.0})
    src = write_table(tmp_path / "in.csv", rows)
    assert main(["clean", "--input", str(src), "--out-dir", str(tmp_path)]) == EXIT_OK
    kept = load_csv(tmp_path / "cleaned.csv")
    assert kept.n_rows == 10 and 50_000.0 not in kept.column("EC").tolist()
    report = json.loads((tmp_path / "outliers.json").read_text())
    assert report["removed_row_ids"] == [10]


def test_clean_without_outliers_keeps_rows(tmp_path):
    rows = [{**IN_RANGE, "EC": 400.0 + 10 * i} for i in range(10)]
    src = write_table(tmp_path / "in.csv", rows)
    assert main(["clean", "--input", str(src), "--out-dir", str(tmp_path)]) == EXIT_OK
    assert load_csv(tmp_path / "cleaned.csv").matrix(CORE_INDICATORS).tolist() == \
        load_csv(src).matrix(CORE_INDICATORS).tolist()


def test_clean_collapses_duplicates(tmp_path):
    rows = [IN_RANGE, IN_RANGE, {**IN_RANGE, "K": 7.0}]
    src = write_table(tmp_path / "in.csv", rows, well_id=["w1", "w1", "w2"])
    assert main(["clean", "--input", str(src), "--out-dir", str(tmp_path)]) == EXIT_OK
    assert load_csv(tmp_path / "cleaned.csv").n_rows == 2


# -- gwqi --------------------------------------------------------------------------


def test_gwqi_all_compliant_row(tmp_path):
    src = write_table(tmp_path / "in.csv", [IN_RANGE, {**IN_RANGE, "F": 3.0}], well_id=["a", "b"])
    assert main(["gwqi", "--input", str(src), "--out-dir", str(tmp_path)]) == EXIT_OK
    rows = read_rows(tmp_path / "gwqi.csv")
    assert rows[0] == ["row_id", "well_id", "gwqi", "band", "out_of_table"]
    assert rows[1][:4] == ["0", "a", "300.0", "Unsuitable"]
    assert float(rows[2][2]) == pytest.approx(287.228, abs=1e-3) and rows[2][3] == "Very Poor"


def test_gwqi_single_indicator_limits(tmp_path):
    src = write_table(tmp_path / "in.csv", [{**IN_RANGE, "F": 3.0}])
    lim = tmp_path / "lim.json"
    lim.write_text(json.dumps({"F": [1, 1.5]}))
    assert main(["gwqi", "--input", str(src), "--limits", str(lim), "--out-dir", str(tmp_path)]) == EXIT_OK
    row = read_rows(tmp_path / "gwqi.csv")[1]
    assert float(row[1]) == pytest.approx(50.0) and row[2] == "Good"


def test_gwqi_missing_indicator_column(tmp_path):
    src = tmp_path / "in.csv"
    src.write_text("pH,EC\n7,500\n")
    assert main(["gwqi", "--input", str(src), "--out-dir", str(tmp_path)]) == EXIT_DATA


# -- train / predict ---------------------------------------------------------------


def test_train_then_predict_bitwise(tmp_path, synth_csv, fast_config):
    model = tmp_path / "m.json"
    assert main(["train", "--input", str(synth_csv), "--config", str(fast_config),
                 "--model", str(model), "--out-dir", str(tmp_path)]) == EXIT_OK
    assert main(["predict", "--input", str(synth_csv), "--model", str(model),
                 "--out-dir", str(tmp_path)]) == EXIT_OK
    rows = read_rows(tmp_path / "predictions.csv")
    assert rows[0] == ["row_id", "well_id", "cat", "lgb", "gwqi_pred"]
    expected = ModelBundle.load(model).predict_table(load_csv(synth_csv)).fusion
    got = np.array([float(r[4]) for r in rows[1:]])
    assert got.tobytes() == expected.tobytes()


def test_predict_missing_column(tmp_path, synth_csv, fast_config):
    model = tmp_path / "m.json"
    assert main(["train", "--input", str(synth_csv), "--config", str(fast_config),
                 "--model", str(model)]) == EXIT_OK
    lines = synth_csv.read_text().splitlines()
    header = lines[0].split(",")
    drop = header.index("F")
    src = tmp_path / "noF.csv"
    src.write_text("\n".join(",".join(c for i, c in enumerate(l.split(",")) if i != drop) for l in lines))
    code = main(["predict", "--input", str(src), "--model", str(model), "--out-dir", str(tmp_path)])
    assert code == EXIT_DATA


def test_predict_version_mismatch(tmp_path, synth_csv, fast_config, capsys):
    model = tmp_path / "m.json"
    assert main(["train", "--input", str(synth_csv), "--config", str(fast_config),
                 "--model", str(model)]) == EXIT_OK
    doc = json.loads(model.read_text())
    doc["version"] = 99
    model.write_text(json.dumps(doc))
    code = main(["predict", "--input", str(synth_csv), "--model", str(model), "--out-dir", str(tmp_path)])
    assert code == EXIT_DATA and "version" in capsys.readouterr().err
    assert not (tmp_path / "predictions.csv").exists()


def test_predict_needs_model(tmp_path, synth_csv):
    assert main(["predict", "--input", str(synth_csv), "--out-dir", str(tmp_path)]) == EXIT_USAGE


# -- evaluate ----------------------------------------------------------------------


def test_evaluate_small_run_is_reproducible(tmp_path, synth_csv, fast_config):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["evaluate", "--input", str(synth_csv), "--config", str(fast_config), "--folds", "3",
                     "--format", "json,csv,svg", "--out-dir", str(d)]) == EXIT_OK
    for name in ("cv_report.json", "cv_folds.csv", "cv_summary.csv", "importance.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    doc = json.loads((a / "cv_report.json").read_text())
    assert set(doc["aggregates"]["validation"]) == {"cat", "lgb", "fusion"}
    assert doc["config"]["k"] == 3 and doc["config"]["params_cat"]["n_estimators"] == 10
    assert (a / "importance.svg").read_text().rstrip().endswith("</svg>")
    assert not list(a.glob(".*.partial"))


def test_evaluate_too_many_folds(tmp_path, synth_csv, fast_config, capsys):
    out = tmp_path / "out"
    code = main(["evaluate", "--input", str(synth_csv), "--config", str(fast_config), "--folds", "31",
                 "--out-dir", str(out)])
    assert code == EXIT_DATA and "rows" in capsys.readouterr().err
    assert not list(out.iterdir())


def test_evaluate_failure_discards_staged_files(tmp_path, synth_csv, fast_config, monkeypatch):
    import gwqfusion.cli as cli

    def boom(rows):
        raise OSError("disk full")

    monkeypatch.setattr(cli, "cv_summary_rows", boom)
    out = tmp_path / "out"
    code = main(["evaluate", "--input", str(synth_csv), "--config", str(fast_config), "--folds", "3",
                 "--out-dir", str(out)])
    assert code == EXIT_DATA
    assert list(out.iterdir()) == []


# -- usage and configuration -------------------------------------------------------


def test_usage_errors(capsys):
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main(["gwqi", "--seed", "abc"]) == EXIT_USAGE
    assert main(["gwqi"]) == EXIT_USAGE  # no --input
    assert main(["gwqi", "--input", "x.csv", "--format", "pdf"]) == EXIT_USAGE


def test_bad_config_values(tmp_path, synth_csv):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert main(["gwqi", "--input", str(synth_csv), "--config", str(cfg)]) == EXIT_USAGE
    cfg.write_text(json.dumps({"params_cat": {"learning_rate": -1}}))
    assert main(["train", "--input", str(synth_csv), "--config", str(cfg),
                 "--out-dir", str(tmp_path)]) == EXIT_USAGE
    cfg.write_text(json.dumps({"de": {"bounds": [[0, 1]]}}))
    assert main(["train", "--input", str(synth_csv), "--config", str(cfg),
                 "--out-dir", str(tmp_path)]) == EXIT_USAGE


def test_flags_override_config(tmp_path, synth_csv):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 15, "seed": 1, "out_dir": str(tmp_path / "from_config")}))
    assert main(["synth", "--config", str(cfg), "--n", "12", "--out-dir", str(tmp_path / "flag")]) == EXIT_OK
    t = load_csv(tmp_path / "flag" / "synthetic.csv")
    assert t.n_rows == 12 and not (tmp_path / "from_config").exists()
    assert main(["synth", "--config", str(cfg)]) == EXIT_OK
    assert load_csv(tmp_path / "from_config" / "synthetic.csv").n_rows == 15


def test_synth_deterministic_and_calibrated(tmp_path, synth_csv):
    assert main(["synth", "--n", "60", "--seed", "3", "--out-dir", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "synthetic.csv").read_bytes() == synth_csv.read_bytes()
    # targets taken from a summary CSV written by summarize
    assert main(["summarize", "--input", str(synth_csv), "--out-dir", str(tmp_path)]) == EXIT_OK
    out = tmp_path / "again"
    assert main(["synth", "--targets", str(tmp_path / "summary.csv"), "--n", "500",
                 "--out-dir", str(out)]) == EXIT_OK
    t = load_csv(out / "synthetic.csv")
    src = load_csv(synth_csv)
    for c in CORE_INDICATORS:
        assert t.column(c).min() >= src.column(c).min() - 1e-9
        assert t.column(c).max() <= src.column(c).max() + 1e-9


def test_schema_file_maps_headers(tmp_path):
    src = tmp_path / "in.csv"
    header = ["ph_value", *CORE_INDICATORS[1:]]
    src.write_text(",".join(header) + "\n" + ",".join(str(IN_RANGE[c]) for c in CORE_INDICATORS) + "\n")
    schema = tmp_path / "schema.json"
    schema.write_text(json.dumps({"pH": "ph_value"}))
    assert main(["gwqi", "--input", str(src), "--schema", str(schema), "--out-dir", str(tmp_path)]) == EXIT_OK
    assert read_rows(tmp_path / "gwqi.csv")[1][1] == "300.0"
