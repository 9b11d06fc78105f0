import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwqfusion.data_core import CORE_INDICATORS, SampleTable
from gwqfusion.errors import ColumnError, ConfigError, DataError
from gwqfusion.gwqi import (
    BandLabel,
    Limit,
    WhoLimits,
    aggregate,
    classify,
    compute_targets,
    sub_index,
    sub_index_array,
)

from conftest import IN_RANGE, make_table
from oracles import WHO, brute_band, brute_gwqi, brute_sub_index

PH = Limit(6.5, 8.5)


def test_sub_index_examples():
    assert sub_index(7.0, PH, concentration=False) == 100.0
    assert sub_index(5.2, PH, concentration=False) == pytest.approx(80.0, abs=1e-12)
    assert sub_index(3000, Limit(1, 1500)) == pytest.approx(50.0, abs=1e-12)
    assert sub_index(4.68, Limit(1, 1.5)) == pytest.approx(32.0513, abs=1e-4)
    assert sub_index(0.0, Limit(1, 75)) == 0.0


def test_sub_index_errors():
    with pytest.raises(DataError):
        sub_index(-1.0, Limit(1, 75))
    with pytest.raises(DataError):
        sub_index(math.inf, Limit(1, 75))
    with pytest.raises(ValueError):
        Limit(5, 5)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e5), st.floats(0, 1e5))
def test_sub_index_monotone_branches(a, b):
    lim = Limit(1, 250)
    lo, hi = sorted((a, b))
    sa, sb = sub_index(lo, lim), sub_index(hi, lim)
    assert 0 <= sa <= 100 and 0 <= sb <= 100
    if lo > lim.std_max:
        assert sb <= sa
    if hi < lim.std_min:
        assert sa <= sb
    assert sub_index(lo, lim) == brute_sub_index(lo, 1, 250)


def test_aggregate_examples():
    assert aggregate([42.0]) == 42.0
    assert aggregate([60, 80]) == 100.0
    assert aggregate([100.0] * 9) == 300.0
    with pytest.raises(DataError):
        aggregate([])
    with pytest.raises(DataError):
        aggregate([101.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 100), min_size=1, max_size=9), st.randoms(), st.floats(0, 100))
def test_aggregate_permutation_and_monotone(si, rnd, bump):
    shuffled = list(si)
    rnd.shuffle(shuffled)
    assert aggregate(si) == pytest.approx(aggregate(shuffled), rel=1e-12)
    raised = list(si)
    raised[0] = max(raised[0], bump)
    assert aggregate(raised) >= aggregate(si)
    assert aggregate(si) <= 100 * math.sqrt(len(si)) + 1e-9


def test_band_table():
    assert classify(30).label is BandLabel.EXCELLENT
    assert classify(150).label is BandLabel.POOR
    assert classify(250).label is BandLabel.VERY_POOR
    assert classify(350).label is BandLabel.UNSUITABLE
    for edge, label in [(0, "Excellent"), (50, "Good"), (100, "Poor"), (200, "Very Poor"), (300, "Unsuitable")]:
        assert classify(edge).label.value == label
    assert classify(49.999999).label.value == "Excellent"
    assert classify(400).label.value == "Unsuitable" and not classify(400).out_of_table
    assert classify(401).out_of_table
    with pytest.raises(DataError):
        classify(-0.1)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 500))
def test_band_matches_oracle(score):
    assert classify(score).label.value == brute_band(score)


def test_default_limits():
    d = WhoLimits.default()
    assert {k: (v.std_min, v.std_max) for k, v in d.items()} == {
        "pH": (6.5, 8.5), "EC": (1, 1500), "TH": (1, 300), "Ca": (1, 75), "Mg": (1, 50),
        "Na": (1, 200), "K": (1, 12), "F": (1, 1.5), "Cl": (1, 250),
    }
    assert list(d) == list(CORE_INDICATORS)


def test_limits_file(tmp_path):
    p = tmp_path / "lim.json"
    p.write_text(json.dumps({"F": [1, 3]}))
    only = WhoLimits.from_json(p)
    assert list(only) == ["F"]
    p.write_text(json.dumps({"F": {"std_min": 1, "std_max": 3}, "extend_defaults": True}))
    ext = WhoLimits.from_json(p)
    assert len(ext) == 9 and ext["F"].std_max == 3
    p.write_text(json.dumps({"F": [3, 1]}))
    with pytest.raises((ConfigError, ValueError)):
        WhoLimits.from_json(p)
    with pytest.raises(ConfigError):
        WhoLimits.from_json(tmp_path / "none.json")


def test_compute_targets_examples():
    t = make_table([IN_RANGE, {**IN_RANGE, "F": 3.0}])
    g = compute_targets(t)
    assert g[0] == 300.0
    assert g[1] == pytest.approx(math.sqrt(8 * 100**2 + 50**2), abs=1e-9)
    assert g[1] == pytest.approx(287.228, abs=1e-3)
    empty = SampleTable({c: [] for c in CORE_INDICATORS})
    assert compute_targets(empty).shape == (0,)


def test_compute_targets_single_indicator_limits():
    t = make_table([{**IN_RANGE, "F": 3.0}])
    g = compute_targets(t, WhoLimits({"F": Limit(1, 1.5)}))
    assert g[0] == pytest.approx(50.0)


def test_compute_targets_errors():
    t = make_table([{**IN_RANGE, "K": None}])
    with pytest.raises(DataError, match="missing"):
        compute_targets(t)
    with pytest.raises(ColumnError):
        compute_targets(make_table([IN_RANGE]), WhoLimits({"SO4": Limit(1, 250)}))


def test_vectorised_matches_scalar(rng):
    for name, (lo, hi) in WHO.items():
        v = rng.uniform(0, 3 * hi, 500)
        lim = Limit(lo, hi)
        vec = sub_index_array(v, lim, concentration=name != "pH")
        assert vec.tolist() == [sub_index(x, lim, name != "pH") for x in v]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_targets_bounded_by_300(seed):
    rng = np.random.default_rng(seed)
    rows = [{c: float(rng.uniform(0, 4 * WHO[c][1])) for c in CORE_INDICATORS} for _ in range(20)]
    g = compute_targets(make_table(rows))
    assert np.all((g >= 0) & (g <= 300))
    assert np.allclose(g, [brute_gwqi(r) for r in rows], atol=1e-9, rtol=0)
