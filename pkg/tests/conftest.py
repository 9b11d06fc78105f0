import numpy as np
import pytest

from gwqfusion.data_core import CORE_INDICATORS, SURVEY_SUMMARY, SampleTable, synth_generate


def make_table(rows, **extra):
    """SampleTable from a list of per-row dicts over the core indicators."""
    data = {c: [r.get(c) for r in rows] for c in CORE_INDICATORS}
    for k, v in extra.items():
        data[k] = v
    return SampleTable(data)


IN_RANGE = {"pH": 7.0, "EC": 500.0, "TH": 150.0, "Ca": 40.0, "Mg": 20.0,
            "Na": 50.0, "K": 5.0, "F": 1.2, "Cl": 100.0}


@pytest.fixture
def in_range_row():
    return dict(IN_RANGE)


@pytest.fixture(scope="session")
def synth_small():
    return synth_generate(SURVEY_SUMMARY, 300, 7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
