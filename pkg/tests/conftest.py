import numpy as np
import pandas as pd
import pytest

from mimicry.estimation import ComovementSeries
from mimicry.model import ModelParams, stationary_pmf

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def iid_series(n_nodes, u, d, days, rng, start="2000-01-03", min_stocks=0):
    """Independent daily up-counts from the exact law, one per business day."""
    pmf = stationary_pmf(ModelParams(n_nodes, u, d)).probs
    k = rng.choice(n_nodes + 1, size=days, p=pmf)
    dates = pd.bdate_range(start, periods=days).to_numpy().astype("datetime64[D]")
    return ComovementSeries(dates, k, np.full(days, n_nodes), min_stocks=min_stocks)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
