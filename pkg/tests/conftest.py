import numpy as np
import pytest

from gfiam.splines import Dataset, SplineConfig, build_design


def make_dataset(n=60, p=4, seed=0, sigma=0.5, active=(0, 1)):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, p))
    y = sum(np.sin(2 * np.pi * X[:, j]) * (k + 1) for k, j in enumerate(active))
    y = y + sigma * rng.standard_normal(n)
    return Dataset(y, X)


@pytest.fixture
def small_design():
    """n=60, p=4, h_n=4 (l=3, K=1)."""
    return build_design(make_dataset(), SplineConfig(3, 1))



def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
