import numpy as np
import pytest

from esglab import AssetModel
from esglab.io import bundled_config


@pytest.fixture(scope="session")
def bundled():
    return bundled_config()


@pytest.fixture
def model3():
    return AssetModel(
        ("mm", "bonds", "equities"),
        mu=[0.02, 0.05, 0.08],
        sigma=[0.01, 0.04, 0.2],
        corr=[[1.0, 0.2, 0.0], [0.2, 1.0, -0.3], [0.0, -0.3, 1.0]],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_history(path, dates, names, levels):
    lines = ["date," + ",".join(names)]
    for d, row in zip(dates, levels):
        lines.append(d + "," + ",".join(repr(float(x)) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def synthetic_history(tmp_path, n_months=60, seed=7):
    """Monthly levels of three correlated indices starting 2000-01-01."""
    r = np.random.default_rng(seed)
    L = np.linalg.cholesky(np.array([[1, 0.3, 0.1], [0.3, 1, -0.2], [0.1, -0.2, 1]]))
    rets = np.array([0.002, 0.005, 0.007]) + (r.standard_normal((n_months - 1, 3)) @ L.T) * [0.001, 0.005, 0.05]
    levels = 100.0 * np.vstack([np.ones(3), np.cumprod(1 + rets, axis=0)])
    dates = [f"{2000 + m // 12:04d}-{m % 12 + 1:02d}-01" for m in range(n_months)]
    return write_history(tmp_path / "history.csv", dates, ["mm", "bonds", "equities"], levels)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
