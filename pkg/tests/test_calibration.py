import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from esglab import DataFormatError, ValidationError, calibrate, load_history, to_returns

from conftest import synthetic_history, write_history


def test_load_well_formed(tmp_path):
    p = write_history(tmp_path / "h.csv", ["2020-01-31", "2020-02-29", "2020-03-31"], ["a", "b"],
                      [[100, 50], [101, 49], [102, 51]])
    h = load_history(p)
    assert len(h) == 3 and h.names == ("a", "b")
    assert h.levels.shape == (3, 2)


def test_non_increasing_dates_reports_row(tmp_path):
    p = write_history(tmp_path / "h.csv", ["2020-02-01", "2020-01-01"], ["a"], [[1.0], [2.0]])
    with pytest.raises(DataFormatError, match="non-increasing dates at row 2"):
        load_history(p)


@pytest.mark.parametrize(
    "body, match",
    [
        ("date,a\n2020-01-01,0\n", "non-positive level"),
        ("date,a\n2020-01-01,-3\n", "non-positive level"),
        ("date,a,b\n2020-01-01,1,\n", "missing cell"),
        ("date,a\n2020-13-01,1\n", "malformed date"),
        ("date,a\n2020-01-01,abc\n", "malformed number"),
        ("date,a\n2020-01-01,1,2\n", "malformed row"),
        ("when,a\n2020-01-01,1\n", "header"),
        ("", "empty"),
    ],
)
def test_load_rejects(tmp_path, body, match):
    p = tmp_path / "bad.csv"
    p.write_text(body, encoding="utf-8")
    with pytest.raises(DataFormatError, match=match):
        load_history(p)


def test_to_returns_values():
    np.testing.assert_allclose(to_returns(np.array([100.0, 110.0]))[:, 0], [0.10])
    np.testing.assert_array_equal(to_returns(np.full((4, 2), 7.0)), 0.0)
    # 110/100 - 1 and 99/110 - 1
    np.testing.assert_allclose(to_returns(np.array([100.0, 110.0, 99.0]))[:, 0], [0.10, -0.10], rtol=0, atol=1e-15)


def test_calibrate_conventions():
    r = np.array([[0.00, 0.02], [0.02, 0.00], [0.01, 0.01]])
    m = calibrate(r, 12)
    np.testing.assert_allclose(m.mu, [0.12, 0.12])
    np.testing.assert_allclose(m.sigma, np.sqrt(12) * 0.01)
    assert m.corr[0, 1] == pytest.approx(-1.0)
    x = np.array([0.01, -0.02, 0.03, 0.0])
    assert calibrate(np.column_stack([x, x]), 12).corr[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert calibrate(np.column_stack([x, -x]), 12).corr[0, 1] == pytest.approx(-1.0, abs=1e-12)


def test_calibrate_zero_variance_names_asset():
    r = np.array([[0.01, 0.0], [0.02, 0.0], [0.03, 0.0]])
    with pytest.raises(ValidationError, match="'flat'"):
        calibrate(r, 12, names=("x", "flat"))


def test_calibrate_from_file(tmp_path):
    h = load_history(synthetic_history(tmp_path))
    m = calibrate(to_returns(h), 12, names=h.names)
    assert m.names == ("mm", "bonds", "equities")
    assert m.sigma[0] < m.sigma[1] < m.sigma[2]


returns_matrix = arrays(
    float, st.tuples(st.integers(4, 30), st.integers(1, 4)),
    elements=st.floats(-0.5, 0.5, allow_nan=False, width=64),
)


@settings(max_examples=60, deadline=None)
@given(returns_matrix, st.floats(0.1, 10.0))
def test_calibration_properties(r, k):
    std = r.std(axis=0, ddof=1)
    scale = np.abs(r).max(axis=0)
    if np.any(std <= 1e-6 * np.maximum(scale, 1e-3)):
        return  # (near-)constant columns have no correlation
    m = calibrate(r, 12)
    np.testing.assert_allclose(np.diag(m.corr), 1.0, atol=1e-12)
    scaled = calibrate(r * k, 12)
    np.testing.assert_allclose(scaled.mu, k * m.mu, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(scaled.sigma, k * m.sigma, rtol=1e-12)
    np.testing.assert_allclose(scaled.corr, m.corr, atol=1e-12)
