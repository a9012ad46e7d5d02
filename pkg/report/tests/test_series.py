"""CSV loading: structural validation and blank-cell handling."""

import math

import numpy as np
import pytest

from report.series import MissingColumnError, TimeSeries, load_rates


def write(path, text):
    path.write_text(text)
    return str(path)


GOOD = """\
t,k,eps,test2,u_err_l2
0.1,0.1,1e-6,,0.01
0.2,0.1,2e-6,3e-8,0.02
0.3,0.1,2e-6,4e-8,
"""


def test_round_trip_columns(tmp_path):
    ts = TimeSeries.from_csv(write(tmp_path / "timeseries.csv", GOOD))
    assert ts.names == ("t", "k", "eps", "test2", "u_err_l2")
    assert len(ts) == 3
    np.testing.assert_allclose(ts.column("t"), [0.1, 0.2, 0.3])
    np.testing.assert_allclose(ts.column("eps"), [1e-6, 2e-6, 2e-6])


def test_blank_cells_load_as_nan(tmp_path):
    ts = TimeSeries.from_csv(write(tmp_path / "timeseries.csv", GOOD))
    assert math.isnan(ts.column("test2")[0])
    assert math.isnan(ts.column("u_err_l2")[2])
    assert ts.column("test2")[1] == 3e-8


def test_time_must_increase(tmp_path):
    path = write(tmp_path / "bad.csv", "t,k\n0.2,0.1\n0.2,0.1\n")
    with pytest.raises(ValueError, match="strictly increasing"):
        TimeSeries.from_csv(path)


def test_ragged_row_rejected(tmp_path):
    path = write(tmp_path / "bad.csv", "t,k,eps\n0.1,0.1\n")
    with pytest.raises(ValueError, match="line 2 has 2 fields"):
        TimeSeries.from_csv(path)


def test_empty_file_rejected(tmp_path):
    path = write(tmp_path / "empty.csv", "t,k\n")
    with pytest.raises(ValueError, match="no data rows"):
        TimeSeries.from_csv(path)


def test_missing_column_is_a_named_error(tmp_path):
    ts = TimeSeries.from_csv(write(tmp_path / "timeseries.csv", GOOD))
    with pytest.raises(MissingColumnError) as err:
        ts.column("grad_u")
    assert "grad_u" in str(err.value)
    assert "timeseries.csv" in str(err.value)


def test_series_without_t_rejected(tmp_path):
    path = write(tmp_path / "not.csv", "k,eps\n0.1,1e-6\n")
    with pytest.raises(MissingColumnError):
        TimeSeries.from_csv(path)


def test_load_rates_ignores_blank_rate(tmp_path):
    path = write(tmp_path / "rates.csv",
                 "k,u_err_l2,rate\n0.1,1e-2,\n0.05,2.5e-3,2.0\n")
    k, err = load_rates(path)
    np.testing.assert_allclose(k, [0.1, 0.05])
    np.testing.assert_allclose(err, [1e-2, 2.5e-3])


def test_load_rates_rejects_nonpositive(tmp_path):
    path = write(tmp_path / "rates.csv",
                 "k,u_err_l2,rate\n0.1,0.0,\n")
    with pytest.raises(ValueError, match="nonpositive"):
        load_rates(path)
