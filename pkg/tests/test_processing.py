# tests/test_processing.py
import numpy as np
import pandas as pd
import pytest

from hybrid.errors import DataError
from hybrid.processing import data_columns, load_data, normalize_headers, process_table, to_float, to_int, to_json


def test_normalize_headers_keeps_case():
    df = pd.DataFrame(columns=[" yObs ", "z-obs", "a  b"])
    assert list(normalize_headers(df).columns) == ["yObs", "z_obs", "a_b"]


@pytest.mark.parametrize("raw, expected", [("1,234.5", 1234.5), ("  2 ", 2.0), ("", None), ("N/A", None), ("x", None)])
def test_to_float(raw, expected):
    assert to_float(raw) == expected


def test_to_int_truncates_floats():
    assert to_int("12.0") == 12
    assert to_int("None") is None


def test_process_table_orders_and_casts():
    raw = pd.DataFrame({"variance": ["2"], "weight": ["0.5"], "extra": ["?"], "kind": [" gaussian "], "mean": ["1"]})
    df = process_table(raw, "posterior")
    assert list(df.columns) == ["weight", "kind", "mean", "variance"]
    assert df.iloc[0].to_dict() == {"weight": 0.5, "kind": "gaussian", "mean": 1.0, "variance": 2.0}


def test_process_table_sets_column_dtypes():
    rows = [{"model": "kalman", "engine": "ssi", "N": 10, "particles": 8, "seed": 0, "peak_live": 2,
             "wall_ms": 1.5, "posterior_mean": 0.25, "posterior_var": None, "log_evidence": -3.0}]
    df = process_table(pd.DataFrame(rows), "bench_report")
    assert str(df["N"].dtype) == "Int64"
    assert df["wall_ms"].dtype == np.float64
    assert np.isnan(df["posterior_var"].iloc[0])
    assert df["model"].tolist() == ["kalman"]


def test_process_table_keeps_empty_frames_typed():
    df = process_table(pd.DataFrame(columns=["weight", "kind", "mean", "variance"]), "posterior")
    assert df.empty
    assert df["mean"].dtype == np.float64


def test_to_json_writes_seventeen_digit_floats():
    assert to_json({"a": 0.1, "b": [1.0, 2]}) == '{"a": 0.10000000000000001, "b": [1, 2]}'
    assert to_json({"a": 0.5}, indent=2) == '{\n  "a": 0.5\n}'
    assert to_json([float("nan"), float("-inf")]) == "[NaN, -Infinity]"
    with pytest.raises(TypeError):
        to_json({"a": object()})


def test_load_data_picks_parameter_columns(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("note,yobs\na,0.5\nb,1.5\n", encoding="utf-8")
    df = load_data(path, ["yobs"])
    assert list(df.columns) == ["yobs"]
    assert df["yobs"].tolist() == [0.5, 1.5]


def test_load_data_errors(tmp_path):
    with pytest.raises(DataError):
        load_data(tmp_path / "missing.csv", ["yobs"])
    path = tmp_path / "d.csv"
    path.write_text("other\n1\n", encoding="utf-8")
    with pytest.raises(DataError, match="yobs"):
        load_data(path, ["yobs"])


def test_data_columns_checks_rows_and_blanks(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("yobs,note\n0.5,a\n,b\n2.5,c\n", encoding="utf-8")
    df = load_data(path, ["yobs"])
    np.testing.assert_array_equal(data_columns(df, ["yobs"], 1)["yobs"], [0.5])
    with pytest.raises(DataError, match="row 2"):
        data_columns(df, ["yobs"], 3)
    with pytest.raises(DataError, match="need at least 5"):
        data_columns(df, ["yobs"], 5)
