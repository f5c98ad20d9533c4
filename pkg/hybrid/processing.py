# hybrid/processing.py
"""
Table helpers: header normalization, value casting and schema application
for model data files and report frames.
"""
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, Optional, Union

import numpy as np
import pandas as pd

from .errors import DataError
from .schemas import SCHEMAS, data_schema

logger = logging.getLogger(__name__)

_MISSING = ("", "NULL", "N/A", "None", "nan")


def normalize_headers(df: pd.DataFrame) -> pd.DataFrame:
    """Strip whitespace, turn spaces and dashes into underscores, collapse repeats."""
    df.columns = (
        df.columns.astype(str)
        .str.strip()
        .str.replace(" ", "_")
        .str.replace("-", "_")
        .str.replace("\n", "_")
    )
    df.columns = df.columns.str.replace(r"_+", "_", regex=True).str.strip("_")
    return df


def to_string(val):
    if pd.isna(val) or val in _MISSING:
        return None
    return str(val).strip()


def to_int(val):
    if pd.isna(val) or val in _MISSING:
        return None
    try:
        return int(float(str(val).replace(",", "")))
    except (ValueError, TypeError):
        return None


def to_float(val):
    if pd.isna(val) or val in _MISSING:
        return None
    try:
        return float(str(val).replace(",", ""))
    except (ValueError, TypeError):
        return None


TYPE_FUNCS = {
    "string": to_string,
    "int": to_int,
    "float": to_float,
}

DTYPES = {
    "string": object,
    "int": "Int64",
    "float": "float64",
}


def process_table(df: pd.DataFrame, table: Union[str, Dict[str, str]]) -> pd.DataFrame:
    """
    Apply a schema to a dataframe: normalize headers, keep schema columns in
    schema order, cast each column.

    Args:
        df: raw table
        table: a name in SCHEMAS or an explicit {column: type} mapping
    """
    df = normalize_headers(df)
    schema = SCHEMAS[table] if isinstance(table, str) else table

    cols_to_keep = [c for c in schema if c in df.columns]
    df = df[cols_to_keep].copy()

    for col, type_name in schema.items():
        if col in df.columns:
            df[col] = df[col].apply(TYPE_FUNCS[type_name]).astype(DTYPES[type_name])
    return df


# ============================================================
# JSON OUTPUT
# ============================================================

def _float_text(value: float) -> str:
    if value != value:
        return "NaN"
    if value in (float("inf"), float("-inf")):
        return "Infinity" if value > 0 else "-Infinity"
    return format(value, ".17g")


def _not_serializable(obj):
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def to_json(doc, indent: Optional[int] = None) -> str:
    """json.dumps with every float written to 17 significant digits, like the CSV reports."""
    iterencode = json.encoder._make_iterencode(
        {}, _not_serializable, json.encoder.encode_basestring_ascii, " " * indent if indent is not None else None,
        _float_text, ": ", "," if indent is not None else ", ", False, False, True,
    )
    return "".join(iterencode(doc, 0))


# ============================================================
# MODEL DATA
# ============================================================

def load_data(path: Union[str, Path], params: Iterable[str]) -> pd.DataFrame:
    """
    Read a model's CSV data file.

    Raises:
        DataError: missing file, missing parameter column or unparseable value
    """
    params = list(params)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError as e:
        raise DataError(f"data file not found: {path}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"cannot read {path}: {e}") from e
    df = process_table(raw, data_schema(params))
    missing = [p for p in params if p not in df.columns]
    if missing:
        raise DataError(f"{path}: no column for parameter(s) {', '.join(missing)}")
    logger.debug("Loaded %d rows x %d params from %s", len(df), len(params), path)
    return df


def data_columns(df: pd.DataFrame, params: Iterable[str], rows: int) -> Dict[str, np.ndarray]:
    """
    Columns as float arrays, checked to hold at least `rows` values.

    Raises:
        DataError: a column is too short or has a blank/non-numeric cell within the first `rows`
    """
    out = {}
    for name in params:
        if name not in df.columns:
            raise DataError(f"no data for parameter '{name}'")
        col = df[name]
        if len(col) < rows:
            raise DataError(f"parameter '{name}' has {len(col)} rows, need at least {rows}")
        head = col.iloc[:rows]
        if head.isna().any():
            bad = int(head.isna().to_numpy().nonzero()[0][0]) + 1
            raise DataError(f"parameter '{name}' row {bad} is not a number")
        out[name] = head.to_numpy(dtype=float)
    return out
