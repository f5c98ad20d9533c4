# hybrid/schemas.py
# Column order and types of every table the package reads or writes.

SCHEMAS = {
    "bench_report": {
        "model": "string",
        "engine": "string",
        "N": "int",
        "particles": "int",
        "seed": "int",
        "peak_live": "int",
        "wall_ms": "float",
        "posterior_mean": "float",
        "posterior_var": "float",
        "log_evidence": "float",
    },
    "posterior": {
        "weight": "float",
        "kind": "string",
        "mean": "float",
        "variance": "float",
    },
}


def data_schema(params) -> dict:
    """A model's data table: one float column per program parameter."""
    return {name: "float" for name in params}
