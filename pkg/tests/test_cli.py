# tests/test_cli.py
import json

import pandas as pd
import pytest

from conftest import DATA, MODELS, OUTLIER
from hybrid.cli import EXIT_ENV, EXIT_FAIL, EXIT_OK, main, parse_sets, parse_sweep
from hybrid.errors import ConfigError
from hybrid.schemas import SCHEMAS


@pytest.fixture
def outlier_files(tmp_path):
    model = tmp_path / "models" / "outlier.hppl"
    model.parent.mkdir()
    model.write_text(OUTLIER, encoding="utf-8")
    data = tmp_path / "data" / "outlier.csv"
    data.parent.mkdir()
    data.write_text("yobs\n0.4\n1.3\n9.6\n1.9\n2.2\n", encoding="utf-8")
    return model, data


# ============================================================
# CHECK / ANALYZE
# ============================================================

def test_check_accepts_corpus_model(capsys):
    path = str(MODELS / "kalman.hppl")
    assert main(["check", path]) == EXIT_OK
    assert capsys.readouterr().out.strip() == f"✓ {path}"


def test_check_reports_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.hppl"
    bad.write_text("function f(){ x <- gaussian(0.,1.) x }", encoding="utf-8")
    assert main(["check", str(bad)]) == EXIT_FAIL
    assert capsys.readouterr().err.startswith("ParseError:")


def test_check_lists_every_validation_error(tmp_path, capsys):
    bad = tmp_path / "bad.hppl"
    bad.write_text("function f() { x <- gaussian(a, 1.); y <- gaussian(b, 1.); y }", encoding="utf-8")
    assert main(["check", str(bad)]) == EXIT_FAIL
    lines = capsys.readouterr().err.strip().splitlines()
    assert len(lines) == 2
    assert all(line.startswith("ValidationError:") for line in lines)


def test_missing_model_file_is_environment_failure(tmp_path):
    assert main(["check", str(tmp_path / "nope.hppl")]) == EXIT_ENV


def test_unknown_log_level_exits_two(capsys):
    assert main(["--log-level", "LOUD", "check", str(MODELS / "kalman.hppl")]) == EXIT_ENV
    assert capsys.readouterr().err.strip() == "ConfigError: unknown log level 'LOUD'"


def test_analyze_text(capsys):
    assert main(["analyze", str(MODELS / "outlier_exact_only.hppl")]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "x: Refuted at if(o)"
    assert out[-1].startswith("memory: ")


def test_analyze_strict_fails_on_refuted():
    assert main(["analyze", "--strict", str(MODELS / "outlier_exact_only.hppl")]) == EXIT_FAIL
    assert main(["analyze", "--strict", str(MODELS / "kalman_exact.hppl")]) == EXIT_OK


def test_analyze_json(capsys):
    assert main(["analyze", "--json", str(MODELS / "random_walk.hppl")]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc == {"exact": [], "memory": {"verdict": "Unbounded", "witness": "x", "site": 3}}


# ============================================================
# INFER / ORACLE
# ============================================================

def test_infer_json_is_deterministic(outlier_files, capsys):
    model, data = outlier_files
    argv = ["infer", str(model), "--data", str(data), "--particles", "50", "--seed", "4", "--json"]
    assert main(argv) == EXIT_OK
    first = capsys.readouterr().out
    assert main(argv) == EXIT_OK
    assert capsys.readouterr().out == first
    assert [v[0] for v in json.loads(first)["diagnostics"]["sampled_vars"]] == ["o"] * 5


def test_infer_exact_violation_exits_one(capsys):
    argv = ["infer", str(MODELS / "outlier_exact_only.hppl"), "--data", str(DATA / "outlier_exact_only.csv")]
    assert main(argv) == EXIT_FAIL
    assert "ExactViolation: x at line 6, iteration 1" in capsys.readouterr().err


def test_infer_without_data_exits_two(outlier_files):
    model, _ = outlier_files
    assert main(["infer", str(model)]) == EXIT_ENV


def test_infer_bad_particle_count_exits_two(outlier_files):
    model, data = outlier_files
    assert main(["infer", str(model), "--data", str(data), "--particles", "0"]) == EXIT_ENV


def test_infer_short_data_exits_two(outlier_files, tmp_path):
    model, _ = outlier_files
    short = tmp_path / "short.csv"
    short.write_text("yobs\n0.1\n0.2\n", encoding="utf-8")
    assert main(["infer", str(model), "--data", str(short)]) == EXIT_ENV


def test_oracle_compare(outlier_files, tmp_path, capsys):
    model, data = outlier_files
    assert main(["infer", str(model), "--data", str(data), "--particles", "20000", "--seed", "0", "--json"]) == EXIT_OK
    inferred = tmp_path / "infer.json"
    inferred.write_text(capsys.readouterr().out, encoding="utf-8")

    assert main(["oracle", str(model), "--data", str(data), "--compare", str(inferred), "--tol", "0.1"]) == EXIT_OK
    errors = json.loads(capsys.readouterr().out)
    assert set(errors) == {"mean_error", "log_evidence_error"}
    assert main(["oracle", str(model), "--data", str(data), "--compare", str(inferred), "--tol", "0"]) == EXIT_FAIL


def test_oracle_too_many_draws_exits_one(outlier_files):
    model, _ = outlier_files
    assert main(["oracle", str(model), "--data", str(DATA / "kalman.csv"), "--set", "N=25"]) == EXIT_FAIL


def test_oracle_unbound_constant_exits_two(tmp_path, capsys):
    source = tmp_path / "nc.hppl"
    source.write_text("function f(d) { for i in 1 .. M { x <- gaussian(0., 1.); observe(x, d[i]); } x }", encoding="utf-8")
    data = tmp_path / "nc.csv"
    data.write_text("d\n0.5\n", encoding="utf-8")
    assert main(["oracle", str(source), "--data", str(data)]) == EXIT_ENV
    assert capsys.readouterr().err.startswith("ConfigError:")
    assert main(["oracle", str(source), "--data", str(data), "--set", "M=1"]) == EXIT_OK


def test_oracle_json_uses_seventeen_digits(outlier_files, capsys):
    model, data = outlier_files
    assert main(["oracle", str(model), "--data", str(data), "--json"]) == EXIT_OK
    text = capsys.readouterr().out
    doc = json.loads(text)
    assert f'"log_evidence": {doc["log_evidence"]:.17g}' in text


# ============================================================
# BENCH
# ============================================================

def test_bench_writes_sorted_report(outlier_files, tmp_path):
    model, _ = outlier_files
    out = tmp_path / "report" / "bench.csv"
    argv = ["bench", "--models", str(model.parent), "--engines", "ds,ssi", "--sweep", "N=5,3",
            "--particles", "10", "--seeds", "2", "--out", str(out)]
    assert main(argv) == EXIT_OK
    df = pd.read_csv(out)
    assert list(df.columns) == list(SCHEMAS["bench_report"])
    assert len(df) == 8
    assert list(df["engine"]) == ["ds"] * 4 + ["ssi"] * 4
    assert list(df["N"][:4]) == [3, 3, 5, 5]


def test_bench_report_casts_columns(outlier_files, tmp_path):
    model, _ = outlier_files
    out = tmp_path / "bench.csv"
    argv = ["bench", "--models", str(model.parent), "--engines", "ssi", "--sweep", "N=2",
            "--particles", "10", "--out", str(out)]
    assert main(argv) == EXIT_OK
    header, row = out.read_text(encoding="utf-8").strip().splitlines()
    fields = dict(zip(header.split(","), row.split(",")))
    assert (fields["model"], fields["N"], fields["particles"], fields["seed"]) == ("outlier", "2", "10", "0")
    assert float(fields["log_evidence"]) == pytest.approx(pd.read_csv(out)["log_evidence"][0])


def test_bench_empty_directory_writes_header(tmp_path):
    models = tmp_path / "models"
    models.mkdir()
    out = tmp_path / "bench.csv"
    assert main(["bench", "--models", str(models), "--out", str(out)]) == EXIT_OK
    assert out.read_text(encoding="utf-8").strip() == ",".join(SCHEMAS["bench_report"])


def test_bench_missing_directory_exits_two(tmp_path):
    assert main(["bench", "--models", str(tmp_path / "none"), "--out", str(tmp_path / "b.csv")]) == EXIT_ENV


# ============================================================
# ARGUMENT HELPERS
# ============================================================

def test_parse_sets():
    assert parse_sets(["N=10", " K = 2"]) == {"N": 10, "K": 2}
    assert parse_sets(None) == {}
    with pytest.raises(ConfigError):
        parse_sets(["N"])
    with pytest.raises(ConfigError):
        parse_sets(["N=ten"])


def test_parse_sweep():
    assert parse_sweep("N=10,100,1000") == ("N", [10, 100, 1000])
    with pytest.raises(ConfigError):
        parse_sweep("10,100")
