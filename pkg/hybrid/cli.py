# hybrid/cli.py
"""
Command-line entry point.

  hybrid-infer check   MODEL
  hybrid-infer analyze MODEL [--strict] [--m-max M] [--json]
  hybrid-infer infer   MODEL [--data CSV] [--engine ssi|ds] [--particles P] [--seed S] [--set N=10] [--json]
  hybrid-infer oracle  MODEL [--data CSV] [--set N=5] [--compare INFER.json --tol T]
  hybrid-infer bench   [--models DIR] [--engines ssi,ds] [--sweep N=10,100,1000] [--seeds K] --out CSV

Exit codes: 0 success, 1 semantic failure (parse/validation error, verdict,
exact violation, tolerance), 2 environment failure (I/O, data, configuration).
"""
import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd
from tenacity import before_sleep_log, retry, retry_if_exception_type, stop_after_attempt, wait_fixed

from .errors import (
    AllParticlesDead, ConfigError, DataError, ExactViolation, HybridError, NonEnumerable, ParseError,
    TooManyDiscrete, ValidationFailed,
)
from .lang import CheckedProgram, collect_errors, parse_file, validate
from .processing import load_data, process_table, to_json
from .runtime import Engine, RunConfig, get_config, oracle_posterior, run, synthesize
from .runtime.infer import required_rows
from .runtime.oracle import compare
from .schemas import SCHEMAS
from .verify import K_MAX, M_MAX, MemConfig, analyze_division, analyze_memory

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_ENV = 2

SEMANTIC_ERRORS = (ParseError, ValidationFailed, ExactViolation, TooManyDiscrete, NonEnumerable, AllParticlesDead)
ENVIRONMENT_ERRORS = (OSError, DataError, ConfigError)


# ============================================================
# HELPERS
# ============================================================

def parse_sets(items: Optional[List[str]]) -> Dict[str, int]:
    """`["N=10", "K=2"]` -> `{"N": 10, "K": 2}`."""
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise ConfigError(f"--set expects NAME=INT, got {item!r}")
        try:
            out[name.strip()] = int(value)
        except ValueError:
            raise ConfigError(f"--set {name.strip()}: {value!r} is not an integer") from None
    return out


def parse_sweep(text: str) -> Tuple[str, List[int]]:
    """`"N=10,100,1000"` -> `("N", [10, 100, 1000])`."""
    name, sep, values = text.partition("=")
    if not sep:
        raise ConfigError(f"--sweep expects NAME=V1,V2,..., got {text!r}")
    try:
        return name.strip(), [int(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--sweep {text!r}: values must be integers") from None


def load_checked(path: str) -> CheckedProgram:
    return validate(parse_file(path))


def load_model_data(checked: CheckedProgram, path: Optional[str]) -> Optional[pd.DataFrame]:
    if path is None:
        if checked.program.params:
            raise DataError(f"{checked.program.name} takes parameters {', '.join(checked.program.params)}; pass --data")
        return None
    return load_data(path, checked.program.params)


def report_error(e: BaseException) -> None:
    if isinstance(e, ValidationFailed):
        for err in e.errors:
            print(f"ValidationError: {err}", file=sys.stderr)
        return
    print(f"{type(e).__name__}: {e}", file=sys.stderr)


# ============================================================
# COMMANDS
# ============================================================

def cmd_check(args) -> int:
    program = parse_file(args.model)
    _, errors, flags = collect_errors(program)
    for err in errors:
        print(f"ValidationError: {err}", file=sys.stderr)
    for sid, msgs in sorted(flags.items()):
        for msg in msgs:
            print(f"warning: stmt {sid}: {msg} (the runtime will sample its inputs)", file=sys.stderr)
    if errors:
        return EXIT_FAIL
    print(f"✓ {args.model}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    checked = load_checked(args.model)
    division = analyze_division(checked)
    memory = analyze_memory(checked, MemConfig(m_max=args.m_max, k_max=args.k_max))

    if args.json:
        doc = {"exact": [v.to_dict() for v in division.verdicts], "memory": memory.to_dict()}
        print(to_json(doc, indent=2))
    else:
        for verdict in division.verdicts:
            print(verdict)
        print(f"memory: {memory}")

    ok = division.all_verified and memory.verdict == "Bounded"
    return EXIT_FAIL if args.strict and not ok else EXIT_OK


def run_config(args) -> RunConfig:
    return RunConfig.from_env(
        particles=args.particles,
        seed=args.seed,
        resample_threshold=args.resample_threshold,
        engine=Engine(args.engine),
        consts=parse_sets(args.set),
        workers=args.workers,
    )


def cmd_infer(args) -> int:
    checked = load_checked(args.model)
    data = load_model_data(checked, args.data)
    result = run(checked, data, run_config(args))

    if args.json:
        print(result.to_json(indent=2))
        return EXIT_OK
    mean, variance = result.summary()
    sampled = sorted({(name, sid) for name, sid, _ in result.diagnostics.sampled_vars}, key=lambda s: s[1])
    print(f"posterior mean:     {mean!r}")
    print(f"posterior variance: {variance!r}")
    print(f"log evidence:       {result.log_evidence!r}")
    print(f"peak live nodes:    {result.diagnostics.peak_live}")
    print(f"sampled variables:  {', '.join(f'{n} (stmt {s})' for n, s in sampled) or 'none'}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    checked = load_checked(args.model)
    data = load_model_data(checked, args.data)
    consts = parse_sets(args.set)
    oracle = oracle_posterior(checked, data, consts=consts or None)

    if args.compare is None:
        if args.json:
            print(oracle.to_json(indent=2))
        else:
            mean, variance = oracle.summary()
            print(f"components:         {len(oracle.components)}")
            print(f"posterior mean:     {mean!r}")
            print(f"posterior variance: {variance!r}")
            print(f"log evidence:       {oracle.log_evidence!r}")
        return EXIT_OK

    inferred = json.loads(Path(args.compare).read_text(encoding="utf-8"))
    errors = compare(oracle, inferred)
    print(to_json(errors, indent=2))
    within = all(err <= args.tol for err in errors.values())
    if not within:
        logger.error("Inference is outside tolerance %g of the oracle", args.tol)
    return EXIT_OK if within else EXIT_FAIL


# ── bench ───────────────────────────────────────────────────────

@retry(
    stop=stop_after_attempt(3),
    wait=wait_fixed(1),
    retry=retry_if_exception_type(OSError),
    before_sleep=before_sleep_log(logger, logging.INFO),
    reraise=True,
)
def write_report(df: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format="%.17g")


def bench_data(checked: CheckedProgram, path: Path, seed: int, consts: Dict[str, int]):
    """The model's data file when it is long enough, otherwise one synthetic draw of the model."""
    program = checked.program.with_consts(consts)
    if path.exists():
        df = load_data(path, program.params)
        if len(df) >= required_rows(program):
            return df
        logger.info("%s has %d rows, need %d: using synthetic data", path, len(df), required_rows(program))
    return synthesize(checked, seed=seed, consts=consts)


def cmd_bench(args) -> int:
    models_dir = Path(args.models)
    data_dir = Path(args.data_dir) if args.data_dir else models_dir.parent / "data"
    engines = [Engine(e.strip()) for e in args.engines.split(",") if e.strip()]
    const_name, sweep = parse_sweep(args.sweep)
    if not models_dir.is_dir():
        raise FileNotFoundError(f"models directory not found: {models_dir}")

    rows, failures = [], 0
    for path in sorted(models_dir.glob("*.hppl")):
        try:
            checked = load_checked(str(path))
        except SEMANTIC_ERRORS as e:
            print(f"✗ {path.name}: {type(e).__name__}: {e}")
            failures += 1
            continue
        print(f"\n{path.stem}")
        for engine in engines:
            for n in sweep:
                for seed in range(args.seeds):
                    consts = {const_name: n}
                    cfg = RunConfig.from_env(particles=args.particles, seed=seed, engine=engine, consts=consts)
                    try:
                        data = bench_data(checked, data_dir / f"{path.stem}.csv", seed, consts)
                        started = time.perf_counter()
                        result = run(checked, data, cfg)
                        wall_ms = (time.perf_counter() - started) * 1000.0
                    except HybridError as e:
                        print(f"  ✗ {engine.value} {const_name}={n} seed={seed}: {type(e).__name__}: {e}")
                        failures += 1
                        continue
                    mean, variance = result.summary()
                    rows.append({
                        "model": path.stem,
                        "engine": engine.value,
                        "N": n,
                        "particles": args.particles,
                        "seed": seed,
                        "peak_live": result.diagnostics.peak_live,
                        "wall_ms": wall_ms,
                        "posterior_mean": mean,
                        "posterior_var": variance,
                        "log_evidence": result.log_evidence,
                    })
                    print(f"  ✓ {engine.value} {const_name}={n} seed={seed}: peak_live={result.diagnostics.peak_live}")

    df = process_table(pd.DataFrame(rows, columns=list(SCHEMAS["bench_report"])), "bench_report")
    df = df.sort_values(["model", "engine", "N", "seed"]).reset_index(drop=True)
    write_report(df, Path(args.out))
    print(f"\n✓ {len(df)} rows -> {args.out}")
    if failures:
        print(f"✗ {failures} run(s) failed")
    return EXIT_FAIL if failures else EXIT_OK


# ============================================================
# ENTRY POINT
# ============================================================

def build_parser() -> argparse.ArgumentParser:
    defaults = get_config()
    parser = argparse.ArgumentParser(prog="hybrid-infer", description="Semi-symbolic inference for .hppl models")
    parser.add_argument("--log-level", default=defaults["log_level"], help="logging level (default from HYBRID_INFER_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate a model")
    p.add_argument("model")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("analyze", help="certify exact annotations and bounded memory")
    p.add_argument("model")
    p.add_argument("--strict", action="store_true", help="exit 1 unless every verdict is Verified/Bounded")
    p.add_argument("--m-max", type=int, default=M_MAX)
    p.add_argument("--k-max", type=int, default=K_MAX)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("infer", help="run particle inference")
    p.add_argument("model")
    p.add_argument("--data")
    p.add_argument("--engine", choices=[Engine.SSI.value, Engine.DS.value], default=Engine.SSI.value)
    p.add_argument("--particles", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--resample-threshold", type=float)
    p.add_argument("--set", action="append", metavar="NAME=INT", help="override a program constant")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("oracle", help="exact posterior by enumerating Bernoulli outcomes")
    p.add_argument("model")
    p.add_argument("--data")
    p.add_argument("--set", action="append", metavar="NAME=INT")
    p.add_argument("--compare", metavar="INFER_JSON", help="inference JSON to check against the oracle")
    p.add_argument("--tol", type=float, default=0.05)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="sweep models x engines x N and write a CSV report")
    p.add_argument("--models", default="corpus/models")
    p.add_argument("--data-dir", help="directory of <model>.csv files (default: ../data next to --models)")
    p.add_argument("--engines", default="ssi,ds")
    p.add_argument("--sweep", default="N=10,100,1000")
    p.add_argument("--particles", type=int, default=100)
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        parser = build_parser()
    except ConfigError as e:
        report_error(e)
        return EXIT_ENV
    args = parser.parse_args(argv)
    level = logging.getLevelName(args.log_level.upper())
    if not isinstance(level, int):
        report_error(ConfigError(f"unknown log level {args.log_level!r}"))
        return EXIT_ENV
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except SEMANTIC_ERRORS as e:
        report_error(e)
        return EXIT_FAIL
    except ENVIRONMENT_ERRORS as e:
        report_error(e)
        return EXIT_ENV
    except HybridError as e:
        report_error(e)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
