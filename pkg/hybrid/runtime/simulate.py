# hybrid/runtime/simulate.py
"""
Synthetic data: run the program forward by ancestral sampling and record
each observed variable's value as the datum it is compared against.
"""
import logging
from typing import Dict, Optional

import numpy as np
import pandas as pd

from ..errors import ConfigError
from ..lang.ast import BinOp, Bernoulli, Datum, For, Gaussian, If, Num, Observe, Sample, Var
from ..lang.validate import CheckedProgram
from .infer import required_rows

logger = logging.getLogger(__name__)


def synthesize(checked: CheckedProgram, seed: int = 0, consts: Optional[Dict[str, int]] = None) -> pd.DataFrame:
    """
    One forward draw of the model, returned as a data table with one column
    per program parameter. Cells no observation reaches are 0.0.
    """
    program = checked.program.with_consts(consts) if consts else checked.program
    rows = required_rows(program)
    columns = {name: np.zeros(rows) for name in program.params}
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 2])))
    const_map = program.const_map

    def value(expr, env):
        if isinstance(expr, Num):
            return expr.value
        if isinstance(expr, Var):
            if expr.name in env:
                return env[expr.name]
            if const_map.get(expr.name) is None:
                raise ConfigError(f"constant '{expr.name}' has no value")
            return float(const_map[expr.name])
        if isinstance(expr, Datum):
            return float(columns[expr.param][int(env[expr.index]) - 1])
        if isinstance(expr, BinOp):
            left, right = value(expr.left, env), value(expr.right, env)
            return left + right if expr.op == "+" else left - right if expr.op == "-" else left * right
        raise TypeError(f"not an expression: {expr!r}")

    def bound(b):
        if isinstance(b, int):
            return b
        if const_map.get(b) is None:
            raise ConfigError(f"constant '{b}' has no value")
        return const_map[b]

    def execute(stmts, env):
        for stmt in stmts:
            if isinstance(stmt, Sample):
                if isinstance(stmt.dist, Gaussian):
                    sd = np.sqrt(max(value(stmt.dist.variance, env), 0.0))
                    env[stmt.target] = float(rng.normal(value(stmt.dist.mean, env), sd))
                elif isinstance(stmt.dist, Bernoulli):
                    env[stmt.target] = 1.0 if rng.random() < value(stmt.dist.prob, env) else 0.0
            elif isinstance(stmt, Observe):
                i = int(env[stmt.datum.index])
                if 1 <= i <= rows:
                    columns[stmt.datum.param][i - 1] = env[stmt.subject]
            elif isinstance(stmt, If):
                execute(stmt.then_body if env[stmt.cond] != 0.0 else stmt.else_body, env)
            elif isinstance(stmt, For):
                for i in range(bound(stmt.lo), bound(stmt.hi) + 1):
                    env[stmt.index] = float(i)
                    execute(stmt.body, env)
                env.pop(stmt.index, None)

    execute(program.body, {})
    logger.debug("Synthesized %d rows for %s (seed=%d)", rows, program.name, seed)
    return pd.DataFrame(columns, columns=list(program.params))
