# hybrid/runtime/infer.py
"""
Particle driver: steps every particle to the next observe barrier, resamples
when the effective sample size drops, and collects the posterior of the
result variable with diagnostics.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import zip_longest
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import AllParticlesDead, DataError, ExactViolation
from ..lang.ast import Datum, For, Observe, Program, Sample, dist_exprs, loop_count, walk
from ..lang.validate import CheckedProgram
from ..processing import data_columns, process_table, to_json
from ..schemas import SCHEMAS
from ..symbolic import BernoulliParams, GaussianParams
from .config import RunConfig
from .engine import Interpreter
from .particles import Particle, ess, log_mean_weight, normalized_weights, particle_stream, resample, resample_stream

logger = logging.getLogger(__name__)

PosteriorValue = Union[GaussianParams, BernoulliParams, float]
SampledVar = Tuple[str, int, int]


# ============================================================
# RESULT
# ============================================================

@dataclass
class Diagnostics:
    sampled_vars: List[SampledVar] = field(default_factory=list)
    peak_live: int = 0
    live_trace: List[int] = field(default_factory=list)
    resamples: int = 0


@dataclass
class InferenceResult:
    posterior: List[Tuple[float, PosteriorValue]]
    log_evidence: float
    diagnostics: Diagnostics

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.posterior])

    @property
    def is_mixture(self) -> bool:
        """True when every entry is a closed-form distribution rather than a sampled value."""
        return all(not isinstance(v, float) for _, v in self.posterior)

    def summary(self) -> Tuple[float, float]:
        """Posterior (mean, variance) of the result, by the law of total variance."""
        return mixture_moments(self.posterior)

    def posterior_frame(self) -> pd.DataFrame:
        rows = [posterior_row(w, v) for w, v in self.posterior]
        return process_table(pd.DataFrame(rows, columns=list(SCHEMAS["posterior"])), "posterior")

    def to_dict(self) -> dict:
        mean, variance = self.summary()
        return {
            "posterior": [posterior_row(w, v) for w, v in self.posterior],
            "summary": {"mean": mean, "variance": variance},
            "log_evidence": self.log_evidence,
            "diagnostics": {
                "sampled_vars": [list(s) for s in self.diagnostics.sampled_vars],
                "peak_live": self.diagnostics.peak_live,
                "live_trace": list(self.diagnostics.live_trace),
            },
        }

    def to_json(self, indent: int = None) -> str:
        return to_json(self.to_dict(), indent=indent)


def posterior_row(weight: float, value: PosteriorValue) -> dict:
    if isinstance(value, GaussianParams):
        return {"weight": weight, "kind": "gaussian", "mean": value.mean, "variance": value.variance}
    if isinstance(value, BernoulliParams):
        return {"weight": weight, "kind": "bernoulli", "mean": value.mean, "variance": value.variance}
    return {"weight": weight, "kind": "value", "mean": float(value), "variance": 0.0}


def mixture_moments(entries: Sequence[Tuple[float, PosteriorValue]]) -> Tuple[float, float]:
    if not entries:
        return math.nan, math.nan
    w = np.array([e[0] for e in entries], dtype=float)
    means = np.array([posterior_row(1.0, v)["mean"] for _, v in entries], dtype=float)
    variances = np.array([posterior_row(1.0, v)["variance"] for _, v in entries], dtype=float)
    mean = float(np.dot(w, means))
    second = float(np.dot(w, variances + means * means))
    return mean, max(second - mean * mean, 0.0)


# ============================================================
# DATA
# ============================================================

def required_rows(program: Program) -> int:
    """Rows every data column must hold: the largest upper bound of a loop whose index is used as a datum index."""
    indexed = set()
    for stmt in walk(program.body):
        exprs = []
        if isinstance(stmt, Sample):
            exprs = list(dist_exprs(stmt.dist))
        elif isinstance(stmt, Observe):
            exprs = [stmt.datum]
        for e in exprs:
            indexed.update(_datum_indices(e))
    rows = 0
    for stmt in walk(program.body):
        if isinstance(stmt, For) and stmt.index in indexed:
            hi = program.resolve_int(stmt.hi)
            if hi is not None:
                rows = max(rows, hi)
    return rows


def _datum_indices(expr):
    if isinstance(expr, Datum):
        yield expr.index
    for child in (getattr(expr, "left", None), getattr(expr, "right", None)):
        if child is not None:
            yield from _datum_indices(child)


def prepare_data(program: Program, data: Union[pd.DataFrame, Mapping[str, Sequence[float]], None]) -> Dict[str, np.ndarray]:
    rows = required_rows(program)
    if data is None:
        data = {}
    if isinstance(data, pd.DataFrame):
        return data_columns(data, program.params, rows)
    out = {}
    for name in program.params:
        if name not in data:
            raise DataError(f"no data for parameter '{name}'")
        column = np.asarray(data[name], dtype=float)
        if len(column) < rows:
            raise DataError(f"parameter '{name}' has {len(column)} rows, need at least {rows}")
        out[name] = column
    return out


# ============================================================
# DRIVER
# ============================================================

def run(checked: CheckedProgram, data, cfg: RunConfig) -> InferenceResult:
    """
    Run inference with `cfg.particles` particles.

    Args:
        checked: validated program
        data: DataFrame or mapping of parameter name -> values
        cfg: run configuration (engine, seed, threshold, constant overrides)

    Returns:
        InferenceResult; identical inputs give a bit-identical result

    Raises:
        ExactViolation: an exact-annotated variable would be sampled
        DataError: missing or short data
        AllParticlesDead: every particle reached zero weight
    """
    overrides = cfg.const_overrides()
    program = checked.program.with_consts(overrides) if overrides else checked.program
    columns = prepare_data(program, data)
    interp = Interpreter(checked, columns, cfg.engine, overrides)

    n = cfg.particles
    streams = [particle_stream(cfg.seed, i) for i in range(n)]
    resampler = resample_stream(cfg.seed)
    particles = [interp.start() for _ in range(n)]
    sampled = set()
    log_evidence = 0.0
    resamples = 0

    logger.info("Running %s with %d particles (engine=%s, seed=%d)",
                program.name, n, cfg.engine.value, cfg.seed)
    pool = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    try:
        while True:
            active = [i for i, p in enumerate(particles) if not p.done]
            if not active:
                break
            _advance(interp, particles, streams, active, pool, cfg.workers)
            for p in particles:
                sampled.update(p.sampled)
                p.sampled.clear()
            logw = [p.logw for p in particles]
            if not all(p.done for p in particles) and ess(logw) < cfg.resample_threshold * n:
                log_evidence += log_mean_weight(logw)
                particles = resample(particles, resampler)
                resamples += 1
    except ExactViolation as e:
        logger.error("ExactViolation: %s", e)
        raise
    finally:
        if pool is not None:
            pool.shutdown()

    logw = [p.logw for p in particles]
    log_evidence += log_mean_weight(logw)
    if log_evidence == -math.inf:
        raise AllParticlesDead("every particle has zero weight at the end of the program")

    weights = normalized_weights(logw)
    posterior = [(float(w), p.result) for w, p in zip(weights, particles) if p.alive]
    trace = [max(column) for column in zip_longest(*(p.live_trace for p in particles), fillvalue=0)]
    peak = max(trace) if trace else max(p.state.live_count(p.roots()) for p in particles)
    diagnostics = Diagnostics(
        sampled_vars=sorted(sampled, key=lambda s: (s[2], s[1], s[0])),
        peak_live=int(peak),
        live_trace=[int(x) for x in trace],
        resamples=resamples,
    )
    logger.info("Finished %s: log_evidence=%.6g, %d resample(s), peak_live=%d over %d loop iteration(s)",
                program.name, log_evidence, resamples, diagnostics.peak_live, loop_count(program))
    return InferenceResult(posterior, float(log_evidence), diagnostics)


def _advance(interp: Interpreter, particles: List[Particle], streams, active: List[int], pool, workers: int) -> None:
    if pool is None:
        for i in active:
            interp.advance(particles[i], streams[i])
        return

    def step_chunk(chunk):
        for i in chunk:
            interp.advance(particles[i], streams[i])

    chunks = [list(c) for c in np.array_split(np.array(active), workers) if len(c)]
    # list() re-raises the first failing chunk's exception, in chunk order.
    list(pool.map(step_chunk, chunks))
