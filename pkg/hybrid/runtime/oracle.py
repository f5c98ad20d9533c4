# hybrid/runtime/oracle.py
"""
Ground-truth posterior by enumeration: every assignment of the Bernoulli
draws is replayed through the exact engine, and the resulting closed-form
posteriors are mixed by their exact evidence.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from ..errors import AllParticlesDead, TooManyDiscrete
from ..lang.ast import bernoulli_count
from ..lang.validate import CheckedProgram
from ..processing import to_json
from .config import Engine
from .engine import Interpreter, NeedBit, ScriptedChooser
from .infer import PosteriorValue, mixture_moments, posterior_row, prepare_data

logger = logging.getLogger(__name__)

MAX_DISCRETE = 20


@dataclass
class OracleResult:
    components: List[Tuple[float, PosteriorValue, Tuple[int, ...]]]
    log_evidence: float

    @property
    def posterior(self) -> List[Tuple[float, PosteriorValue]]:
        return [(w, v) for w, v, _ in self.components]

    def summary(self) -> Tuple[float, float]:
        return mixture_moments(self.posterior)

    def to_dict(self) -> dict:
        mean, variance = self.summary()
        return {
            "posterior": [dict(posterior_row(w, v), bits=list(bits)) for w, v, bits in self.components],
            "summary": {"mean": mean, "variance": variance},
            "log_evidence": self.log_evidence,
        }

    def to_json(self, indent: int = None) -> str:
        return to_json(self.to_dict(), indent=indent)


def oracle_posterior(checked: CheckedProgram, data, n_max: int = MAX_DISCRETE,
                     consts: Optional[Dict[str, int]] = None) -> OracleResult:
    """
    Enumerate all Bernoulli outcomes (depth first, 0 before 1).

    Raises:
        TooManyDiscrete: more than `n_max` Bernoulli draws on some path
        NonEnumerable: a continuous variable would have to be sampled
    """
    program = checked.program.with_consts(consts) if consts else checked.program
    draws = bernoulli_count(program)
    if draws > n_max:
        raise TooManyDiscrete(f"{draws} Bernoulli draws exceed the enumeration limit of {n_max}")
    interp = Interpreter(checked, prepare_data(program, data), Engine.EXACT, consts)

    found = []
    stack = [()]
    while stack:
        bits = stack.pop()
        chooser = ScriptedChooser(bits)
        try:
            p = interp.run_to_end(interp.start(), None, chooser)
        except NeedBit:
            if len(bits) >= n_max:
                raise TooManyDiscrete(f"more than {n_max} Bernoulli draws") from None
            stack.append(bits + (1,))
            stack.append(bits + (0,))
            continue
        if p.alive:
            found.append((p.logw, p.result, bits))

    if not found:
        raise AllParticlesDead("every assignment has zero probability")
    logws = np.array([lw for lw, _, _ in found])
    log_evidence = float(logsumexp(logws))
    weights = np.exp(logws - log_evidence)
    components = [(float(w), value, bits) for w, (_, value, bits) in zip(weights, found)]
    logger.info("Enumerated %d assignment(s) of %s, log_evidence=%.6g", len(found), program.name, log_evidence)
    return OracleResult(components, log_evidence)


def compare(oracle: OracleResult, inferred: dict) -> Dict[str, float]:
    """Absolute errors of an inference JSON document against the oracle."""
    mean, _ = oracle.summary()
    other = inferred.get("summary", {}).get("mean")
    if other is None:
        other, _ = _row_moments(inferred["posterior"])
    return {
        "mean_error": abs(float(other) - mean),
        "log_evidence_error": abs(float(inferred["log_evidence"]) - oracle.log_evidence)
        if math.isfinite(oracle.log_evidence) else math.inf,
    }


def _row_moments(rows) -> Tuple[float, float]:
    w = np.array([r["weight"] for r in rows], dtype=float)
    m = np.array([r["mean"] for r in rows], dtype=float)
    v = np.array([r["variance"] for r in rows], dtype=float)
    mean = float(np.dot(w, m))
    return mean, float(np.dot(w, v + m * m)) - mean * mean
