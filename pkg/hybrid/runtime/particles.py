# hybrid/runtime/particles.py
"""
The approximate layer: particles, weights, effective sample size,
systematic resampling and counter-based random streams.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from ..errors import AllParticlesDead
from ..symbolic import NodeId, SymbolicState

logger = logging.getLogger(__name__)

# Program variable -> unrealized node, or the concrete value once realized.
EnvValue = Union[NodeId, float]


@dataclass(frozen=True)
class Frame:
    """One level of the resumable program counter."""
    body: tuple
    pc: int = 0
    index: Optional[str] = None      # loop index name, None for a plain block
    iteration: int = 0
    hi: int = 0


@dataclass
class Particle:
    state: SymbolicState
    env: Dict[str, EnvValue]
    indices: Dict[str, int] = field(default_factory=dict)
    frames: Tuple[Frame, ...] = ()
    logw: float = 0.0
    sampled: List[Tuple[str, int, int]] = field(default_factory=list)
    live_trace: List[int] = field(default_factory=list)
    result: object = None

    @property
    def done(self) -> bool:
        return not self.frames

    @property
    def alive(self) -> bool:
        return self.logw > -math.inf

    def copy(self) -> "Particle":
        return Particle(
            state=self.state.copy(),
            env=dict(self.env),
            indices=dict(self.indices),
            frames=self.frames,
            logw=self.logw,
            sampled=list(self.sampled),
            live_trace=list(self.live_trace),
            result=self.result,
        )

    def roots(self) -> List[NodeId]:
        return [v for v in self.env.values() if isinstance(v, int)]


# ============================================================
# WEIGHTS
# ============================================================

def normalized_weights(logw: Sequence[float]) -> np.ndarray:
    logw = np.asarray(logw, dtype=float)
    if not np.isfinite(logw).any():
        raise AllParticlesDead("every particle has zero weight")
    return np.exp(logw - logsumexp(logw))


def ess(logw: Sequence[float]) -> float:
    """Effective sample size 1 / sum(w^2) of the normalized weights; 0 when all are dead."""
    logw = np.asarray(logw, dtype=float)
    if not np.isfinite(logw).any():
        return 0.0
    w = normalized_weights(logw)
    return float(1.0 / np.sum(w * w))


def log_mean_weight(logw: Sequence[float]) -> float:
    logw = np.asarray(logw, dtype=float)
    if not np.isfinite(logw).any():
        return -math.inf
    return float(logsumexp(logw) - math.log(len(logw)))


# ============================================================
# RESAMPLING
# ============================================================

def systematic_indices(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Ancestor indices: one uniform offset, n evenly spaced pointers into the weight CDF."""
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return np.minimum(np.searchsorted(cdf, positions, side="right"), n - 1)


def resample(particles: List[Particle], rng: np.random.Generator) -> List[Particle]:
    """
    Systematic resampling. Particle count is preserved and weights reset to uniform.

    Raises:
        AllParticlesDead: every log-weight is -inf
    """
    weights = normalized_weights([p.logw for p in particles])
    ancestors = systematic_indices(weights, rng)
    used = set()
    out = []
    for a in ancestors:
        a = int(a)
        child = particles[a] if a not in used else particles[a].copy()
        used.add(a)
        out.append(child)
    for p in out:
        p.logw = 0.0
    logger.debug("Resampled %d particles from %d distinct ancestors", len(out), len(used))
    return out


# ============================================================
# RANDOM STREAMS
# ============================================================

def particle_stream(seed: int, slot: int) -> np.random.Generator:
    """Counter-based stream for particle slot `slot`; independent of thread scheduling."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0, slot])))


def resample_stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 1])))
