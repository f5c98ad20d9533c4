# hybrid/symbolic/dist.py
"""
Symbolic distributions held by nodes, and the marginal reports handed back
to the runtime.
"""
from dataclasses import dataclass
from typing import Union

from .affine import AffineExpr, NodeId


@dataclass(frozen=True)
class SymGaussian:
    mean: AffineExpr
    variance: float


@dataclass(frozen=True)
class SymBernoulli:
    prob: float


@dataclass(frozen=True)
class SymDelta:
    value: float


SymDist = Union[SymGaussian, SymBernoulli, SymDelta]


def dist_parents(dist: SymDist):
    if isinstance(dist, SymGaussian):
        return dist.mean.parents
    return ()


# ============================================================
# MARGINAL REPORTS
# ============================================================

@dataclass(frozen=True)
class GaussianParams:
    mean: float
    variance: float


@dataclass(frozen=True)
class BernoulliParams:
    prob: float

    @property
    def mean(self) -> float:
        return self.prob

    @property
    def variance(self) -> float:
        return self.prob * (1.0 - self.prob)


@dataclass(frozen=True)
class Blocked:
    """Hoisting stopped at a parent that cannot be swapped out."""
    by: NodeId


@dataclass(frozen=True)
class NeedsApprox:
    """The marginal needs a sampled value first; `by` is the blocker."""
    by: NodeId


Marginal = Union[GaussianParams, BernoulliParams, NeedsApprox]
