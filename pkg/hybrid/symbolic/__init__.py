# hybrid/symbolic
# Exact-inference layer: affine expressions, symbolic distributions and the node graph.

from .affine import AffineExpr, NodeId
from .dist import (
    BernoulliParams, Blocked, GaussianParams, Marginal, NeedsApprox, SymBernoulli, SymDelta, SymDist,
    SymGaussian, dist_parents,
)
from .state import VARIANCE_FLOOR, Node, SymbolicState


def dump(state: SymbolicState) -> str:
    return state.dump()


__all__ = [
    "AffineExpr", "NodeId",
    "BernoulliParams", "Blocked", "GaussianParams", "Marginal", "NeedsApprox",
    "SymBernoulli", "SymDelta", "SymDist", "SymGaussian", "dist_parents",
    "VARIANCE_FLOOR", "Node", "SymbolicState", "dump",
]
