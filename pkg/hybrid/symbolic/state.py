# hybrid/symbolic/state.py
"""
The symbolic state: a DAG of random-variable nodes whose Gaussian means are
affine in their parents. Supports conjugate swaps, hoisting, conditioning on
values (realization) and marginal extraction.

Operations mutate the state in place; `copy()` is cheap (distributions and
affine expressions are immutable).
"""
import heapq
import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

import numpy as np
from scipy.stats import norm

from ..errors import DegenerateVariance, DomainError, NotConjugate, NotRoot, UnknownParent
from ..lang.ast import Annotation
from .affine import AffineExpr, NodeId
from .dist import (
    BernoulliParams, Blocked, GaussianParams, Marginal, NeedsApprox, SymBernoulli, SymDelta, SymDist,
    SymGaussian, dist_parents,
)

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-300


@dataclass
class Node:
    id: NodeId
    dist: SymDist
    ann: Annotation = Annotation.NONE
    origin: Tuple[int, int] = (0, 0)  # (statement id, iteration)
    name: str = ""

    @property
    def parents(self) -> Tuple[NodeId, ...]:
        return dist_parents(self.dist)


def _check_variance(variance: float, where: str) -> float:
    if not variance > VARIANCE_FLOOR or not math.isfinite(variance):
        raise DegenerateVariance(f"variance {variance!r} {where}")
    return float(variance)


class SymbolicState:
    """Graph of symbolic random variables."""

    def __init__(self):
        self.nodes: Dict[NodeId, Node] = {}
        self._next_id = 0

    def copy(self) -> "SymbolicState":
        other = SymbolicState()
        other.nodes = {nid: replace(node) for nid, node in self.nodes.items()}
        other._next_id = self._next_id
        return other

    def __contains__(self, nid: NodeId) -> bool:
        return nid in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, nid: NodeId) -> Node:
        try:
            return self.nodes[nid]
        except KeyError:
            raise UnknownParent(f"node n{nid} does not exist") from None

    # ============================================================
    # STRUCTURE
    # ============================================================

    def parents(self, nid: NodeId) -> Tuple[NodeId, ...]:
        return self.node(nid).parents

    def children(self, nid: NodeId) -> List[NodeId]:
        return [n.id for n in self.nodes.values() if nid in n.parents]

    def is_root(self, nid: NodeId) -> bool:
        return not self.parents(nid)

    def topological_order(self) -> List[NodeId]:
        """Parents before children; ties broken by smallest id. Raises ValueError on a cycle."""
        indegree = {nid: 0 for nid in self.nodes}
        kids: Dict[NodeId, List[NodeId]] = {nid: [] for nid in self.nodes}
        for node in self.nodes.values():
            for p in node.parents:
                indegree[node.id] += 1
                kids[p].append(node.id)
        ready = [nid for nid, d in indegree.items() if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            nid = heapq.heappop(ready)
            order.append(nid)
            for k in kids[nid]:
                indegree[k] -= 1
                if indegree[k] == 0:
                    heapq.heappush(ready, k)
        if len(order) != len(self.nodes):
            raise ValueError("symbolic state contains a cycle")
        return order

    def check_acyclic(self) -> bool:
        self.topological_order()
        return True

    def ancestors(self, nid: NodeId) -> Set[NodeId]:
        seen: Set[NodeId] = set()
        stack = list(self.parents(nid))
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(self.nodes[n].parents)
        return seen

    def descendants(self, nid: NodeId) -> Set[NodeId]:
        seen: Set[NodeId] = set()
        stack = [nid]
        while stack:
            cur = stack.pop()
            for k in self.children(cur):
                if k not in seen:
                    seen.add(k)
                    stack.append(k)
        return seen

    def reachable(self, roots: Iterable[NodeId]) -> Set[NodeId]:
        """Nodes reachable from `roots` through parent edges (roots included)."""
        seen: Set[NodeId] = set()
        stack = [r for r in roots if r in self.nodes]
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(self.nodes[n].parents)
        return seen

    # ============================================================
    # OPERATIONS
    # ============================================================

    def assume(self, dist: SymDist, ann: Annotation = Annotation.NONE,
               origin: Tuple[int, int] = (0, 0), name: str = "") -> NodeId:
        """Add a node; existing nodes are unchanged. Returns its id."""
        if isinstance(dist, SymGaussian):
            mean = dist.mean
            for p in mean.parents:
                parent = self.node(p)
                if isinstance(parent.dist, SymDelta):
                    mean = mean.substitute(p, parent.dist.value)
            dist = SymGaussian(mean, _check_variance(dist.variance, "in assume"))
        elif isinstance(dist, SymBernoulli):
            if not 0.0 <= dist.prob <= 1.0:
                raise DomainError(f"bernoulli probability {dist.prob} outside [0, 1]")
        elif not isinstance(dist, SymDelta):
            raise TypeError(f"not a symbolic distribution: {dist!r}")
        nid = self._next_id
        self._next_id += 1
        self.nodes[nid] = Node(nid, dist, ann, origin, name)
        return nid

    def swap(self, child: NodeId, parent: NodeId) -> None:
        """
        Conjugate exchange: make `child` marginal w.r.t. `parent` and
        `parent` conditional on `child`. The joint is preserved.

        The parent is normally a root; a Gaussian parent with affine parents
        of its own is accepted when the exchange keeps the graph acyclic.
        """
        c, p = self.node(child), self.node(parent)
        if not isinstance(p.dist, SymGaussian):
            raise NotConjugate(f"parent n{parent} is not Gaussian")
        if not isinstance(c.dist, SymGaussian):
            raise NotConjugate(f"child n{child} is not Gaussian")
        a = c.dist.mean.coef(parent)
        if a == 0.0:
            raise NotConjugate(f"n{child} does not depend on n{parent}")
        rest = c.dist.mean.without(parent)
        below = self.descendants(parent)
        if any(n in below for n in rest.parents if n != child):
            raise NotConjugate(f"swapping n{child} with n{parent} would create a cycle")

        mu0, var0, v = p.dist.mean, p.dist.variance, c.dist.variance
        child_var = _check_variance(a * a * var0 + v, f"after swapping n{child} with n{parent}")
        gain = a * var0 / child_var
        child_mean = mu0.scale(a) + rest
        parent_mean = mu0.scale(1.0 - gain * a) + AffineExpr.var(child, gain) + rest.scale(-gain)
        parent_var = _check_variance(var0 * v / child_var, f"after swapping n{child} with n{parent}")

        c.dist = SymGaussian(child_mean, child_var)
        p.dist = SymGaussian(parent_mean, parent_var)

    def blockers(self, target: NodeId) -> List[NodeId]:
        """Non-Gaussian ancestors of `target`, in topological order."""
        node = self.node(target)
        if not isinstance(node.dist, SymGaussian):
            return []
        ancestors = self.ancestors(target)
        bad = {n for n in ancestors if not isinstance(self.nodes[n].dist, SymGaussian)}
        if not bad:
            return []
        return [n for n in self.topological_order() if n in bad]

    def hoist(self, target: NodeId) -> Optional[Blocked]:
        """
        Make `target` a root using conjugate swaps only.

        Returns None on success, or Blocked naming the first non-Gaussian
        ancestor (topological order, ties by id). A blocked hoist leaves the
        state untouched.
        """
        blocked = self.blockers(target)
        if blocked:
            return Blocked(blocked[0])
        while self.parents(target):
            position = {nid: i for i, nid in enumerate(self.topological_order())}
            latest = max(self.parents(target), key=lambda n: (position[n], n))
            self.swap(target, latest)
        return None

    def realize(self, target: NodeId, value: float) -> None:
        """Fix a root to `value` and fold it into every expression that mentions it."""
        node = self.node(target)
        if node.parents:
            raise NotRoot(f"n{target} has parents {node.parents}")
        value = float(value)
        node.dist = SymDelta(value)
        for other in self.nodes.values():
            if isinstance(other.dist, SymGaussian) and other.dist.mean.references(target):
                other.dist = SymGaussian(other.dist.mean.substitute(target, value), other.dist.variance)

    def score(self, target: NodeId, value: float) -> float:
        """Log-density of `value` under the root marginal of `target`."""
        dist = self.node(target).dist
        if dist_parents(dist):
            raise NotRoot(f"n{target} is not a root")
        if isinstance(dist, SymGaussian):
            return float(norm.logpdf(value, loc=dist.mean.intercept, scale=math.sqrt(dist.variance)))
        if isinstance(dist, SymBernoulli):
            if value not in (0.0, 1.0):
                raise DomainError(f"bernoulli observation {value!r} not in {{0, 1}}")
            p = dist.prob if value == 1.0 else 1.0 - dist.prob
            return math.log(p) if p > 0.0 else -math.inf
        return 0.0 if value == dist.value else -math.inf

    def sample_root(self, target: NodeId, rng: np.random.Generator) -> float:
        dist = self.node(target).dist
        if dist_parents(dist):
            raise NotRoot(f"n{target} is not a root")
        if isinstance(dist, SymGaussian):
            return float(rng.normal(dist.mean.intercept, math.sqrt(dist.variance)))
        if isinstance(dist, SymBernoulli):
            return 1.0 if rng.random() < dist.prob else 0.0
        return dist.value

    def marginal_of(self, target: NodeId) -> Marginal:
        """Marginal of `target`, computed on a copy; this state is left unchanged."""
        scratch = self.copy()
        blocked = scratch.hoist(target)
        if blocked is not None:
            return NeedsApprox(blocked.by)
        dist = scratch.nodes[target].dist
        if isinstance(dist, SymGaussian):
            return GaussianParams(dist.mean.intercept, dist.variance)
        if isinstance(dist, SymBernoulli):
            return BernoulliParams(dist.prob)
        return GaussianParams(dist.value, 0.0)

    # ============================================================
    # MEMORY
    # ============================================================

    def live_count(self, roots: Iterable[NodeId]) -> int:
        """Non-Delta nodes reachable from `roots` through parent edges."""
        return sum(1 for n in self.reachable(roots) if not isinstance(self.nodes[n].dist, SymDelta))

    def prune(self, roots: Iterable[NodeId]) -> int:
        """Drop every node that is not an ancestor of (or one of) `roots`; returns how many."""
        keep = self.reachable(roots)
        dropped = [nid for nid in self.nodes if nid not in keep]
        for nid in dropped:
            del self.nodes[nid]
        return len(dropped)

    # ============================================================
    # DEBUG / TEST SUPPORT
    # ============================================================

    def log_joint(self, values: Mapping[NodeId, float]) -> float:
        """Joint log-density of a full assignment of the non-Delta nodes."""
        total = 0.0
        for node in self.nodes.values():
            dist = node.dist
            if isinstance(dist, SymGaussian):
                mean = dist.mean.intercept + sum(
                    c * (values[n] if not isinstance(self.nodes[n].dist, SymDelta) else self.nodes[n].dist.value)
                    for n, c in dist.mean.terms)
                total += float(norm.logpdf(values[node.id], loc=mean, scale=math.sqrt(dist.variance)))
            elif isinstance(dist, SymBernoulli):
                p = dist.prob if values[node.id] == 1.0 else 1.0 - dist.prob
                total += math.log(p) if p > 0 else -math.inf
        return total

    def dump(self) -> str:
        """Deterministic text graph: topological order, 17 significant digits."""
        lines = []
        for nid in self.topological_order():
            node = self.nodes[nid]
            dist = node.dist
            if isinstance(dist, SymGaussian):
                body = f"gaussian(mean={dist.mean}, var={dist.variance:.17g})"
            elif isinstance(dist, SymBernoulli):
                body = f"bernoulli(p={dist.prob:.17g})"
            else:
                body = f"delta({dist.value:.17g})"
            label = f" [{node.name}]" if node.name else ""
            ann = "" if node.ann is Annotation.NONE else f" {node.ann.value}"
            lines.append(f"n{nid}{label}{ann} = {body}")
        return "\n".join(lines)
