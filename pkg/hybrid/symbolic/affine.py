# hybrid/symbolic/affine.py
"""
Affine expressions over node ids: intercept + sum(coef * node).
Canonical form: no zero coefficients, one term per node.
"""
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

NodeId = int


def _canonical(terms: Mapping[NodeId, float]) -> Tuple[Tuple[NodeId, float], ...]:
    return tuple(sorted((n, float(c)) for n, c in terms.items() if c != 0.0))


@dataclass(frozen=True)
class AffineExpr:
    intercept: float = 0.0
    terms: Tuple[Tuple[NodeId, float], ...] = field(default=())

    @classmethod
    def const(cls, value: float) -> "AffineExpr":
        return cls(float(value), ())

    @classmethod
    def var(cls, node: NodeId, coef: float = 1.0) -> "AffineExpr":
        return cls(0.0, _canonical({node: coef}))

    @classmethod
    def build(cls, intercept: float, terms: Mapping[NodeId, float]) -> "AffineExpr":
        return cls(float(intercept), _canonical(terms))

    # ── queries ──────────────────────────────────────────────────
    @property
    def term_map(self) -> Dict[NodeId, float]:
        return dict(self.terms)

    @property
    def parents(self) -> Tuple[NodeId, ...]:
        return tuple(n for n, _ in self.terms)

    def is_constant(self) -> bool:
        return not self.terms

    def coef(self, node: NodeId) -> float:
        return self.term_map.get(node, 0.0)

    def references(self, node: NodeId) -> bool:
        return any(n == node for n, _ in self.terms)

    # ── arithmetic ───────────────────────────────────────────────
    def __add__(self, other: "AffineExpr") -> "AffineExpr":
        merged = self.term_map
        for n, c in other.terms:
            merged[n] = merged.get(n, 0.0) + c
        return AffineExpr.build(self.intercept + other.intercept, merged)

    def __sub__(self, other: "AffineExpr") -> "AffineExpr":
        return self + other.scale(-1.0)

    def scale(self, k: float) -> "AffineExpr":
        return AffineExpr.build(self.intercept * k, {n: c * k for n, c in self.terms})

    def without(self, node: NodeId) -> "AffineExpr":
        return AffineExpr.build(self.intercept, {n: c for n, c in self.terms if n != node})

    def substitute(self, node: NodeId, value: float) -> "AffineExpr":
        """Fold `node = value` into the intercept."""
        c = self.coef(node)
        if c == 0.0:
            return self
        return AffineExpr.build(self.intercept + c * value, {n: k for n, k in self.terms if n != node})

    def substitute_expr(self, node: NodeId, expr: "AffineExpr") -> "AffineExpr":
        """Replace `node` by an affine expression."""
        c = self.coef(node)
        if c == 0.0:
            return self
        return self.without(node) + expr.scale(c)

    def evaluate(self, values: Mapping[NodeId, float]) -> float:
        return self.intercept + sum(c * values[n] for n, c in self.terms)

    def __str__(self) -> str:
        parts = [f"{self.intercept:.17g}"]
        parts += [f"{c:.17g}*n{n}" for n, c in self.terms]
        return " + ".join(parts)
