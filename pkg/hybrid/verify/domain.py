# hybrid/verify/domain.py
"""
Abstract values for the exact/approximate division analysis.

    BOTTOM  <  LINGAUSS | DISCRETE | REALIZED  <  TOP

Every non-bottom value carries the statement ids its node may come from
(`sites`) and the sites of unrealized Bernoulli nodes that may be among its
ancestors (`bdeps`). Both sets only grow under join.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Mapping


class Kind(Enum):
    BOTTOM = "bottom"
    LINGAUSS = "lingauss"
    DISCRETE = "discrete"
    REALIZED = "realized"
    TOP = "top"


@dataclass(frozen=True)
class AbsVal:
    kind: Kind = Kind.BOTTOM
    sites: FrozenSet[int] = field(default_factory=frozenset)
    bdeps: FrozenSet[int] = field(default_factory=frozenset)

    # ── lattice ──────────────────────────────────────────────────
    def join(self, other: "AbsVal") -> "AbsVal":
        if self.kind is Kind.BOTTOM:
            return other
        if other.kind is Kind.BOTTOM:
            return self
        kind = self.kind if self.kind is other.kind else Kind.TOP
        return AbsVal(kind, self.sites | other.sites, self.bdeps | other.bdeps)

    def le(self, other: "AbsVal") -> bool:
        if self.kind is Kind.BOTTOM:
            return True
        if other.kind is not Kind.TOP and other.kind is not self.kind:
            return False
        return self.sites <= other.sites and self.bdeps <= other.bdeps

    # ── queries ──────────────────────────────────────────────────
    @property
    def maybe_symbolic(self) -> bool:
        return self.kind in (Kind.LINGAUSS, Kind.DISCRETE, Kind.TOP)

    @property
    def maybe_bernoulli(self) -> bool:
        return self.kind in (Kind.DISCRETE, Kind.TOP)

    def as_parent(self) -> FrozenSet[int]:
        """Bernoulli sites a Gaussian child inherits by referencing this value."""
        if not self.maybe_symbolic:
            return frozenset()
        return self.bdeps | (self.sites if self.maybe_bernoulli else frozenset())

    def blockers(self) -> FrozenSet[int]:
        """Sites that hoisting this value may have to sample first."""
        if not self.maybe_symbolic:
            return frozenset()
        return self.bdeps | (self.sites if self.kind is Kind.TOP else frozenset())

    def forced(self) -> FrozenSet[int]:
        """Sites sampled when this value is forced."""
        if not self.maybe_symbolic:
            return frozenset()
        return self.sites | self.blockers()

    def realized(self) -> "AbsVal":
        return self.join(AbsVal(Kind.REALIZED, self.sites, self.bdeps))

    def __str__(self) -> str:
        if self.kind is Kind.BOTTOM:
            return "bottom"
        deps = f" deps={sorted(self.bdeps)}" if self.bdeps else ""
        return f"{self.kind.value}{sorted(self.sites)}{deps}"


BOTTOM = AbsVal()

AbsEnv = Dict[str, AbsVal]


def join_envs(a: Mapping[str, AbsVal], b: Mapping[str, AbsVal]) -> AbsEnv:
    return {k: a.get(k, BOTTOM).join(b.get(k, BOTTOM)) for k in set(a) | set(b)}


def env_le(a: Mapping[str, AbsVal], b: Mapping[str, AbsVal]) -> bool:
    return all(v.le(b.get(k, BOTTOM)) for k, v in a.items())


def lattice_height() -> int:
    return 3


def union_all(sets: Iterable[FrozenSet[int]]) -> FrozenSet[int]:
    out = frozenset()
    for s in sets:
        out = out | s
    return out
