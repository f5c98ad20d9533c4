# hybrid/lang/ast.py
"""
AST for the model language.

Statement ids and source lines are excluded from equality so that
parse(render(p)) == p holds structurally.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterator, Optional, Tuple, Union

from ..errors import ConfigError


class Annotation(Enum):
    NONE = "none"
    APPROX = "approx"
    EXACT = "exact"


# ============================================================
# NUMERIC EXPRESSIONS
# ============================================================

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Datum:
    """`param[index]`, 1-based like the loop bounds."""
    param: str
    index: str


@dataclass(frozen=True)
class BinOp:
    op: str  # "+", "-", "*"
    left: "NumExpr"
    right: "NumExpr"


NumExpr = Union[Num, Var, Datum, BinOp]


@dataclass(frozen=True)
class Gaussian:
    mean: NumExpr
    variance: NumExpr


@dataclass(frozen=True)
class Bernoulli:
    prob: NumExpr


DistExpr = Union[Gaussian, Bernoulli]


# ============================================================
# STATEMENTS
# ============================================================

@dataclass(frozen=True)
class Sample:
    target: str
    ann: Annotation
    dist: DistExpr
    sid: Optional[int] = field(default=None, compare=False)
    line: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class Observe:
    subject: str
    datum: Datum
    sid: Optional[int] = field(default=None, compare=False)
    line: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class If:
    cond: str
    then_body: Tuple["Stmt", ...]
    else_body: Tuple["Stmt", ...]
    sid: Optional[int] = field(default=None, compare=False)
    line: Optional[int] = field(default=None, compare=False)


IntExpr = Union[int, str]


@dataclass(frozen=True)
class For:
    index: str
    lo: IntExpr
    hi: IntExpr
    body: Tuple["Stmt", ...]
    sid: Optional[int] = field(default=None, compare=False)
    line: Optional[int] = field(default=None, compare=False)


Stmt = Union[Sample, Observe, If, For]


@dataclass(frozen=True)
class Program:
    name: str
    params: Tuple[str, ...]
    consts: Tuple[Tuple[str, Optional[int]], ...]
    body: Tuple[Stmt, ...]
    result: str

    @property
    def const_map(self) -> Dict[str, Optional[int]]:
        return dict(self.consts)

    def with_consts(self, overrides: Dict[str, int]) -> "Program":
        """Return a copy with constant values replaced (the `--set N=...` override)."""
        merged = dict(self.consts)
        for name, value in overrides.items():
            merged[name] = int(value)
        return replace(self, consts=tuple(sorted(merged.items())))

    def resolve_int(self, expr: IntExpr) -> Optional[int]:
        if isinstance(expr, int):
            return expr
        return self.const_map.get(expr)


# ============================================================
# TRAVERSAL HELPERS
# ============================================================

def walk(stmts) -> Iterator[Stmt]:
    """Pre-order walk over statements, descending into branches and loop bodies."""
    for stmt in stmts:
        yield stmt
        if isinstance(stmt, If):
            yield from walk(stmt.then_body)
            yield from walk(stmt.else_body)
        elif isinstance(stmt, For):
            yield from walk(stmt.body)


def expr_vars(expr: NumExpr) -> Iterator[str]:
    """Names referenced as plain variables (data references excluded)."""
    if isinstance(expr, Var):
        yield expr.name
    elif isinstance(expr, BinOp):
        yield from expr_vars(expr.left)
        yield from expr_vars(expr.right)


def dist_exprs(dist: DistExpr) -> Tuple[NumExpr, ...]:
    if isinstance(dist, Gaussian):
        return (dist.mean, dist.variance)
    return (dist.prob,)


def free_vars(stmts, bound=frozenset()) -> frozenset:
    """
    Variables read by `stmts` before any binding inside them.

    Used by the symbolic-branch fallback: when a branch condition is still
    symbolic, the inputs of both branches are approximated.
    """
    bound = set(bound)
    free = set()
    for stmt in stmts:
        if isinstance(stmt, Sample):
            for e in dist_exprs(stmt.dist):
                free.update(v for v in expr_vars(e) if v not in bound)
            bound.add(stmt.target)
        elif isinstance(stmt, Observe):
            if stmt.subject not in bound:
                free.add(stmt.subject)
        elif isinstance(stmt, If):
            if stmt.cond not in bound:
                free.add(stmt.cond)
            free |= free_vars(stmt.then_body, bound)
            free |= free_vars(stmt.else_body, bound)
        elif isinstance(stmt, For):
            free |= free_vars(stmt.body, bound | {stmt.index})
    return frozenset(free)


# ============================================================
# UNROLLED COUNTS
# ============================================================

def _unrolled(program: Program, stmts, counts) -> int:
    total = 0
    for stmt in stmts:
        total += counts(stmt)
        if isinstance(stmt, If):
            total += max(_unrolled(program, stmt.then_body, counts), _unrolled(program, stmt.else_body, counts))
        elif isinstance(stmt, For):
            lo, hi = program.resolve_int(stmt.lo), program.resolve_int(stmt.hi)
            if lo is None or hi is None:
                raise ConfigError(f"loop bound of '{stmt.index}' has no value")
            total += max(hi - lo + 1, 0) * _unrolled(program, stmt.body, counts)
    return total


def loop_count(program: Program) -> int:
    """Loop iterations executed in total, nested loops included."""
    return _iterations(program, program.body)


def _iterations(program: Program, stmts) -> int:
    total = 0
    for stmt in stmts:
        if isinstance(stmt, If):
            total += max(_iterations(program, stmt.then_body), _iterations(program, stmt.else_body))
        elif isinstance(stmt, For):
            lo, hi = program.resolve_int(stmt.lo), program.resolve_int(stmt.hi)
            if lo is None or hi is None:
                raise ConfigError(f"loop bound of '{stmt.index}' has no value")
            n = max(hi - lo + 1, 0)
            total += n + n * _iterations(program, stmt.body)
    return total


def bernoulli_count(program: Program) -> int:
    """Upper bound on Bernoulli draws along any path of the unrolled program."""
    return _unrolled(program, program.body, lambda s: 1 if isinstance(s, Sample) and isinstance(s.dist, Bernoulli) else 0)
