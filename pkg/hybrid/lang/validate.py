# hybrid/lang/validate.py
"""
Static checks on a parsed Program: scoping, observe rules, constant
parameters, affine-ness flags. Numbers every statement.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Set, Tuple

from ..errors import ValidationError, ValidationFailed
from .ast import (
    Annotation, BinOp, Bernoulli, Datum, For, Gaussian, If, Num, Observe, Program, Sample, Stmt, Var, walk,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckedProgram:
    """A validated program whose statements all carry a unique `sid`."""
    program: Program
    nonaffine: Dict[int, Tuple[str, ...]] = field(default_factory=dict)

    @property
    def stmts(self) -> Dict[int, Stmt]:
        return {s.sid: s for s in walk(self.program.body)}

    def line_of(self, sid: int) -> Optional[int]:
        stmt = self.stmts.get(sid)
        return stmt.line if stmt is not None else None

    @property
    def exact_sites(self) -> Dict[int, str]:
        return {
            s.sid: s.target for s in walk(self.program.body)
            if isinstance(s, Sample) and s.ann is Annotation.EXACT
        }

    def without_exact(self) -> "CheckedProgram":
        """Same program and statement ids, with every `exact` annotation dropped."""
        def strip(stmts):
            out = []
            for s in stmts:
                if isinstance(s, Sample) and s.ann is Annotation.EXACT:
                    s = replace(s, ann=Annotation.NONE)
                elif isinstance(s, If):
                    s = replace(s, then_body=strip(s.then_body), else_body=strip(s.else_body))
                elif isinstance(s, For):
                    s = replace(s, body=strip(s.body))
                out.append(s)
            return tuple(out)

        return CheckedProgram(replace(self.program, body=strip(self.program.body)), self.nonaffine)


# ============================================================
# STATEMENT NUMBERING
# ============================================================

def number_statements(program: Program) -> Program:
    counter = iter(range(1, 1_000_000))

    def number(stmts):
        out = []
        for stmt in stmts:
            sid = next(counter)
            if isinstance(stmt, If):
                stmt = replace(stmt, sid=sid, then_body=number(stmt.then_body), else_body=number(stmt.else_body))
            elif isinstance(stmt, For):
                stmt = replace(stmt, sid=sid, body=number(stmt.body))
            else:
                stmt = replace(stmt, sid=sid)
            out.append(stmt)
        return tuple(out)

    return replace(program, body=number(program.body))


# ============================================================
# EXPRESSION CHECKS
# ============================================================

def affine_info(expr, random: Set[str]) -> Tuple[bool, bool]:
    """Return (depends_on_random, affine) for a numeric expression."""
    if isinstance(expr, (Num, Datum)):
        return False, True
    if isinstance(expr, Var):
        return expr.name in random, True
    if isinstance(expr, BinOp):
        dl, al = affine_info(expr.left, random)
        dr, ar = affine_info(expr.right, random)
        if expr.op == "*":
            return dl or dr, al and ar and not (dl and dr)
        return dl or dr, al and ar
    raise TypeError(f"not an expression: {expr!r}")


def fold_constant(expr, consts: Dict[str, Optional[int]]) -> Optional[float]:
    """Fold literal arithmetic (and declared constants); None when not constant."""
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        value = consts.get(expr.name)
        return None if value is None else float(value)
    if isinstance(expr, BinOp):
        left = fold_constant(expr.left, consts)
        right = fold_constant(expr.right, consts)
        if left is None or right is None:
            return None
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        return left * right
    return None


class _Checker:
    def __init__(self, program: Program):
        self.program = program
        self.params = set(program.params)
        self.consts = program.const_map
        self.errors: List[ValidationError] = []
        self.nonaffine: Dict[int, List[str]] = {}

    def error(self, stmt, rule: str, message: str):
        err = ValidationError(getattr(stmt, "sid", None), rule, message, getattr(stmt, "line", None))
        if err not in self.errors:
            self.errors.append(err)

    def check_expr(self, stmt, expr, random: Set[str], indices: Set[str]):
        if isinstance(expr, Var):
            if expr.name not in random | indices and expr.name not in self.consts:
                self.error(stmt, "unbound identifier", f"'{expr.name}' is not bound")
        elif isinstance(expr, Datum):
            if expr.param not in self.params:
                self.error(stmt, "unbound identifier", f"'{expr.param}' is not a program parameter")
            if expr.index not in indices:
                self.error(stmt, "datum index", f"'{expr.index}' is not a loop index in scope")
        elif isinstance(expr, BinOp):
            self.check_expr(stmt, expr.left, random, indices)
            self.check_expr(stmt, expr.right, random, indices)

    def check_sample(self, stmt: Sample, random: Set[str], indices: Set[str]):
        if stmt.target in self.params or stmt.target in self.consts or stmt.target in indices:
            self.error(stmt, "reserved name", f"'{stmt.target}' is a parameter, constant or loop index")
        if not isinstance(stmt.ann, Annotation):
            self.error(stmt, "annotation", "annotation must be none, approx or exact")
        dist = stmt.dist
        if isinstance(dist, Gaussian):
            self.check_expr(stmt, dist.mean, random, indices)
            self.check_expr(stmt, dist.variance, random, indices)
            depends, affine = affine_info(dist.mean, random)
            if not affine:
                self.nonaffine.setdefault(stmt.sid, []).append(f"mean of '{stmt.target}' is non-affine")
            depends, affine = affine_info(dist.variance, random)
            if not affine:
                self.error(stmt, "non-affine variance", f"variance of '{stmt.target}' is not affine")
            elif not depends:
                value = fold_constant(dist.variance, self.consts)
                if value is not None and value <= 0:
                    self.error(stmt, "variance", f"variance of '{stmt.target}' must be positive")
        elif isinstance(dist, Bernoulli):
            self.check_expr(stmt, dist.prob, random, indices)
            value = fold_constant(dist.prob, self.consts)
            if value is None:
                self.error(stmt, "bernoulli probability", f"probability of '{stmt.target}' must be constant")
            elif not 0.0 <= value <= 1.0:
                self.error(stmt, "bernoulli probability", f"probability {value} outside [0, 1]")
        else:
            self.error(stmt, "distribution", f"unknown distribution {dist!r}")

    def block(self, stmts, random: Set[str], indices: Set[str], observed: Set[str]):
        """Check a block; returns (random, observed) after it."""
        random, observed = set(random), set(observed)
        for stmt in stmts:
            if isinstance(stmt, Sample):
                self.check_sample(stmt, random, indices)
                random.add(stmt.target)
                observed.discard(stmt.target)
            elif isinstance(stmt, Observe):
                self.check_expr(stmt, stmt.datum, random, indices)
                if stmt.subject not in random:
                    if stmt.subject in self.params or stmt.subject in self.consts or stmt.subject in indices:
                        self.error(stmt, "observe subject", f"'{stmt.subject}' is not a sampled variable")
                    else:
                        self.error(stmt, "unbound identifier", f"'{stmt.subject}' is not bound")
                elif stmt.subject in observed:
                    self.error(stmt, "observed twice", f"'{stmt.subject}' is already observed on this path")
                observed.add(stmt.subject)
            elif isinstance(stmt, If):
                if stmt.cond not in random:
                    self.error(stmt, "condition", f"'{stmt.cond}' is not a sampled variable")
                r1, o1 = self.block(stmt.then_body, random, indices, observed)
                r2, o2 = self.block(stmt.else_body, random, indices, observed)
                random = r1 & r2
                observed = o1 | o2
            elif isinstance(stmt, For):
                for bound in (stmt.lo, stmt.hi):
                    if isinstance(bound, str) and bound not in self.consts:
                        self.error(stmt, "unbound constant", f"loop bound '{bound}' is not a constant")
                if stmt.index in self.params or stmt.index in random:
                    self.error(stmt, "reserved name", f"loop index '{stmt.index}' shadows a variable")
                inner = indices | {stmt.index}
                # A second pass catches observations repeated across iterations.
                r1, o1 = self.block(stmt.body, random, inner, observed)
                single = isinstance(stmt.lo, int) and isinstance(stmt.hi, int) and stmt.hi <= stmt.lo
                r2, o2 = (r1, o1) if single else self.block(stmt.body, r1, inner, o1)
                random = r1 | r2
                observed = o1 | o2
        return random, observed

    def run(self) -> List[ValidationError]:
        for name in self.params:
            if name in self.consts:
                self.error(None, "reserved name", f"'{name}' is both a parameter and a constant")
        random, _ = self.block(self.program.body, set(), set(), set())
        if self.program.result not in random and self.program.result not in self.consts:
            self.errors.append(ValidationError(
                None, "unbound identifier", f"result '{self.program.result}' is not in scope"))
        return self.errors


def collect_errors(program: Program) -> Tuple[Program, List[ValidationError], Dict[int, Tuple[str, ...]]]:
    numbered = number_statements(program)
    checker = _Checker(numbered)
    errors = checker.run()
    flags = {sid: tuple(msgs) for sid, msgs in checker.nonaffine.items()}
    return numbered, errors, flags


def validate(program: Program) -> CheckedProgram:
    """
    Validate a parsed program.

    Returns:
        CheckedProgram with statement ids attached and non-affine flags

    Raises:
        ValidationFailed: carrying one ValidationError per violation
    """
    numbered, errors, flags = collect_errors(program)
    if errors:
        logger.debug("Validation found %d error(s)", len(errors))
        raise ValidationFailed(errors)
    for sid, msgs in flags.items():
        for msg in msgs:
            logger.info("stmt %d: %s (the runtime will sample)", sid, msg)
    return CheckedProgram(numbered, flags)
