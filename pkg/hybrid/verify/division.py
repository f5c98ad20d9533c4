# hybrid/verify/division.py
"""
Forward abstract interpretation certifying `exact` annotations against the
SSI runtime's forcing policy.

A site enters `may_sample` whenever some execution of the runtime could
sample a node created there. An exact annotation is Verified iff its site
never does.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..lang.ast import Annotation, Bernoulli, For, Gaussian, If, Observe, Sample, expr_vars, free_vars, walk
from ..lang.validate import CheckedProgram, affine_info
from .domain import BOTTOM, AbsEnv, AbsVal, Kind, env_le, join_envs, lattice_height, union_all

logger = logging.getLogger(__name__)

VERIFIED = "Verified"
REFUTED = "Refuted"
UNKNOWN = "Unknown"


@dataclass(frozen=True)
class ExactVerdict:
    var: str
    site: int
    line: Optional[int]
    verdict: str
    reason: Optional[int] = None
    reason_text: str = ""

    def to_dict(self) -> dict:
        out = {"var": self.var, "site": self.site, "verdict": self.verdict}
        if self.verdict == REFUTED:
            out["reason"] = self.reason
        return out

    def __str__(self) -> str:
        if self.verdict == REFUTED:
            return f"{self.var}: {REFUTED} at {self.reason_text}"
        return f"{self.var}: {self.verdict}"


@dataclass
class DivisionReport:
    verdicts: List[ExactVerdict]
    may_sample: Dict[int, Optional[int]]
    trace: List[Tuple[int, Dict[str, str]]] = field(default_factory=list)
    transfers: int = 0

    @property
    def all_verified(self) -> bool:
        return all(v.verdict == VERIFIED for v in self.verdicts)

    def verdict_for(self, var: str) -> List[ExactVerdict]:
        return [v for v in self.verdicts if v.var == var]


class _FixpointCap(Exception):
    pass


def describe_stmt(stmt) -> str:
    if stmt is None:
        return "end of program"
    if isinstance(stmt, If):
        return f"if({stmt.cond})"
    if isinstance(stmt, Observe):
        return f"observe({stmt.subject}) at line {stmt.line}"
    if isinstance(stmt, Sample):
        return f"{stmt.target} <- ... at line {stmt.line}"
    if isinstance(stmt, For):
        return f"for {stmt.index} at line {stmt.line}"
    return repr(stmt)


class _Analyzer:
    def __init__(self, checked: CheckedProgram):
        self.checked = checked
        self.program = checked.program
        self.may_sample: Dict[int, Optional[int]] = {}
        self.trace: Dict[int, Dict[str, str]] = {}
        self.transfers = 0
        names = {s.target for s in walk(self.program.body) if isinstance(s, Sample)}
        stmts = sum(1 for _ in walk(self.program.body))
        self.cap = lattice_height() * max(len(names), 1) * max(stmts, 1) + 2

    def mark(self, sites, reason: Optional[int]) -> None:
        for site in sorted(sites):
            self.may_sample.setdefault(site, reason)

    def force(self, env: AbsEnv, name: str, reason: Optional[int]) -> None:
        val = env.get(name, BOTTOM)
        if val.maybe_symbolic:
            self.mark(val.forced(), reason)
            env[name] = val.realized()

    # ── transfer functions ───────────────────────────────────────
    def sample(self, env: AbsEnv, stmt: Sample) -> None:
        if isinstance(stmt.dist, Gaussian):
            random = {n for n, v in env.items() if v.maybe_symbolic}
            _, affine = affine_info(stmt.dist.mean, random)
            if not affine:
                for name in sorted(set(expr_vars(stmt.dist.mean)) & random):
                    self.force(env, name, stmt.sid)
            for name in sorted(set(expr_vars(stmt.dist.variance))):
                self.force(env, name, stmt.sid)
            bdeps = union_all(env[n].as_parent() for n in expr_vars(stmt.dist.mean) if n in env)
            val = AbsVal(Kind.LINGAUSS, frozenset({stmt.sid}), bdeps)
        elif isinstance(stmt.dist, Bernoulli):
            val = AbsVal(Kind.DISCRETE, frozenset({stmt.sid}))
        else:
            raise TypeError(f"not a distribution: {stmt.dist!r}")
        if stmt.ann is Annotation.APPROX:
            self.mark(val.forced(), stmt.sid)
            val = AbsVal(Kind.REALIZED, frozenset({stmt.sid}))
        env[stmt.target] = val

    def observe(self, env: AbsEnv, stmt: Observe) -> None:
        val = env.get(stmt.subject, BOTTOM)
        self.mark(val.blockers(), stmt.sid)
        env[stmt.subject] = AbsVal(Kind.REALIZED, val.sites)

    def branch(self, env: AbsEnv, stmt: If) -> AbsEnv:
        if env.get(stmt.cond, BOTTOM).maybe_symbolic:
            self.force(env, stmt.cond, stmt.sid)
            for name in sorted(free_vars(stmt.then_body) | free_vars(stmt.else_body)):
                if name in env:
                    self.force(env, name, stmt.sid)
        then_env = self.block(stmt.then_body, dict(env))
        else_env = self.block(stmt.else_body, dict(env))
        return join_envs(then_env, else_env)

    def loop(self, env: AbsEnv, stmt: For) -> AbsEnv:
        head = dict(env)
        for _ in range(self.cap):
            out = self.block(stmt.body, dict(head))
            nxt = join_envs(head, out)
            if env_le(nxt, head):
                return head
            head = nxt
        raise _FixpointCap()

    def block(self, stmts, env: AbsEnv) -> AbsEnv:
        for stmt in stmts:
            self.transfers += 1
            if isinstance(stmt, Sample):
                self.sample(env, stmt)
            elif isinstance(stmt, Observe):
                self.observe(env, stmt)
            elif isinstance(stmt, If):
                env = self.branch(env, stmt)
            elif isinstance(stmt, For):
                env = self.loop(env, stmt)
            self.trace[stmt.sid] = {k: str(v) for k, v in sorted(env.items())}
        return env

    def run(self) -> AbsEnv:
        env = self.block(self.program.body, {})
        result = env.get(self.program.result, BOTTOM)
        self.mark(result.blockers(), None)
        return env


def analyze_division(checked: CheckedProgram) -> DivisionReport:
    """
    Certify each exact annotation.

    Returns:
        DivisionReport with one verdict per exact-annotated sample site, the
        may-sample map (site -> statement that can force it) and the final
        abstract environment after every statement
    """
    analyzer = _Analyzer(checked)
    stmts = checked.stmts
    try:
        analyzer.run()
        capped = False
    except _FixpointCap:
        logger.warning("Division analysis of %s hit its iteration cap", checked.program.name)
        capped = True

    verdicts = []
    for site, var in sorted(checked.exact_sites.items()):
        line = checked.line_of(site)
        if site in analyzer.may_sample:
            reason = analyzer.may_sample[site]
            verdicts.append(ExactVerdict(var, site, line, REFUTED, reason, describe_stmt(stmts.get(reason))))
        elif capped:
            verdicts.append(ExactVerdict(var, site, line, UNKNOWN))
        else:
            verdicts.append(ExactVerdict(var, site, line, VERIFIED))
    for v in verdicts:
        logger.debug("exact %s (stmt %d): %s", v.var, v.site, v.verdict)
    return DivisionReport(
        verdicts=verdicts,
        may_sample=dict(sorted(analyzer.may_sample.items())),
        trace=sorted(analyzer.trace.items()),
        transfers=analyzer.transfers,
    )
