# hybrid/runtime/engine.py
"""
Statement-level interpreter for one particle.

A particle runs until just after its next observe (a resampling barrier) or
to the end of the program. The program counter is a tuple of immutable
frames, so copying a particle mid-run is a shallow operation.
"""
import logging
import math
from dataclasses import replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, DataError, ExactViolation, NonEnumerable
from ..lang.ast import Annotation, BinOp, Bernoulli, Datum, For, Gaussian, If, Num, Observe, Sample, Var, free_vars
from ..lang.validate import CheckedProgram
from ..symbolic import AffineExpr, NeedsApprox, NodeId, SymBernoulli, SymDelta, SymGaussian, SymbolicState
from .config import Engine
from .particles import Frame, Particle

logger = logging.getLogger(__name__)


class _NonAffine(Exception):
    """Raised while lowering a product of two symbolic operands."""

    def __init__(self, nodes: Sequence[NodeId]):
        super().__init__(nodes)
        self.nodes = tuple(nodes)


class NeedBit(Exception):
    """A scripted chooser ran out of pre-assigned Bernoulli outcomes."""


# ============================================================
# CHOOSERS
# ============================================================

class RandomChooser:
    """Draws forced values from the particle's own stream."""

    def choose(self, state: SymbolicState, nid: NodeId, rng: np.random.Generator) -> Tuple[float, float]:
        return state.sample_root(nid, rng), 0.0


class ScriptedChooser:
    """
    Replays a fixed sequence of Bernoulli outcomes and charges their
    probability to the particle weight. Used by the enumeration oracle.
    """

    def __init__(self, bits: Sequence[int]):
        self.bits = tuple(bits)
        self.pos = 0

    def choose(self, state: SymbolicState, nid: NodeId, rng=None) -> Tuple[float, float]:
        node = state.node(nid)
        if not isinstance(node.dist, SymBernoulli):
            raise NonEnumerable(f"'{node.name}' (stmt {node.origin[0]}) would be sampled from a continuous distribution")
        if self.pos >= len(self.bits):
            raise NeedBit()
        bit = self.bits[self.pos]
        self.pos += 1
        p = node.dist.prob if bit else 1.0 - node.dist.prob
        return float(bit), (math.log(p) if p > 0.0 else -math.inf)


RANDOM = RandomChooser()


# ============================================================
# INTERPRETER
# ============================================================

class Interpreter:
    """
    Executes a checked program over particles.

    Args:
        checked: validated program
        data: parameter name -> float array (1-based datum indices)
        engine: SSI, DS (chain-restricted exact handling) or EXACT (oracle mode)
        consts: constant overrides applied on top of the program's declarations
    """

    def __init__(self, checked: CheckedProgram, data: Dict[str, np.ndarray], engine: Engine = Engine.SSI,
                 consts: Optional[Dict[str, int]] = None):
        self.checked = checked
        self.program = checked.program.with_consts(consts) if consts else checked.program
        self.consts = self.program.const_map
        self.data = data
        self.engine = Engine(engine)
        # Approximate the inputs of both branches when a condition is still symbolic.
        self.symbolic_branches = self.engine is not Engine.EXACT

    def start(self) -> Particle:
        return Particle(state=SymbolicState(), env={}, frames=(Frame(self.program.body),))

    def advance(self, p: Particle, rng: Optional[np.random.Generator], chooser=RANDOM) -> Particle:
        """Run `p` to just after its next observe, or to completion."""
        while p.frames:
            if self._step(p, rng, chooser):
                break
        return p

    def run_to_end(self, p: Particle, rng: Optional[np.random.Generator], chooser=RANDOM) -> Particle:
        while p.frames:
            self._step(p, rng, chooser)
        return p

    # ── program counter ──────────────────────────────────────────
    def _step(self, p: Particle, rng, chooser) -> bool:
        frame = p.frames[-1]
        if frame.pc < len(frame.body):
            stmt = frame.body[frame.pc]
            p.frames = p.frames[:-1] + (replace(frame, pc=frame.pc + 1),)
            return self._exec(p, stmt, rng, chooser)

        if frame.index is not None:
            p.live_trace.append(p.state.live_count(p.roots()))
            if frame.iteration < frame.hi:
                nxt = frame.iteration + 1
                p.indices[frame.index] = nxt
                p.frames = p.frames[:-1] + (replace(frame, pc=0, iteration=nxt),)
                return False
            del p.indices[frame.index]
        p.frames = p.frames[:-1]
        if not p.frames:
            self._finish(p, rng, chooser)
        return False

    @staticmethod
    def iteration(p: Particle) -> int:
        for frame in reversed(p.frames):
            if frame.index is not None:
                return frame.iteration
        return 0

    def _exec(self, p: Particle, stmt, rng, chooser) -> bool:
        if isinstance(stmt, Sample):
            self._sample(p, stmt, rng, chooser)
            return False
        if isinstance(stmt, Observe):
            self._observe(p, stmt, rng, chooser)
            return True
        if isinstance(stmt, If):
            self._branch(p, stmt, rng, chooser)
            return False
        if isinstance(stmt, For):
            self._loop(p, stmt)
            return False
        raise TypeError(f"not a statement: {stmt!r}")

    # ── statements ───────────────────────────────────────────────
    def _sample(self, p: Particle, stmt: Sample, rng, chooser) -> None:
        origin = (stmt.sid, self.iteration(p))
        if isinstance(stmt.dist, Gaussian):
            mean = self._affine(p, stmt.dist.mean, rng, chooser, f"non-affine mean at line {stmt.line}")
            if self.engine is Engine.DS:
                mean = self._chain_restrict(p, stmt.dist.mean, mean, rng, chooser, stmt.line)
            variance = self._constant(p, stmt.dist.variance, rng, chooser, f"symbolic variance at line {stmt.line}")
            dist = SymGaussian(mean, variance)
        elif isinstance(stmt.dist, Bernoulli):
            dist = SymBernoulli(self._constant(p, stmt.dist.prob, rng, chooser, f"bernoulli probability at line {stmt.line}"))
        else:
            raise TypeError(f"not a distribution: {stmt.dist!r}")

        nid = p.state.assume(dist, stmt.ann, origin, stmt.target)
        displaced = isinstance(p.env.get(stmt.target), int)
        p.env[stmt.target] = nid
        if stmt.ann is Annotation.APPROX:
            self.force(p, nid, rng, chooser, f"approx at line {stmt.line}")
        if displaced:
            p.state.prune(p.roots())

    def _observe(self, p: Particle, stmt: Observe, rng, chooser) -> None:
        value = self._datum(p, stmt.datum)
        subject = p.env[stmt.subject]
        if not isinstance(subject, int):
            p.logw += 0.0 if subject == value else -math.inf
        else:
            if self.engine is Engine.DS:
                self._chain_restrict_node(p, subject, rng, chooser, stmt.line)
            self._hoist(p, subject, rng, chooser, f"observation at line {stmt.line}")
            p.logw += p.state.score(subject, value)
            self._realize(p, subject, value)
            self._settle(p)
            p.state.prune(p.roots())
        if p.logw == -math.inf:
            self._kill(p)

    def _branch(self, p: Particle, stmt: If, rng, chooser) -> None:
        cond = p.env[stmt.cond]
        if isinstance(cond, int):
            cond = self.force(p, cond, rng, chooser, f"branch condition at line {stmt.line}")
            if self.symbolic_branches:
                for name in sorted(free_vars(stmt.then_body) | free_vars(stmt.else_body)):
                    held = p.env.get(name)
                    if isinstance(held, int):
                        self.force(p, held, rng, chooser, f"read under a symbolic branch at line {stmt.line}")
        if not p.alive:
            self._kill(p)
            return
        body = stmt.then_body if self.take_then(p, stmt, cond) else stmt.else_body
        if body:
            p.frames = p.frames + (Frame(body),)

    def take_then(self, p: Particle, stmt: If, cond: float) -> bool:
        return cond != 0.0

    def _loop(self, p: Particle, stmt: For) -> None:
        lo, hi = self._bound(stmt.lo), self._bound(stmt.hi)
        if lo > hi:
            return
        p.indices[stmt.index] = lo
        p.frames = p.frames + (Frame(stmt.body, 0, stmt.index, lo, hi),)

    def _finish(self, p: Particle, rng, chooser) -> None:
        name = self.program.result
        while True:
            held = p.env.get(name)
            if held is None:
                p.result = float(self._const(name))
                return
            if not isinstance(held, int):
                p.result = held
                return
            marginal = p.state.marginal_of(held)
            if not isinstance(marginal, NeedsApprox):
                p.result = marginal
                return
            self.force(p, marginal.by, rng, chooser, f"blocks the result '{name}'")

    # ── forcing ──────────────────────────────────────────────────
    def force(self, p: Particle, nid: NodeId, rng, chooser, cause: str) -> float:
        """
        Sample a value for `nid` and realize it, sampling blockers first.

        Raises:
            ExactViolation: `nid` (or a blocker) carries an exact annotation
        """
        node = p.state.node(nid)
        if isinstance(node.dist, SymDelta):
            return node.dist.value
        sid, iteration = node.origin
        if node.ann is Annotation.EXACT:
            raise ExactViolation(node.name, sid, iteration, cause, self.checked.line_of(sid))
        self._hoist(p, nid, rng, chooser, f"blocks '{node.name}'")
        value, dlogw = chooser.choose(p.state, nid, rng)
        p.logw += dlogw
        self._realize(p, nid, value)
        p.sampled.append((node.name, sid, iteration))
        logger.debug("Sampled %s (stmt %d, iteration %s) = %r: %s", node.name, sid, iteration, value, cause)
        return value

    def _hoist(self, p: Particle, nid: NodeId, rng, chooser, cause: str) -> None:
        while True:
            blocked = p.state.hoist(nid)
            if blocked is None:
                return
            self.force(p, blocked.by, rng, chooser, cause)

    def _realize(self, p: Particle, nid: NodeId, value: float) -> None:
        value = float(value)
        p.state.realize(nid, value)
        for name, held in p.env.items():
            if isinstance(held, int) and held == nid:
                p.env[name] = value

    def _settle(self, p: Particle) -> None:
        """Re-root every symbolic program variable where swaps alone allow it."""
        for name in sorted(p.env):
            held = p.env[name]
            if isinstance(held, int) and not isinstance(p.state.node(held).dist, SymDelta):
                p.state.hoist(held)

    @staticmethod
    def _kill(p: Particle) -> None:
        p.logw = -math.inf
        p.frames = ()
        p.result = None

    # ── delayed-sampling restriction ─────────────────────────────
    def _chain_extras(self, state: SymbolicState, parents: Sequence[NodeId]):
        gaussian = sorted(n for n in parents if isinstance(state.node(n).dist, SymGaussian))
        others = sorted(n for n in parents if n not in gaussian)
        return others + gaussian[:-1]

    def _chain_restrict(self, p: Particle, expr, mean: AffineExpr, rng, chooser, line) -> AffineExpr:
        extras = self._chain_extras(p.state, mean.parents)
        if not extras:
            return mean
        for nid in extras:
            self.force(p, nid, rng, chooser, f"delayed sampling keeps one symbolic parent (line {line})")
        return self._affine(p, expr, rng, chooser, f"non-affine mean at line {line}")

    def _chain_restrict_node(self, p: Particle, nid: NodeId, rng, chooser, line) -> None:
        for extra in self._chain_extras(p.state, p.state.parents(nid)):
            self.force(p, extra, rng, chooser, f"delayed sampling observes along a chain (line {line})")

    # ── expressions ──────────────────────────────────────────────
    def _affine(self, p: Particle, expr, rng, chooser, cause: str) -> AffineExpr:
        while True:
            try:
                return self._lower(p, expr)
            except _NonAffine as e:
                for nid in e.nodes:
                    if nid in p.state:
                        self.force(p, nid, rng, chooser, cause)

    def _constant(self, p: Particle, expr, rng, chooser, cause: str) -> float:
        value = self._affine(p, expr, rng, chooser, cause)
        for nid in value.parents:
            self.force(p, nid, rng, chooser, cause)
        if not value.is_constant():
            value = self._lower(p, expr)
        return value.intercept

    def _lower(self, p: Particle, expr) -> AffineExpr:
        if isinstance(expr, Num):
            return AffineExpr.const(expr.value)
        if isinstance(expr, Var):
            held = p.env.get(expr.name)
            if isinstance(held, int):
                return AffineExpr.var(held)
            if held is not None:
                return AffineExpr.const(held)
            if expr.name in p.indices:
                return AffineExpr.const(p.indices[expr.name])
            return AffineExpr.const(self._const(expr.name))
        if isinstance(expr, Datum):
            return AffineExpr.const(self._datum(p, expr))
        if isinstance(expr, BinOp):
            left, right = self._lower(p, expr.left), self._lower(p, expr.right)
            if expr.op == "+":
                return left + right
            if expr.op == "-":
                return left - right
            if left.is_constant():
                return right.scale(left.intercept)
            if right.is_constant():
                return left.scale(right.intercept)
            raise _NonAffine(right.parents)
        raise TypeError(f"not an expression: {expr!r}")

    def _const(self, name: str) -> int:
        value = self.consts.get(name)
        if value is None:
            raise ConfigError(f"constant '{name}' has no value (declare it or pass --set {name}=...)")
        return value

    def _bound(self, bound) -> int:
        return bound if isinstance(bound, int) else self._const(bound)

    def _datum(self, p: Particle, datum: Datum) -> float:
        column = self.data.get(datum.param)
        if column is None:
            raise DataError(f"no data for parameter '{datum.param}'")
        i = p.indices[datum.index]
        if not 1 <= i <= len(column):
            raise DataError(f"{datum.param}[{i}] is out of range ({len(column)} rows)")
        return float(column[i - 1])
