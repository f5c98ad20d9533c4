# hybrid/verify/memory.py
"""
Bounded-memory analysis.

The symbolic state's shape (which nodes exist and which are parents of
which) depends only on control flow, never on the numbers flowing through
it. The analysis therefore replays the runtime structurally, one branch
outcome sequence at a time, and summarizes each state by its shape: every
live node is labelled by its statement and its age in loop iterations.
Identical shapes are merged, so each loop is iterated over a finite set of
summaries until that set stops changing.

  Bounded(bound, m)   the summaries reached a fixpoint; `bound` is the largest
                      live-node count seen after any iteration and `m` the
                      largest age at which a loop-born node is still live + 1
  Unbounded(witness)  in every path one site keeps adding live nodes that are
                      never consumed
  Unknown             neither, within `k_max` iterations
"""
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from ..lang.ast import For, Sample, walk
from ..lang.validate import CheckedProgram
from ..runtime.config import Engine
from ..runtime.engine import Interpreter, NeedBit
from ..runtime.infer import required_rows
from ..runtime.particles import Particle
from ..symbolic import SymBernoulli, SymDelta

logger = logging.getLogger(__name__)

M_MAX = 3
K_MAX = 16
MAX_PATHS = 512


@dataclass(frozen=True)
class MemConfig:
    m_max: int = M_MAX
    k_max: int = K_MAX

    def __post_init__(self):
        if self.m_max < 1:
            raise ValueError(f"m_max must be >= 1, got {self.m_max}")
        if self.k_max < 2:
            raise ValueError(f"k_max must be >= 2, got {self.k_max}")


@dataclass(frozen=True)
class MemoryVerdict:
    verdict: str                     # "Bounded" | "Unbounded" | "Unknown"
    bound: Optional[int] = None
    m: Optional[int] = None
    witness: Optional[str] = None
    site: Optional[int] = None
    note: str = ""

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict}
        if self.verdict == "Bounded":
            out["bound"] = self.bound
            out["m"] = self.m
        elif self.verdict == "Unbounded":
            out["witness"] = self.witness
            out["site"] = self.site
        return out

    def __str__(self) -> str:
        if self.verdict == "Bounded":
            return f"Bounded({self.bound}, m={self.m})"
        if self.verdict == "Unbounded":
            return f"Unbounded(witness {self.witness})"
        return f"Unknown ({self.note})" if self.note else "Unknown"


class _TooManyPaths(Exception):
    pass


# ============================================================
# STRUCTURAL REPLAY
# ============================================================

class _BranchScript:
    def __init__(self, bits: Tuple[int, ...]):
        self.bits = bits
        self.pos = 0

    def next(self) -> bool:
        if self.pos >= len(self.bits):
            raise NeedBit()
        bit = self.bits[self.pos]
        self.pos += 1
        return bool(bit)


class _ShapeChooser:
    """Forced values are irrelevant to the shape. 1.0 is a valid outcome of every distribution and a valid variance."""

    def choose(self, state, nid, rng=None):
        return 1.0, 0.0


class _StructuralInterpreter(Interpreter):
    """Runtime semantics with both branch outcomes explorable and weights ignored."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.script = _BranchScript(())

    def take_then(self, p, stmt, cond) -> bool:
        return self.script.next()

    @staticmethod
    def iteration(p: Particle):
        return tuple(f.iteration for f in p.frames if f.index is not None)

    @staticmethod
    def _kill(p: Particle) -> None:
        p.logw = 0.0


def _loop_depth(p: Particle) -> Optional[int]:
    for depth, frame in enumerate(p.frames):
        if frame.index is not None:
            return depth
    return None


def _loop_body(p: Particle):
    return p.frames[_loop_depth(p)].body


def _at_loop_start(p: Particle) -> bool:
    depth = _loop_depth(p)
    return depth is not None and p.frames[depth].pc == 0 and len(p.frames) == depth + 1


class _Explorer:
    def __init__(self, interp: _StructuralInterpreter):
        self.interp = interp
        self.chooser = _ShapeChooser()
        self.peak = 0

    def explore(self, p: Particle, stop) -> List[Particle]:
        """Every continuation of `p` (one per branch outcome sequence) up to `stop` or the end."""
        out = []
        stack = [()]
        while stack:
            bits = stack.pop()
            q = p.copy()
            self.interp.script = _BranchScript(bits)
            try:
                seen = len(q.live_trace)
                while q.frames:
                    self.interp._step(q, None, self.chooser)
                    if stop(q):
                        break
            except NeedBit:
                stack.append(bits + (1,))
                stack.append(bits + (0,))
                if len(stack) > MAX_PATHS:
                    raise _TooManyPaths()
                continue
            if len(q.live_trace) > seen:
                self.peak = max(self.peak, max(q.live_trace[seen:]))
            out.append(q)
            if len(out) > MAX_PATHS:
                raise _TooManyPaths()
        return out


# ============================================================
# SHAPES
# ============================================================

Label = Tuple


def _label(node, loop_sids: FrozenSet[int], current: int) -> Label:
    sid, its = node.origin
    if sid in loop_sids and its:
        return (sid, "age", current - its[0]) + tuple(its[1:])
    return (sid, "fixed") + tuple(its)


def shape(p: Particle, loop_sids: FrozenSet[int], current: int):
    """Live nodes with their parents and the program variables, up to relabelling by age."""
    state = p.state
    live = [n for n in state.reachable(p.roots()) if not isinstance(state.nodes[n].dist, SymDelta)]
    labels = {n: _label(state.nodes[n], loop_sids, current) for n in live}
    nodes = frozenset(
        (labels[n], isinstance(state.nodes[n].dist, SymBernoulli),
         frozenset(labels.get(q, "value") for q in state.nodes[n].parents))
        for n in live
    )
    env = tuple(sorted(
        (name, labels[v] if isinstance(v, int) and v in labels else "value") for name, v in p.env.items()
    ))
    return nodes, env


def _ages(shape_key) -> List[Tuple[int, int]]:
    """(site, age) of every loop-born node in a shape."""
    return [(label[0], label[2]) for label, _, _ in shape_key[0] if label[1] == "age"]


# ============================================================
# ANALYSIS
# ============================================================

def _loop_constants(checked: CheckedProgram, k_max: int) -> Dict[str, int]:
    lows, highs = set(), set()
    for stmt in walk(checked.program.body):
        if isinstance(stmt, For):
            if isinstance(stmt.lo, str):
                lows.add(stmt.lo)
            if isinstance(stmt.hi, str):
                highs.add(stmt.hi)
    consts = {name: 1 for name in lows - highs}
    consts.update({name: k_max + 2 for name in highs})
    return consts


def analyze_memory(checked: CheckedProgram, cfg: MemConfig = MemConfig()) -> MemoryVerdict:
    """
    Decide whether SSI runs `checked` in memory independent of its loop bounds.

    Loops whose bound is a constant are replayed with that constant set past
    `k_max`, so the verdict does not depend on the constant's value.
    """
    consts = _loop_constants(checked, cfg.k_max)
    program = checked.program.with_consts(consts)
    data = {name: np.ones(max(required_rows(program), 1)) for name in program.params}
    interp = _StructuralInterpreter(checked.without_exact(), data, Engine.SSI, consts)
    explorer = _Explorer(interp)

    try:
        verdict = _analyze(interp, explorer, cfg)
    except _TooManyPaths:
        verdict = MemoryVerdict("Unknown", note=f"more than {MAX_PATHS} distinct paths")
    logger.debug("Memory analysis of %s: %s", checked.program.name, verdict)
    return verdict


def _analyze(interp: _StructuralInterpreter, explorer: _Explorer, cfg: MemConfig) -> MemoryVerdict:
    m = 0
    finished: List[Particle] = []
    pending = explorer.explore(interp.start(), _at_loop_start)
    while True:
        finished.extend(p for p in pending if not p.frames)
        at_loop = [p for p in pending if p.frames]
        if not at_loop:
            break
        # Loops reached along different paths are analysed one statement at a time.
        body = _loop_body(at_loop[0])
        group = [p for p in at_loop if _loop_body(p) is body]
        rest = [p for p in at_loop if _loop_body(p) is not body]
        outcome = _iterate_loop(explorer, group, cfg)
        if isinstance(outcome, MemoryVerdict):
            return outcome
        exits, loop_m = outcome
        m = max(m, loop_m)
        pending = rest
        for p in exits:
            pending.extend(explorer.explore(p, _at_loop_start) if p.frames else [p])
    for p in finished:
        explorer.peak = max(explorer.peak, p.state.live_count(p.roots()))
    if m > cfg.m_max:
        return MemoryVerdict("Unknown", note=f"nodes survive {m} iterations (m_max={cfg.m_max})")
    return MemoryVerdict("Bounded", bound=explorer.peak, m=m)


def _iterate_loop(explorer: _Explorer, group: List[Particle], cfg: MemConfig):
    depth = _loop_depth(group[0])
    loop_body = group[0].frames[depth].body
    loop_sids = frozenset(s.sid for s in walk(loop_body))
    names = {s.sid: s.target for s in walk(loop_body) if isinstance(s, Sample)}

    def current(p):
        return p.frames[depth].iteration

    frontier = {shape(p, loop_sids, current(p)): p for p in group}
    exits: List[Particle] = []
    history: List[Dict] = []
    for _ in range(cfg.k_max):
        nxt = {}
        for p in frontier.values():
            start_it = current(p)

            def done(q, start_it=start_it):
                return len(q.frames) <= depth or q.frames[depth].body is not loop_body \
                    or (q.frames[depth].iteration != start_it and len(q.frames) == depth + 1)

            for q in explorer.explore(p, done):
                if len(q.frames) <= depth or q.frames[depth].body is not loop_body:
                    exits.append(q)
                else:
                    nxt[shape(q, loop_sids, current(q))] = q
        history.append(nxt)
        if not nxt or set(nxt) == set(frontier):
            ages = [age for key in nxt for _, age in _ages(key)]
            loop_m = max(ages) if ages else 0
            for p in nxt.values():
                exits.append(_leave_loop(p, depth))
            return exits, loop_m
        frontier = nxt

    witness = _accumulating_site(history, names)
    if witness is not None:
        site, var = witness
        return MemoryVerdict("Unbounded", witness=var, site=site)
    return MemoryVerdict("Unknown", note=f"no fixpoint within k_max={cfg.k_max} iterations")


def _accumulating_site(history: List[Dict], names: Dict[int, str]) -> Optional[Tuple[int, str]]:
    """A site whose live-node count grows in every path, every iteration, over the second half of the window."""
    window = history[len(history) // 2:]
    if len(window) < 2:
        return None
    counts = []
    for shapes in window:
        per_path = []
        for key in shapes:
            c: Dict[int, int] = {}
            for site, _ in _ages(key):
                c[site] = c.get(site, 0) + 1
            per_path.append(c)
        counts.append(per_path)
    for site in sorted(names):
        mins = [min(c.get(site, 0) for c in per_path) if per_path else 0 for per_path in counts]
        maxes = [max(c.get(site, 0) for c in per_path) if per_path else 0 for per_path in counts]
        if all(mins[i + 1] > maxes[i] for i in range(len(mins) - 1)):
            return site, names[site]
    return None


def _leave_loop(p: Particle, depth: int) -> Particle:
    """Skip the remaining iterations of a loop whose summaries are stable."""
    frame = p.frames[depth]
    p.indices.pop(frame.index, None)
    p.frames = p.frames[:depth]
    return p
