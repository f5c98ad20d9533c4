# hybrid/verify/fuzz.py
"""
Random valid programs and the dynamic soundness check for the division
analysis.

Generated programs use a fixed vocabulary: Gaussian variables x, y, z, w,
Bernoulli variables o, p, q and loop indices i, j. Conditions only test
Bernoulli variables. Each data parameter is observed by exactly one
statement, so synthesized data is always consistent.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Set, Tuple

import numpy as np

from ..errors import AllParticlesDead
from ..lang.ast import Annotation, BinOp, Bernoulli, Datum, For, Gaussian, If, Num, Observe, Program, Sample, Var
from ..lang.validate import validate
from ..runtime.config import RunConfig
from ..runtime.infer import run
from ..runtime.simulate import synthesize
from .division import VERIFIED, analyze_division

logger = logging.getLogger(__name__)

GAUSSIAN_VARS = ("x", "y", "z", "w")
BERNOULLI_VARS = ("o", "p", "q")
INDICES = ("i", "j")
LITERALS = (0.1, 0.5, 1.0, 2.0, 3.0)
PROBS = (0.1, 0.3, 0.5, 0.9)

MAX_DEPTH = 2
MAX_BLOCK = 4


class _Generator:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.params: List[str] = []

    def pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def chance(self, p: float) -> bool:
        return bool(self.rng.random() < p)

    def annotation(self) -> Annotation:
        return self.pick((Annotation.NONE, Annotation.NONE, Annotation.APPROX, Annotation.EXACT, Annotation.EXACT))

    def literal(self) -> Num:
        return Num(self.pick(LITERALS))

    def mean(self, scope: Set[str]) -> object:
        vars_ = sorted(scope)
        if not vars_ or self.chance(0.15):
            return self.literal()
        gaussian = [v for v in vars_ if v in GAUSSIAN_VARS]
        if len(gaussian) >= 2 and self.chance(0.1):
            a, b = self.rng.choice(gaussian, size=2, replace=False)
            return BinOp("*", Var(str(a)), Var(str(b)))
        expr = Var(self.pick(vars_))
        if self.chance(0.3):
            expr = BinOp("*", self.literal(), expr)
        if self.chance(0.3):
            expr = BinOp(self.pick(("+", "-")), expr, Var(self.pick(vars_)))
        if self.chance(0.3):
            expr = BinOp("+", expr, self.literal())
        return expr

    def variance(self, scope: Set[str]) -> object:
        discrete = sorted(v for v in scope if v in BERNOULLI_VARS)
        if discrete and self.chance(0.1):
            return BinOp("+", Var(self.pick(discrete)), self.literal())
        return self.literal()

    def sample(self, scope: Set[str]) -> Sample:
        if self.chance(0.3):
            return Sample(self.pick(BERNOULLI_VARS), self.annotation(), Bernoulli(Num(self.pick(PROBS))))
        return Sample(self.pick(GAUSSIAN_VARS), self.annotation(), Gaussian(self.mean(scope), self.variance(scope)))

    def block(self, scope: Set[str], indices: Tuple[str, ...], depth: int, minimum: int = 1):
        """Returns (statements, scope after them, names observed in them)."""
        scope = set(scope)
        fresh: Set[str] = set()
        observed: Set[str] = set()
        out = []
        for _ in range(int(self.rng.integers(minimum, MAX_BLOCK + 1))):
            roll = self.rng.random()
            if indices and fresh and roll < 0.3:
                subject = self.pick(sorted(fresh))
                param = f"d{len(self.params) + 1}"
                self.params.append(param)
                out.append(Observe(subject, Datum(param, indices[-1])))
                fresh.discard(subject)
                observed.add(subject)
            elif depth < MAX_DEPTH and roll < 0.45 and any(v in BERNOULLI_VARS for v in scope):
                cond = self.pick(sorted(v for v in scope if v in BERNOULLI_VARS))
                then_body, then_scope, then_obs = self.block(scope, indices, depth + 1)
                else_body, else_scope, else_obs = self.block(scope, indices, depth + 1, minimum=0) \
                    if self.chance(0.7) else ((), scope, set())
                out.append(If(cond, then_body, else_body))
                scope = then_scope & else_scope
                fresh -= then_obs | else_obs
                observed |= then_obs | else_obs
            elif depth < MAX_DEPTH and roll < 0.6 and len(indices) < len(INDICES):
                index = INDICES[len(indices)]
                hi = "N" if self.chance(0.6) else int(self.rng.integers(1, 4))
                body, body_scope, body_obs = self.block(scope, indices + (index,), depth + 1)
                out.append(For(index, 1, hi, body))
                scope |= body_scope
                fresh -= body_obs
                observed |= body_obs
            else:
                stmt = self.sample(scope)
                out.append(stmt)
                scope.add(stmt.target)
                # An approx draw would almost never equal the synthesized datum.
                if stmt.ann is Annotation.APPROX:
                    fresh.discard(stmt.target)
                else:
                    fresh.add(stmt.target)
        return tuple(out), scope, observed


def generate_program(rng: np.random.Generator, name: str = "fuzz") -> Program:
    """A random program that passes validation."""
    gen = _Generator(rng)
    first = Sample(gen.pick(GAUSSIAN_VARS), gen.annotation(), Gaussian(gen.literal(), gen.literal()))
    body, scope, _ = gen.block({first.target}, (), 0)
    n = int(rng.integers(1, 4))
    return Program(
        name=name,
        params=tuple(gen.params),
        consts=(("N", n),),
        body=(first,) + body,
        result=gen.pick(sorted(scope | {first.target})),
    )


# ============================================================
# SOUNDNESS
# ============================================================

@dataclass
class FuzzReport:
    programs: int = 0
    runs: int = 0
    failures: List[dict] = field(default_factory=list)
    exact_sites: int = 0
    empirically_exact: int = 0
    verified_exact: int = 0

    @property
    def precision(self) -> Optional[float]:
        """Share of never-sampled exact annotations that the analysis verified."""
        if not self.empirically_exact:
            return None
        return self.verified_exact / self.empirically_exact

    def to_dict(self) -> dict:
        return {
            "programs": self.programs,
            "runs": self.runs,
            "failures": list(self.failures),
            "exact_sites": self.exact_sites,
            "empirically_exact": self.empirically_exact,
            "verified_exact": self.verified_exact,
            "precision": self.precision,
        }


def check_program(checked, report: FuzzReport, seeds: int = 20, particles: int = 16) -> None:
    """
    Run `checked` across `seeds` seeds and record every Verified exact site
    that some run sampled.

    Runs use the program with exact annotations dropped, so a violation shows
    up as an entry in the sampled variables instead of aborting the run.
    """
    division = analyze_division(checked)
    relaxed = checked.without_exact()
    sampled_sites: Set[int] = set()
    for seed in range(seeds):
        data = synthesize(checked, seed=seed)
        try:
            result = run(relaxed, data, RunConfig(particles=particles, seed=seed))
        except AllParticlesDead:
            continue
        report.runs += 1
        sampled_sites.update(sid for _, sid, _ in result.diagnostics.sampled_vars)

    report.programs += 1
    for verdict in division.verdicts:
        report.exact_sites += 1
        sampled = verdict.site in sampled_sites
        if verdict.verdict == VERIFIED and sampled:
            report.failures.append({"program": checked.program.name, "var": verdict.var, "site": verdict.site})
            logger.error("Verified exact '%s' (stmt %d) was sampled in %s",
                         verdict.var, verdict.site, checked.program.name)
        if not sampled:
            report.empirically_exact += 1
            report.verified_exact += verdict.verdict == VERIFIED


def soundness_fuzz(gen_seed: int, count: int, seeds: int = 20, particles: int = 16) -> FuzzReport:
    """
    Generate `count` programs and check every Verified exact annotation
    against `seeds` runs of the SSI engine.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([gen_seed, 3])))
    report = FuzzReport()
    for k in range(count):
        checked = validate(generate_program(rng, name=f"fuzz_{gen_seed}_{k}"))
        check_program(checked, report, seeds=seeds, particles=particles)
    logger.info("Fuzzed %d programs (%d runs): %d soundness failure(s), precision %s",
                report.programs, report.runs, len(report.failures), report.precision)
    return report
