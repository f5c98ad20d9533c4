# hybrid/lang
# Parsing, validation and rendering of `.hppl` model programs.

from .ast import (
    Annotation, BinOp, Bernoulli, Datum, For, Gaussian, If, Num, Observe, Program, Sample, Var,
    bernoulli_count, free_vars, loop_count, walk,
)
from .parser import parse, parse_file
from .render import render
from .validate import CheckedProgram, collect_errors, validate

__all__ = [
    "Annotation", "BinOp", "Bernoulli", "Datum", "For", "Gaussian", "If", "Num", "Observe",
    "Program", "Sample", "Var", "bernoulli_count", "free_vars", "loop_count", "walk",
    "parse", "parse_file", "render",
    "CheckedProgram", "collect_errors", "validate",
]
