# hybrid/lang/parser.py
"""
Source text -> Program, built on a LALR grammar (grammar.lark).
"""
import logging
from functools import lru_cache
from pathlib import Path
from typing import Union

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from ..errors import ParseError
from .ast import (
    Annotation, BinOp, Bernoulli, Datum, For, Gaussian, If, Num, Observe, Program, Sample, Var, walk,
)

logger = logging.getLogger(__name__)

GRAMMAR_FILE = Path(__file__).parent / "grammar.lark"


@lru_cache(maxsize=1)
def get_parser() -> Lark:
    return Lark(
        GRAMMAR_FILE.read_text(encoding="utf-8"),
        parser="lalr",
        propagate_positions=True,
        maybe_placeholders=True,
    )


class _ToAst(Transformer):
    """Turns the lark tree into AST dataclasses."""

    # ── expressions ──────────────────────────────────────────────
    def num(self, children):
        return Num(float(children[0]))

    def var(self, children):
        return Var(str(children[0]))

    def datum(self, children):
        return Datum(str(children[0]), str(children[1]))

    def neg(self, children):
        (inner,) = children
        if isinstance(inner, Num):
            return Num(-inner.value)
        return BinOp("*", Num(-1.0), inner)

    def add(self, children):
        return BinOp("+", children[0], children[1])

    def sub(self, children):
        return BinOp("-", children[0], children[1])

    def mul(self, children):
        return BinOp("*", children[0], children[1])

    def gaussian(self, children):
        return Gaussian(children[0], children[1])

    def bernoulli(self, children):
        return Bernoulli(children[0])

    def annotation(self, children):
        return Annotation(str(children[0]))

    def int_bound(self, children):
        return int(children[0])

    def name_bound(self, children):
        return str(children[0])

    # ── statements ───────────────────────────────────────────────
    @v_args(meta=True)
    def sample(self, meta, children):
        target, ann, dist = children
        return Sample(str(target), ann or Annotation.NONE, dist, line=meta.line)

    @v_args(meta=True)
    def observe(self, meta, children):
        return Observe(str(children[0]), children[1], line=meta.line)

    def block(self, children):
        return tuple(children)

    @v_args(meta=True)
    def if_stmt(self, meta, children):
        cond, then_body, else_body = children
        return If(str(cond), then_body, else_body or (), line=meta.line)

    @v_args(meta=True)
    def for_stmt(self, meta, children):
        index, lo, hi, body = children
        return For(str(index), lo, hi, body, line=meta.line)

    # ── program ──────────────────────────────────────────────────
    def params(self, children):
        return tuple(str(c) for c in children)

    def const_decl(self, children):
        name, value = children
        return (str(name), None if value is None else int(value))

    def function(self, children):
        name, params = children[0], children[1]
        *stmts, result = children[2:]
        return str(name), params or (), tuple(stmts), str(result)

    def start(self, children):
        *decls, (name, params, body, result) = children
        consts = dict(decls)
        # Loop bounds naming an undeclared constant must be supplied later (--set).
        for stmt in walk(body):
            if isinstance(stmt, For):
                for bound in (stmt.lo, stmt.hi):
                    if isinstance(bound, str) and bound not in consts:
                        consts[bound] = None
        return Program(name, params, tuple(sorted(consts.items())), body, result)


def parse(text: str) -> Program:
    """
    Parse model source text.

    Raises:
        ParseError: with line/column and the set of expected tokens
    """
    try:
        tree = get_parser().parse(text)
    except UnexpectedToken as e:
        raise ParseError(f"unexpected token {e.token!r}", e.line, e.column, e.expected) from None
    except UnexpectedCharacters as e:
        raise ParseError(f"unexpected character {text[e.pos_in_stream]!r}", e.line, e.column,
                         e.allowed or ()) from None
    except UnexpectedEOF as e:
        line = text.count("\n") + 1
        column = len(text) - text.rfind("\n")
        raise ParseError("unexpected end of input", line, column, e.expected) from None
    except UnexpectedInput as e:
        raise ParseError(str(e), getattr(e, "line", 0), getattr(e, "column", 0)) from None
    return _ToAst().transform(tree)


def parse_file(path: Union[str, Path]) -> Program:
    """Read a `.hppl` file (UTF-8) and parse it."""
    path = Path(path)
    logger.debug("Parsing %s", path)
    return parse(path.read_text(encoding="utf-8"))
