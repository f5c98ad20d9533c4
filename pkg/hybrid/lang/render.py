# hybrid/lang/render.py
"""
Program -> source text. parse(render(p)) == p for every valid program.
"""
from typing import List

from .ast import Annotation, BinOp, Bernoulli, Datum, For, Gaussian, If, Num, Observe, Program, Sample, Var, walk

INDENT = "  "

# Binding strength; subtraction's right operand needs parentheses at equal strength.
_PREC = {"+": 1, "-": 1, "*": 2}


def render_expr(expr, parent_prec: int = 0, right_side: bool = False) -> str:
    if isinstance(expr, Num):
        text = repr(float(expr.value))
        # A leading minus binds like a factor; wrap it when it follows an operator.
        return f"({text})" if text.startswith("-") and parent_prec else text
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Datum):
        return f"{expr.param}[{expr.index}]"
    if isinstance(expr, BinOp):
        prec = _PREC[expr.op]
        left = render_expr(expr.left, prec)
        right = render_expr(expr.right, prec, right_side=True)
        text = f"{left} {expr.op} {right}"
        if prec < parent_prec or (prec == parent_prec and right_side):
            return f"({text})"
        return text
    raise TypeError(f"not an expression: {expr!r}")


def render_dist(dist) -> str:
    if isinstance(dist, Gaussian):
        return f"gaussian({render_expr(dist.mean)}, {render_expr(dist.variance)})"
    if isinstance(dist, Bernoulli):
        return f"bernoulli({render_expr(dist.prob)})"
    raise TypeError(f"not a distribution: {dist!r}")


def _render_block(stmts, depth: int, out: List[str]) -> None:
    pad = INDENT * depth
    for stmt in stmts:
        if isinstance(stmt, Sample):
            ann = "" if stmt.ann is Annotation.NONE else f"{stmt.ann.value} "
            out.append(f"{pad}{stmt.target} <- {ann}{render_dist(stmt.dist)};")
        elif isinstance(stmt, Observe):
            out.append(f"{pad}observe({stmt.subject}, {render_expr(stmt.datum)});")
        elif isinstance(stmt, If):
            out.append(f"{pad}if ({stmt.cond}) {{")
            _render_block(stmt.then_body, depth + 1, out)
            if stmt.else_body:
                out.append(f"{pad}}} else {{")
                _render_block(stmt.else_body, depth + 1, out)
            out.append(f"{pad}}}")
        elif isinstance(stmt, For):
            out.append(f"{pad}for {stmt.index} in {stmt.lo} .. {stmt.hi} {{")
            _render_block(stmt.body, depth + 1, out)
            out.append(f"{pad}}};")
        else:
            raise TypeError(f"not a statement: {stmt!r}")


def render(program: Program) -> str:
    """Render a program back to source, one statement per line."""
    out: List[str] = []
    for name, value in program.consts:
        if value is not None:
            out.append(f"const {name} = {value};")
        elif not _is_loop_bound(program, name):
            out.append(f"const {name};")
    out.append(f"function {program.name}({', '.join(program.params)}) {{")
    _render_block(program.body, 1, out)
    out.append(f"{INDENT}{program.result}")
    out.append("}")
    return "\n".join(out) + "\n"


def _is_loop_bound(program: Program, name: str) -> bool:
    return any(isinstance(s, For) and name in (s.lo, s.hi) for s in walk(program.body))
