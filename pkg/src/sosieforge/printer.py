"""Canonical MiniLang pretty-printer."""

from __future__ import annotations

from typing import Iterable, List

from .nodes import (
    ArrayLit, Assert, Assign, Binary, Block, BoolLit, Break, Call, Continue, Expr, ExprStmt,
    FunctionDecl, If, Index, IntLit, NewArray, Return, SourceUnit, Statement, StrLit, Throw,
    Try, Unary, Var, VarDecl, While,
)
from .parser import BINARY_PRECEDENCE, UNARY_PRECEDENCE

INDENT = "    "
_POSTFIX_PRECEDENCE = 12


def _quote(s: str) -> str:
    body = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{body}"'


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return BINARY_PRECEDENCE[e.op]
    if isinstance(e, Unary):
        return UNARY_PRECEDENCE
    if isinstance(e, IntLit) and e.value < 0:
        return UNARY_PRECEDENCE
    return _POSTFIX_PRECEDENCE


def format_expr(e: Expr) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, StrLit):
        return _quote(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, ArrayLit):
        return "[" + ", ".join(format_expr(x) for x in e.elems) + "]"
    if isinstance(e, NewArray):
        return f"new {e.elem_type}[{format_expr(e.size)}]"
    if isinstance(e, Call):
        return f"{e.name}(" + ", ".join(format_expr(x) for x in e.args) + ")"
    if isinstance(e, Index):
        return f"{_wrap(e.target, _POSTFIX_PRECEDENCE)}[{format_expr(e.index)}]"
    if isinstance(e, Unary):
        inner = _wrap(e.operand, UNARY_PRECEDENCE)
        # keep "- -x" from lexing as a single token sequence of its own
        sep = " " if inner.startswith(e.op) or (e.op == "-" and inner.startswith("-")) else ""
        return f"{e.op}{sep}{inner}"
    prec = BINARY_PRECEDENCE[e.op]
    left = _wrap(e.left, prec)
    right = _wrap(e.right, prec + 1)
    return f"{left} {e.op} {right}"


def _wrap(e: Expr, min_prec: int) -> str:
    text = format_expr(e)
    return f"({text})" if _prec(e) < min_prec else text


def _block_lines(block: Block, depth: int) -> List[str]:
    if not block.stmts:
        return ["{ }"]
    lines = ["{"]
    for s in block.stmts:
        lines.extend(statement_lines(s, depth + 1))
    lines.append(INDENT * depth + "}")
    return lines


def _attach(prefix: str, block_lines: List[str]) -> List[str]:
    return [prefix + block_lines[0]] + block_lines[1:]


def statement_lines(s: Statement, depth: int = 0) -> List[str]:
    pad = INDENT * depth
    if isinstance(s, VarDecl):
        return [f"{pad}let {s.name}: {s.type} = {format_expr(s.init)};"]
    if isinstance(s, Assign):
        return [f"{pad}{format_expr(s.target)} {s.op} {format_expr(s.value)};"]
    if isinstance(s, ExprStmt):
        return [f"{pad}{format_expr(s.expr)};"]
    if isinstance(s, Return):
        return [f"{pad}return;" if s.value is None else f"{pad}return {format_expr(s.value)};"]
    if isinstance(s, Break):
        return [f"{pad}break;"]
    if isinstance(s, Continue):
        return [f"{pad}continue;"]
    if isinstance(s, Throw):
        return [f"{pad}throw {format_expr(s.value)};"]
    if isinstance(s, Assert):
        return [f"{pad}assert {format_expr(s.cond)};"]
    if isinstance(s, Block):
        return _attach(pad, _block_lines(s, depth))
    if isinstance(s, While):
        return _attach(f"{pad}while ({format_expr(s.cond)}) ", _block_lines(s.body, depth))
    if isinstance(s, Try):
        lines = _attach(f"{pad}try ", _block_lines(s.body, depth))
        handler = _block_lines(s.handler, depth)
        lines[-1] = lines[-1] + " catch " + handler[0]
        return lines + handler[1:]
    if isinstance(s, If):
        lines = _attach(f"{pad}if ({format_expr(s.cond)}) ", _block_lines(s.then, depth))
        if s.orelse is not None:
            orelse = s.orelse
            if len(orelse.stmts) == 1 and isinstance(orelse.stmts[0], If):
                tail = statement_lines(orelse.stmts[0], depth)
                tail[0] = tail[0][len(pad):]
            else:
                tail = _block_lines(orelse, depth)
            lines[-1] = lines[-1] + " else " + tail[0]
            lines.extend(tail[1:])
        return lines
    raise TypeError(f"not a statement: {s!r}")


def format_statement(s: Statement, depth: int = 0) -> str:
    return "\n".join(statement_lines(s, depth))


def format_function(fn: FunctionDecl) -> str:
    params = ", ".join(f"{p.name}: {p.type}" for p in fn.params)
    ret = f" -> {fn.return_type}" if fn.return_type is not None else ""
    return "\n".join(_attach(f"fn {fn.name}({params}){ret} ", _block_lines(fn.body, 0)))


def pretty_print(unit: SourceUnit) -> str:
    return "\n\n".join(format_function(fn) for fn in unit.functions) + "\n"


def pretty_print_program(units: Iterable[SourceUnit]) -> str:
    return "".join(f"// {u.path}\n{pretty_print(u)}" for u in units)
