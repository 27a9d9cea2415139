"""Typed AST for MiniLang.

Every node is an immutable dataclass; source positions are carried but
excluded from equality so that ``parse(pretty_print(u)) == u`` holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Tuple, Union


# --------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class PrimType:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ArrayType:
    elem: "Type"

    def __str__(self) -> str:
        return f"[{self.elem}]"


Type = Union[PrimType, ArrayType]

INT = PrimType("Int")
BOOL = PrimType("Bool")
STR = PrimType("Str")


def parse_type_name(text: str) -> Type:
    """Inverse of ``str(type)``: ``"[[Int]]"`` -> ArrayType(ArrayType(INT))."""
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        return ArrayType(parse_type_name(text[1:-1]))
    for t in (INT, BOOL, STR):
        if t.name == text:
            return t
    raise ValueError(f"unknown type {text!r}")


# --------------------------------------------------------------------------
# Statement identity


@dataclass(frozen=True, order=True)
class StatementId:
    unit: str
    function: str
    path: Tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.unit}::{self.function}::{'.'.join(map(str, self.path))}"

    @classmethod
    def parse(cls, text: str) -> "StatementId":
        unit, function, path = text.rsplit("::", 2)
        return cls(unit, function, tuple(int(p) for p in path.split(".")) if path else ())


Pos = Tuple[int, int]
_NOPOS: Pos = (0, 0)


def _pos():
    return field(default=_NOPOS, compare=False, repr=False)


# --------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class IntLit:
    value: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    pos: Pos = _pos()


@dataclass(frozen=True)
class StrLit:
    value: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Var:
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class ArrayLit:
    elems: Tuple["Expr", ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class NewArray:
    """``new T[n]``: an array of ``n`` default-initialised ``T`` values."""

    elem_type: Type
    size: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Index:
    target: "Expr"
    index: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Expr", ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos = _pos()


Expr = Union[IntLit, BoolLit, StrLit, Var, ArrayLit, NewArray, Index, Call, Unary, Binary]


def sub_expressions(expr: Expr) -> Tuple[Expr, ...]:
    if isinstance(expr, (IntLit, BoolLit, StrLit, Var)):
        return ()
    if isinstance(expr, ArrayLit):
        return expr.elems
    if isinstance(expr, NewArray):
        return (expr.size,)
    if isinstance(expr, Index):
        return (expr.target, expr.index)
    if isinstance(expr, Call):
        return expr.args
    if isinstance(expr, Unary):
        return (expr.operand,)
    return (expr.left, expr.right)


def walk_expr(expr: Expr) -> Iterator[Expr]:
    yield expr
    for sub in sub_expressions(expr):
        yield from walk_expr(sub)


# --------------------------------------------------------------------------
# Statements


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: Type
    init: Expr
    sid: Optional[StatementId] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assign:
    target: Expr  # Var or Index
    op: str  # "=", "+=", ...
    value: Expr
    sid: Optional[StatementId] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    sid: Optional[StatementId] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Block:
    stmts: Tuple["Statement", ...]
    sid: Optional[StatementId] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Block
    orelse: Optional[Block] = None
    sid: Optional[StatementId] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: Block
    sid: Optional[StatementId] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Return:
    value: Optional[Expr] = None
    sid: Optional[StatementId] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Break:
    sid: Optional[StatementId] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Continue:
    sid: Optional[StatementId] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Throw:
    value: Expr
    sid: Optional[StatementId] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Try:
    body: Block
    handler: Block
    sid: Optional[StatementId] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assert:
    """Test-unit only: fails the running test when the condition is false."""

    cond: Expr
    sid: Optional[StatementId] = None
    pos: Pos = _pos()


Statement = Union[VarDecl, Assign, ExprStmt, Block, If, While, Return, Break, Continue, Throw, Try, Assert]

STATEMENT_KINDS = (
    "VarDecl", "Assign", "ExprStmt", "If", "While", "Return",
    "Break", "Continue", "Throw", "Try", "Block", "Assert",
)


def kind_of(stmt: Statement) -> str:
    return type(stmt).__name__


def child_statements(stmt: Statement) -> Tuple[Statement, ...]:
    """Statement children in path order (If: then, else; Try: body, handler)."""
    if isinstance(stmt, Block):
        return stmt.stmts
    if isinstance(stmt, If):
        return (stmt.then,) if stmt.orelse is None else (stmt.then, stmt.orelse)
    if isinstance(stmt, While):
        return (stmt.body,)
    if isinstance(stmt, Try):
        return (stmt.body, stmt.handler)
    return ()


def with_children(stmt: Statement, children: Tuple[Statement, ...]) -> Statement:
    if isinstance(stmt, Block):
        return replace(stmt, stmts=tuple(children))
    if isinstance(stmt, If):
        return replace(stmt, then=children[0], orelse=children[1] if len(children) > 1 else None)
    if isinstance(stmt, While):
        return replace(stmt, body=children[0])
    if isinstance(stmt, Try):
        return replace(stmt, body=children[0], handler=children[1])
    assert not children
    return stmt


def own_expressions(stmt: Statement) -> Tuple[Expr, ...]:
    """Expressions held directly by ``stmt`` (not by nested statements)."""
    if isinstance(stmt, VarDecl):
        return (stmt.init,)
    if isinstance(stmt, Assign):
        return (stmt.target, stmt.value)
    if isinstance(stmt, ExprStmt):
        return (stmt.expr,)
    if isinstance(stmt, (If, While, Assert)):
        return (stmt.cond,)
    if isinstance(stmt, Return):
        return () if stmt.value is None else (stmt.value,)
    if isinstance(stmt, Throw):
        return (stmt.value,)
    return ()


def walk(stmt: Statement) -> Iterator[Statement]:
    """Pre-order traversal of ``stmt`` and all nested statements."""
    yield stmt
    for child in child_statements(stmt):
        yield from walk(child)


def count_statements(stmt: Statement) -> int:
    return sum(1 for _ in walk(stmt))


# --------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class Param:
    name: str
    type: Type


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    params: Tuple[Param, ...]
    return_type: Optional[Type]  # None is Void
    body: Block
    is_test: bool = False
    pos: Pos = _pos()

    def statements(self) -> Iterator[Statement]:
        """Every statement in the body, excluding the body block itself."""
        for s in self.body.stmts:
            yield from walk(s)


@dataclass(frozen=True)
class SourceUnit:
    path: str
    functions: Tuple[FunctionDecl, ...]
    kind: str = "program"  # "program" | "test"

    def function(self, name: str) -> FunctionDecl:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(name)


def number_function(fn: FunctionDecl, unit_path: str) -> FunctionDecl:
    """Assign depth-first StatementIds to every statement of ``fn``."""

    def number(stmt: Statement, path: Tuple[int, ...]) -> Statement:
        kids = child_statements(stmt)
        if kids:
            stmt = with_children(stmt, tuple(number(k, path + (i,)) for i, k in enumerate(kids)))
        return replace(stmt, sid=StatementId(unit_path, fn.name, path))

    body = replace(fn.body, stmts=tuple(number(s, (i,)) for i, s in enumerate(fn.body.stmts)))
    return replace(fn, body=body)


def strip_ids(stmt: Statement) -> Statement:
    kids = child_statements(stmt)
    if kids:
        stmt = with_children(stmt, tuple(strip_ids(k) for k in kids))
    return replace(stmt, sid=None)
