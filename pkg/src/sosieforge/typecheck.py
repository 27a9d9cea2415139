"""Static checking for MiniLang and the per-statement scope table it yields."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

from .nodes import (
    BOOL, INT, STR, ArrayLit, ArrayType, Assert, Assign, Binary, Block, BoolLit, Break, Call,
    Continue, Expr, ExprStmt, FunctionDecl, If, Index, IntLit, NewArray, PrimType, Return,
    SourceUnit, Statement, StatementId, StrLit, Throw, Try, Type, Unary, Var, VarDecl, While,
)
from .parser import LangError
from .program import Program

ScopeTable = Dict[StatementId, Dict[str, Type]]
"""StatementId -> variables (name -> type) visible just before the statement runs."""

BUILTINS = ("len", "push", "pop", "str", "chr", "char_at", "substr", "print", "abs", "min", "max")

_INT_OPS = {"-", "*", "/", "%", "&", "|", "^", "<<", ">>", ">>>"}
_CMP_OPS = {"<", "<=", ">", ">="}


class TypeCheckError(LangError):
    def __init__(self, message: str, sid: Optional[StatementId] = None, pos=None):
        where = str(sid) if sid is not None else "<program>"
        if pos and pos != (0, 0):
            where += f" (line {pos[0]}, col {pos[1]})"
        super().__init__(f"{where}: {message}")
        self.message = message
        self.sid = sid


@dataclass(frozen=True)
class FunctionSig:
    params: Tuple[Type, ...]
    ret: Optional[Type]


def signatures(program: Program) -> Dict[str, FunctionSig]:
    sigs: Dict[str, FunctionSig] = {}
    for unit in program.units:
        for fn in unit.functions:
            if fn.name in sigs:
                raise TypeCheckError(f"duplicate function '{fn.name}' in {unit.path}")
            if fn.name in BUILTINS:
                raise TypeCheckError(f"'{fn.name}' shadows a builtin ({unit.path})")
            sigs[fn.name] = FunctionSig(tuple(p.type for p in fn.params), fn.return_type)
    return sigs


class _Checker:
    def __init__(self, sigs: Mapping[str, FunctionSig], fn: FunctionDecl, kind: str):
        self.sigs = sigs
        self.fn = fn
        self.kind = kind
        self.scopes: ScopeTable = {}
        self.sid: Optional[StatementId] = None
        self.pos = None

    def fail(self, message: str):
        raise TypeCheckError(message, self.sid, self.pos)

    # -- expressions ------------------------------------------------------

    def expr(self, e: Expr, env: Mapping[str, Type]) -> Optional[Type]:
        """Type of ``e``; ``None`` only for calls to void functions."""
        if isinstance(e, IntLit):
            return INT
        if isinstance(e, BoolLit):
            return BOOL
        if isinstance(e, StrLit):
            return STR
        if isinstance(e, Var):
            t = env.get(e.name)
            if t is None:
                self.fail(f"undefined variable '{e.name}'")
            return t
        if isinstance(e, ArrayLit):
            if not e.elems:
                self.fail("empty array literal; use new T[0]")
            first = self.value(e.elems[0], env)
            for x in e.elems[1:]:
                if self.value(x, env) != first:
                    self.fail("array literal elements differ in type")
            return ArrayType(first)
        if isinstance(e, NewArray):
            self.expect(e.size, INT, env, "array size")
            return ArrayType(e.elem_type)
        if isinstance(e, Index):
            t = self.value(e.target, env)
            self.expect(e.index, INT, env, "index")
            if isinstance(t, ArrayType):
                return t.elem
            self.fail(f"cannot index a value of type {t}")
        if isinstance(e, Unary):
            t = self.value(e.operand, env)
            want = BOOL if e.op == "!" else INT
            if t != want:
                self.fail(f"operator '{e.op}' needs {want}, got {t}")
            return want
        if isinstance(e, Binary):
            return self.binary(e, env)
        if isinstance(e, Call):
            return self.call(e, env)
        self.fail(f"unknown expression {e!r}")

    def value(self, e: Expr, env) -> Type:
        t = self.expr(e, env)
        if t is None:
            self.fail("void call used as a value")
        return t

    def expect(self, e: Expr, want: Type, env, what: str) -> None:
        t = self.value(e, env)
        if t != want:
            self.fail(f"{what} must be {want}, got {t}")

    def binary(self, e: Binary, env) -> Type:
        lt = self.value(e.left, env)
        rt = self.value(e.right, env)
        op = e.op
        if op in ("&&", "||"):
            if lt != BOOL or rt != BOOL:
                self.fail(f"operator '{op}' needs Bool operands")
            return BOOL
        if op in ("==", "!="):
            if lt != rt:
                self.fail(f"cannot compare {lt} with {rt}")
            return BOOL
        if op == "+" and lt == STR and rt == STR:
            return STR
        if op in _CMP_OPS:
            if lt != rt or lt not in (INT, STR):
                self.fail(f"operator '{op}' needs two Int or two Str operands")
            return BOOL
        if lt != INT or rt != INT:
            self.fail(f"operator '{op}' needs Int operands, got {lt} and {rt}")
        return INT

    def call(self, e: Call, env) -> Optional[Type]:
        name, args = e.name, e.args
        if name in BUILTINS:
            return self.builtin(e, env)
        sig = self.sigs.get(name)
        if sig is None:
            self.fail(f"call to undefined function '{name}'")
        if len(args) != len(sig.params):
            self.fail(f"'{name}' expects {len(sig.params)} arguments, got {len(args)}")
        for i, (a, p) in enumerate(zip(args, sig.params)):
            t = self.value(a, env)
            if t != p:
                self.fail(f"argument {i + 1} of '{name}' must be {p}, got {t}")
        return sig.ret

    def builtin(self, e: Call, env) -> Optional[Type]:
        name, args = e.name, e.args
        arity = {"len": 1, "push": 2, "pop": 1, "str": 1, "chr": 1, "char_at": 2, "substr": 3,
                 "print": 1, "abs": 1, "min": 2, "max": 2}[name]
        if len(args) != arity:
            self.fail(f"'{name}' expects {arity} arguments, got {len(args)}")
        ts = [self.value(a, env) for a in args]
        if name == "len":
            if not (isinstance(ts[0], ArrayType) or ts[0] == STR):
                self.fail("len() needs an array or Str")
            return INT
        if name in ("push", "pop"):
            if not isinstance(ts[0], ArrayType):
                self.fail(f"{name}() needs an array")
            if name == "pop":
                return ts[0].elem
            if ts[1] != ts[0].elem:
                self.fail(f"push() element must be {ts[0].elem}, got {ts[1]}")
            return None
        if name == "print":
            return None
        want = {"str": [INT], "chr": [INT], "char_at": [STR, INT], "substr": [STR, INT, INT],
                "abs": [INT], "min": [INT, INT], "max": [INT, INT]}[name]
        if ts != want:
            self.fail(f"{name}() expects ({', '.join(map(str, want))})")
        return STR if name in ("str", "chr", "substr") else INT

    # -- statements -------------------------------------------------------

    def block(self, block: Block, env: Dict[str, Type], loops: int) -> None:
        env = dict(env)
        for s in block.stmts:
            self.stmt(s, env, loops)

    def stmt(self, s: Statement, env: Dict[str, Type], loops: int) -> None:
        self.sid, self.pos = s.sid, s.pos
        self.scopes[s.sid] = dict(env)
        if isinstance(s, VarDecl):
            if s.name in env:
                self.fail(f"variable '{s.name}' is already declared")
            self.expect(s.init, s.type, env, f"initializer of '{s.name}'")
            env[s.name] = s.type
        elif isinstance(s, Assign):
            tt = self.value(s.target, env)
            vt = self.value(s.value, env)
            if s.op == "=":
                if tt != vt:
                    self.fail(f"cannot assign {vt} to {tt}")
            elif s.op == "+=" and tt == STR and vt == STR:
                pass
            elif tt != INT or vt != INT:
                self.fail(f"'{s.op}' needs Int operands")
        elif isinstance(s, ExprStmt):
            self.expr(s.expr, env)
        elif isinstance(s, Block):
            self.block(s, env, loops)
        elif isinstance(s, If):
            self.expect(s.cond, BOOL, env, "if condition")
            self.stmt(s.then, env, loops)
            if s.orelse is not None:
                self.stmt(s.orelse, env, loops)
        elif isinstance(s, While):
            self.expect(s.cond, BOOL, env, "while condition")
            self.stmt(s.body, env, loops + 1)
        elif isinstance(s, Return):
            want = self.fn.return_type
            if s.value is None:
                if want is not None:
                    self.fail(f"missing return value of type {want}")
            else:
                got = self.value(s.value, env)
                if want is None:
                    self.fail("void function returns a value")
                if got != want:
                    self.fail(f"return type must be {want}, got {got}")
        elif isinstance(s, (Break, Continue)):
            if loops == 0:
                self.fail(f"'{type(s).__name__.lower()}' outside of a loop")
        elif isinstance(s, Throw):
            self.expect(s.value, STR, env, "thrown value")
        elif isinstance(s, Try):
            self.stmt(s.body, env, loops)
            self.stmt(s.handler, env, loops)
        elif isinstance(s, Assert):
            if self.kind != "test":
                self.fail("assert is only allowed in test units")
            self.expect(s.cond, BOOL, env, "assertion")
        else:
            self.fail(f"unknown statement {s!r}")

    def function(self) -> ScopeTable:
        fn = self.fn
        env: Dict[str, Type] = {}
        for p in fn.params:
            if p.name in env:
                raise TypeCheckError(f"duplicate parameter '{p.name}' in '{fn.name}'")
            env[p.name] = p.type
        self.block(fn.body, env, 0)
        if fn.return_type is not None and completes_normally(fn.body):
            raise TypeCheckError(f"function '{fn.name}' can finish without returning {fn.return_type}")
        return self.scopes


def completes_normally(s: Statement) -> bool:
    """Conservative reachability: can control fall off the end of ``s``?"""
    if isinstance(s, Block):
        return all(completes_normally(x) for x in s.stmts)
    if isinstance(s, (Return, Throw, Break, Continue)):
        return False
    if isinstance(s, If):
        return s.orelse is None or completes_normally(s.then) or completes_normally(s.orelse)
    if isinstance(s, While):
        infinite = isinstance(s.cond, BoolLit) and s.cond.value
        return not infinite or _breaks_out(s.body)
    if isinstance(s, Try):
        return completes_normally(s.body) or completes_normally(s.handler)
    return True


def _breaks_out(s: Statement) -> bool:
    if isinstance(s, Break):
        return True
    if isinstance(s, While):
        return False
    if isinstance(s, Block):
        return any(_breaks_out(x) for x in s.stmts)
    if isinstance(s, If):
        return _breaks_out(s.then) or (s.orelse is not None and _breaks_out(s.orelse))
    if isinstance(s, Try):
        return _breaks_out(s.body) or _breaks_out(s.handler)
    return False


def check_function(fn: FunctionDecl, sigs: Mapping[str, FunctionSig], kind: str = "program") -> ScopeTable:
    """Check one function against the program's signature table."""
    if len({p.name for p in fn.params}) != len(fn.params):
        raise TypeCheckError(f"duplicate parameter name in '{fn.name}'")
    if kind == "test":
        if not fn.is_test or fn.params or fn.return_type is not None:
            raise TypeCheckError(f"test unit function '{fn.name}' must be 'fn test_*()' with no result")
    return _Checker(sigs, fn, kind).function()


def typecheck(program: Union[Program, Iterable[SourceUnit]]) -> ScopeTable:
    """Check the whole program; returns the scope table or raises TypeCheckError."""
    program = Program.of(program)
    sigs = signatures(program)
    table: ScopeTable = {}
    for unit in program.units:
        for fn in unit.functions:
            table.update(check_function(fn, sigs, unit.kind))
    return table


def expr_type(e: Expr, env: Mapping[str, Type], sigs: Mapping[str, FunctionSig]) -> Optional[Type]:
    """Type of an already-checked expression under ``env``."""
    checker = _Checker(sigs, None, "program")  # type: ignore[arg-type]
    return checker.expr(e, env)


__all__ = [
    "ScopeTable", "TypeCheckError", "FunctionSig", "BUILTINS", "typecheck", "check_function",
    "signatures", "expr_type", "completes_normally", "PrimType",
]
