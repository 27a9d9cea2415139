"""MiniLang execution engine.

Functions are compiled once into nests of Python closures; a compiled
function is cached by node identity, so a program variant that shares
most of its FunctionDecl objects with the original recompiles only the
function that changed.  Statement probes are compiled in only when an
event sink is supplied.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .nodes import (
    ArrayLit, ArrayType, Assert, Assign, Binary, Block, BoolLit, Break, Call, Continue, Expr,
    ExprStmt, FunctionDecl, If, Index, IntLit, NewArray, PrimType, Return, Statement,
    StatementId, StrLit, Throw, Try, Type, Unary, Var, VarDecl, While,
)
from .program import Program

DEFAULT_STEP_LIMIT = 10_000_000
MAX_CALL_DEPTH = 150
MAX_STR_LEN = 1 << 20
MAX_ARRAY_LEN = 1 << 22

_MIN = -(1 << 63)
_MAX = (1 << 63) - 1
_MASK = (1 << 64) - 1

_BRK, _CONT, _RET = 1, 2, 3


class MiniThrow(Exception):
    """A MiniLang exception (``throw`` or a runtime error); catchable by ``try``."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class StepLimitExceeded(Exception):
    pass


class AssertionFailed(Exception):
    def __init__(self, sid: StatementId):
        super().__init__(str(sid))
        self.sid = sid


@dataclass(frozen=True)
class ExecutionEvent:
    kind: str  # test_enter | test_exit | function_enter | function_exit | statement_hit
    test_id: int
    statement: Optional[StatementId] = None
    depth: int = 0
    function: Optional[str] = None
    passed: Optional[bool] = None


@dataclass(frozen=True)
class TestResult:
    test_id: int
    name: str
    status: str  # pass | fail | timeout
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


EventSink = Callable[[ExecutionEvent], None]


def wrap64(v: int) -> int:
    return ((v + (1 << 63)) & _MASK) - (1 << 63)


def _check_str(s: str) -> str:
    if len(s) > MAX_STR_LEN:
        raise MiniThrow("out of memory")
    return s


def _div(a, b):
    if b == 0:
        raise MiniThrow("division by zero")
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return q if q <= _MAX else wrap64(q)


def _mod(a, b):
    if b == 0:
        raise MiniThrow("division by zero")
    r = abs(a) % abs(b)
    return -r if a < 0 else r


def _add(a, b):
    v = a + b
    if type(v) is str:
        return v if len(v) <= MAX_STR_LEN else _check_str(v)
    return v if _MIN <= v <= _MAX else wrap64(v)


def _sub(a, b):
    v = a - b
    return v if _MIN <= v <= _MAX else wrap64(v)


def _mul(a, b):
    v = a * b
    return v if _MIN <= v <= _MAX else wrap64(v)


def _shl(a, b):
    return wrap64(a << (b & 63))


def _ushr(a, b):
    return wrap64((a & _MASK) >> (b & 63))


BINOPS: Dict[str, Callable] = {
    "+": _add, "-": _sub, "*": _mul, "/": _div, "%": _mod,
    "&": lambda a, b: a & b, "|": lambda a, b: a | b, "^": lambda a, b: a ^ b,
    "<<": _shl, ">>": lambda a, b: a >> (b & 63), ">>>": _ushr,
    "==": lambda a, b: a == b, "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
}


def default_value(t: Type):
    if isinstance(t, ArrayType):
        return []
    return {"Int": 0, "Bool": False, "Str": ""}[t.name]


# --------------------------------------------------------------------------
# builtins: (args list) -> value


def _b_len(a):
    return len(a[0])


def _b_push(a):
    arr = a[0]
    if len(arr) >= MAX_ARRAY_LEN:
        raise MiniThrow("out of memory")
    arr.append(a[1])


def _b_pop(a):
    if not a[0]:
        raise MiniThrow("pop from empty array")
    return a[0].pop()


def _b_chr(a):
    c = a[0]
    if not 0 <= c <= 0x10FFFF:
        raise MiniThrow("invalid character code")
    return chr(c)


def _b_char_at(a):
    s, i = a
    if not 0 <= i < len(s):
        raise MiniThrow("index out of bounds")
    return ord(s[i])


def _b_substr(a):
    s, i, j = a
    if not 0 <= i <= j <= len(s):
        raise MiniThrow("index out of bounds")
    return s[i:j]


BUILTIN_IMPLS: Dict[str, Callable] = {
    "len": _b_len,
    "push": _b_push,
    "pop": _b_pop,
    "str": lambda a: str(a[0]),
    "chr": _b_chr,
    "char_at": _b_char_at,
    "substr": _b_substr,
    "print": lambda a: None,
    "abs": lambda a: wrap64(abs(a[0])),
    "min": lambda a: min(a[0], a[1]),
    "max": lambda a: max(a[0], a[1]),
}


class _Ctx:
    __slots__ = ("steps", "limit", "depth", "funcs", "sink", "test_id")

    def __init__(self, funcs, limit, sink):
        self.steps = 0
        self.limit = limit
        self.depth = 0
        self.funcs = funcs
        self.sink = sink
        self.test_id = -1


def _overflow():
    raise StepLimitExceeded()


# --------------------------------------------------------------------------
# compilation


class _FunctionCompiler:
    def __init__(self, fn: FunctionDecl, fn_index: Mapping[str, int], instrument: bool, counts_depth: bool):
        self.fn = fn
        self.fn_index = fn_index
        self.instrument = instrument
        self.counts_depth = counts_depth
        self.slots: Dict[str, int] = {}
        for p in fn.params:
            self.slot(p.name)
        for s in fn.statements():
            if isinstance(s, VarDecl):
                self.slot(s.name)

    def slot(self, name: str) -> int:
        if name not in self.slots:
            self.slots[name] = len(self.slots) + 1  # slot 0 holds the return value
        return self.slots[name]

    # -- expressions ------------------------------------------------------

    def expr(self, e: Expr):
        if isinstance(e, (IntLit, BoolLit, StrLit)):
            v = e.value
            return lambda env, ctx: v
        if isinstance(e, Var):
            k = self.slots[e.name]
            return lambda env, ctx: env[k]
        if isinstance(e, ArrayLit):
            parts = [self.expr(x) for x in e.elems]
            return lambda env, ctx: [p(env, ctx) for p in parts]
        if isinstance(e, NewArray):
            return self.new_array(e)
        if isinstance(e, Index):
            tgt, idx = self.expr(e.target), self.expr(e.index)

            def index(env, ctx):
                arr = tgt(env, ctx)
                i = idx(env, ctx)
                if 0 <= i < len(arr):
                    return arr[i]
                raise MiniThrow("index out of bounds")
            return index
        if isinstance(e, Unary):
            inner = self.expr(e.operand)
            if e.op == "!":
                return lambda env, ctx: not inner(env, ctx)
            if e.op == "~":
                return lambda env, ctx: ~inner(env, ctx)
            return lambda env, ctx: _sub(0, inner(env, ctx))
        if isinstance(e, Binary):
            return self.binary(e)
        if isinstance(e, Call):
            return self.call(e)
        raise TypeError(f"cannot compile {e!r}")

    def new_array(self, e: NewArray):
        size = self.expr(e.size)
        elem = e.elem_type

        def new(env, ctx):
            n = size(env, ctx)
            if n < 0:
                raise MiniThrow("negative array size")
            if n > MAX_ARRAY_LEN:
                raise MiniThrow("out of memory")
            if isinstance(elem, ArrayType):
                return [[] for _ in range(n)]
            return [default_value(elem)] * n
        return new

    def binary(self, e: Binary):
        l, r = self.expr(e.left), self.expr(e.right)
        op = e.op
        if op == "&&":
            return lambda env, ctx: l(env, ctx) and r(env, ctx)
        if op == "||":
            return lambda env, ctx: l(env, ctx) or r(env, ctx)
        if op == "+":
            def add(env, ctx):
                v = l(env, ctx) + r(env, ctx)
                if type(v) is int:
                    return v if _MIN <= v <= _MAX else wrap64(v)
                return v if len(v) <= MAX_STR_LEN else _check_str(v)
            return add
        if op == "-":
            def sub(env, ctx):
                v = l(env, ctx) - r(env, ctx)
                return v if _MIN <= v <= _MAX else wrap64(v)
            return sub
        if op == "<":
            return lambda env, ctx: l(env, ctx) < r(env, ctx)
        if op == "<=":
            return lambda env, ctx: l(env, ctx) <= r(env, ctx)
        if op == ">":
            return lambda env, ctx: l(env, ctx) > r(env, ctx)
        if op == ">=":
            return lambda env, ctx: l(env, ctx) >= r(env, ctx)
        if op == "==":
            return lambda env, ctx: l(env, ctx) == r(env, ctx)
        if op == "!=":
            return lambda env, ctx: l(env, ctx) != r(env, ctx)
        f = BINOPS[op]
        return lambda env, ctx: f(l(env, ctx), r(env, ctx))

    def call(self, e: Call):
        args = [self.expr(a) for a in e.args]
        if e.name in BUILTIN_IMPLS:
            impl = BUILTIN_IMPLS[e.name]
            return lambda env, ctx: impl([a(env, ctx) for a in args])
        k = self.fn_index[e.name]
        if len(args) == 1:
            a0 = args[0]
            return lambda env, ctx: ctx.funcs[k]((a0(env, ctx),), ctx)
        if len(args) == 2:
            a0, a1 = args
            return lambda env, ctx: ctx.funcs[k]((a0(env, ctx), a1(env, ctx)), ctx)
        return lambda env, ctx: ctx.funcs[k]([a(env, ctx) for a in args], ctx)

    # -- statements -------------------------------------------------------

    def block(self, b: Block):
        stmts = tuple(self.stmt(s) for s in b.stmts)
        if not stmts:
            return lambda env, ctx: None
        if len(stmts) == 1:
            only = stmts[0]

            def block1(env, ctx):
                ctx.steps += 1
                if ctx.steps > ctx.limit:
                    _overflow()
                return only(env, ctx)
            return block1

        def block(env, ctx):
            for s in stmts:
                ctx.steps += 1
                if ctx.steps > ctx.limit:
                    _overflow()
                r = s(env, ctx)
                if r:
                    return r
            return None
        return block

    def stmt(self, s: Statement):
        run = self._stmt(s)
        if self.instrument:
            sid = s.sid
            inner = run

            def probe(env, ctx):
                ctx.sink(ExecutionEvent("statement_hit", ctx.test_id, sid, ctx.depth))
                return inner(env, ctx)
            return probe
        return run

    def _stmt(self, s: Statement):
        if isinstance(s, VarDecl):
            k = self.slots[s.name]
            init = self.expr(s.init)

            def decl(env, ctx):
                env[k] = init(env, ctx)
            return decl
        if isinstance(s, Assign):
            return self.assign(s)
        if isinstance(s, ExprStmt):
            ev = self.expr(s.expr)

            def expr_stmt(env, ctx):
                ev(env, ctx)
            return expr_stmt
        if isinstance(s, Block):
            return self.block(s)
        if isinstance(s, If):
            cond = self.expr(s.cond)
            then = self.stmt(s.then)
            if s.orelse is None:
                return lambda env, ctx: then(env, ctx) if cond(env, ctx) else None
            orelse = self.stmt(s.orelse)
            return lambda env, ctx: then(env, ctx) if cond(env, ctx) else orelse(env, ctx)
        if isinstance(s, While):
            cond = self.expr(s.cond)
            body = self.stmt(s.body)

            def loop(env, ctx):
                while True:
                    ctx.steps += 1
                    if ctx.steps > ctx.limit:
                        _overflow()
                    if not cond(env, ctx):
                        return None
                    r = body(env, ctx)
                    if r:
                        if r == _BRK:
                            return None
                        if r == _RET:
                            return r
            return loop
        if isinstance(s, Return):
            if s.value is None:
                return lambda env, ctx: _RET
            ev = self.expr(s.value)

            def ret(env, ctx):
                env[0] = ev(env, ctx)
                return _RET
            return ret
        if isinstance(s, Break):
            return lambda env, ctx: _BRK
        if isinstance(s, Continue):
            return lambda env, ctx: _CONT
        if isinstance(s, Throw):
            ev = self.expr(s.value)

            def throw(env, ctx):
                raise MiniThrow(ev(env, ctx))
            return throw
        if isinstance(s, Try):
            body, handler = self.stmt(s.body), self.stmt(s.handler)

            def try_(env, ctx):
                depth = ctx.depth
                try:
                    return body(env, ctx)
                except MiniThrow:
                    ctx.depth = depth
                    return handler(env, ctx)
            return try_
        if isinstance(s, Assert):
            cond = self.expr(s.cond)
            sid = s.sid

            def check(env, ctx):
                if not cond(env, ctx):
                    raise AssertionFailed(sid)
            return check
        raise TypeError(f"cannot compile {s!r}")

    def assign(self, s: Assign):
        value = self.expr(s.value)
        op = None if s.op == "=" else BINOPS[s.op[:-1]]
        if isinstance(s.target, Var):
            k = self.slots[s.target.name]
            if op is None:
                def set_var(env, ctx):
                    env[k] = value(env, ctx)
                return set_var

            def update_var(env, ctx):
                env[k] = op(env[k], value(env, ctx))
            return update_var
        tgt, idx = self.expr(s.target.target), self.expr(s.target.index)

        def set_item(env, ctx):
            arr = tgt(env, ctx)
            i = idx(env, ctx)
            if not 0 <= i < len(arr):
                raise MiniThrow("index out of bounds")
            v = value(env, ctx)
            arr[i] = v if op is None else op(arr[i], v)
        return set_item

    # -- function ---------------------------------------------------------

    def function(self):
        body = self.block(self.fn.body)
        nslots = len(self.slots) + 1
        nparams = len(self.fn.params)
        if not self.counts_depth:
            def run_test(args, ctx):
                env = [None] * nslots
                body(env, ctx)
            return run_test

        name = self.fn.name
        if self.instrument:
            def call_probed(args, ctx):
                if ctx.depth >= MAX_CALL_DEPTH:
                    raise MiniThrow("stack overflow")
                env = [None] * nslots
                env[1:nparams + 1] = args
                ctx.depth += 1
                ctx.steps += 1
                ctx.sink(ExecutionEvent("function_enter", ctx.test_id, None, ctx.depth, name))
                try:
                    body(env, ctx)
                finally:
                    ctx.sink(ExecutionEvent("function_exit", ctx.test_id, None, ctx.depth, name))
                ctx.depth -= 1
                return env[0]
            return call_probed

        def call(args, ctx):
            if ctx.depth >= MAX_CALL_DEPTH:
                raise MiniThrow("stack overflow")
            env = [None] * nslots
            env[1:nparams + 1] = args
            ctx.depth += 1
            ctx.steps += 1
            body(env, ctx)
            ctx.depth -= 1
            return env[0]
        return call


class Compiler:
    """Caches compiled functions across program variants with the same function names."""

    def __init__(self, function_names: Sequence[str], instrument: bool = False):
        self.fn_index = {n: i for i, n in enumerate(sorted(function_names))}
        self.instrument = instrument
        self._cache: Dict[int, Tuple[FunctionDecl, Callable]] = {}

    def compile_function(self, fn: FunctionDecl, kind: str) -> Callable:
        hit = self._cache.get(id(fn))
        if hit is not None and hit[0] is fn:
            return hit[1]
        compiled = _FunctionCompiler(fn, self.fn_index, self.instrument and kind == "program",
                                     counts_depth=kind == "program").function()
        self._cache[id(fn)] = (fn, compiled)
        return compiled

    def forget(self, fn: FunctionDecl) -> None:
        self._cache.pop(id(fn), None)

    def link(self, program: Program) -> List[Callable]:
        funcs: List[Optional[Callable]] = [None] * len(self.fn_index)
        for unit in program.units:
            for fn in unit.functions:
                funcs[self.fn_index[fn.name]] = self.compile_function(fn, unit.kind)
        return funcs


def _ensure_recursion_headroom() -> None:
    if sys.getrecursionlimit() < 10_000:
        sys.setrecursionlimit(10_000)


class Interpreter:
    """Runs the tests of one program; reusable across many ``run_test`` calls."""

    def __init__(self, program: Program, step_limit: int = DEFAULT_STEP_LIMIT,
                 probes: Optional[EventSink] = None, compiler: Optional[Compiler] = None):
        if step_limit < 1:
            raise ValueError("step_limit must be positive")
        _ensure_recursion_headroom()
        self.program = program
        self.step_limit = step_limit
        self.probes = probes
        if compiler is None:
            compiler = Compiler(list(program.functions), instrument=probes is not None)
        self.funcs = compiler.link(program)
        self.fn_index = compiler.fn_index
        self.tests = program.tests

    def run_test(self, test_id: int) -> TestResult:
        _, fn = self.tests[test_id]
        sink = self.probes
        ctx = _Ctx(self.funcs, self.step_limit, sink)
        ctx.test_id = test_id
        if sink is not None:
            sink(ExecutionEvent("test_enter", test_id))
        try:
            self.funcs[self.fn_index[fn.name]]((), ctx)
            result = TestResult(test_id, fn.name, "pass")
        except AssertionFailed as exc:
            result = TestResult(test_id, fn.name, "fail", f"assertion {exc.sid}")
        except MiniThrow as exc:
            result = TestResult(test_id, fn.name, "fail", f"uncaught throw: {exc.message}")
        except StepLimitExceeded:
            result = TestResult(test_id, fn.name, "timeout", f"exceeded {self.step_limit} steps")
        except RecursionError:
            result = TestResult(test_id, fn.name, "fail", "uncaught throw: stack overflow")
        if sink is not None:
            sink(ExecutionEvent("test_exit", test_id, passed=result.passed))
        return result

    def run_tests(self, order: Optional[Sequence[int]] = None, fail_fast: bool = False) -> List[TestResult]:
        results = []
        for tid in (range(len(self.tests)) if order is None else order):
            r = self.run_test(tid)
            results.append(r)
            if fail_fast and not r.passed:
                break
        return results


def run_suite(program, scope=None, step_limit: int = DEFAULT_STEP_LIMIT,
              probes: Optional[EventSink] = None) -> List[TestResult]:
    """Run every test of ``program`` in (unit path, declaration) order.

    ``scope`` is accepted for interface symmetry with the type checker and
    is not consulted: the program is assumed to typecheck.
    """
    return Interpreter(Program.of(program), step_limit, probes).run_tests()


def evaluate_expression(expr: Expr, environment: Dict[str, object], program: Optional[Program] = None,
                        step_limit: int = DEFAULT_STEP_LIMIT):
    """Evaluate a typechecked expression against ``environment`` (name -> value).

    Array values are shared by reference, so mutations made by builtins or
    called functions are visible in ``environment`` afterwards.
    """
    _ensure_recursion_headroom()
    names = list(program.functions) if program is not None else []
    compiler = Compiler(names)
    funcs = compiler.link(program) if program is not None else []
    fc = _FunctionCompiler(FunctionDecl("<expr>", (), None, Block(())), compiler.fn_index, False, False)
    for name in environment:
        fc.slot(name)
    ev = fc.expr(expr)
    env = [None] * (len(fc.slots) + 1)
    for name, value in environment.items():
        env[fc.slots[name]] = value
    ctx = _Ctx(funcs, step_limit, None)
    result = ev(env, ctx)
    for name in environment:
        environment[name] = env[fc.slots[name]]
    return result


__all__ = [
    "DEFAULT_STEP_LIMIT", "ExecutionEvent", "TestResult", "Interpreter", "Compiler", "MiniThrow",
    "StepLimitExceeded", "run_suite", "evaluate_expression", "wrap64", "PrimType",
]
