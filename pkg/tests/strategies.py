"""Hypothesis strategies producing random, syntactically valid MiniLang ASTs."""

from hypothesis import strategies as st

from sosieforge.nodes import (
    ArrayLit, ArrayType, Assert, Assign, Binary, Block, BoolLit, Break, Call, Continue, ExprStmt, FunctionDecl,
    If, Index, IntLit, NewArray, Param, PrimType, Return, SourceUnit, StrLit, Throw, Try, Unary, Var, VarDecl,
    While, number_function,
)
from sosieforge.parser import ASSIGN_OPS, BINARY_PRECEDENCE, KEYWORDS

names = st.from_regex(r"[a-z][a-z0-9_]{0,5}", fullmatch=True).filter(lambda s: s not in KEYWORDS)

prim_types = st.sampled_from([PrimType("Int"), PrimType("Bool"), PrimType("Str")])
types = st.recursive(prim_types, lambda inner: inner.map(ArrayType), max_leaves=3)

leaves = st.one_of(
    st.integers(0, 2**63 - 1).map(IntLit),
    st.booleans().map(BoolLit),
    st.text(st.characters(min_codepoint=9, max_codepoint=126), max_size=6).map(StrLit),
    names.map(Var),
)


def _compound(inner):
    return st.one_of(
        st.tuples(st.sampled_from(sorted(BINARY_PRECEDENCE)), inner, inner).map(lambda t: Binary(*t)),
        st.tuples(st.sampled_from(["-", "!", "~"]), inner).map(lambda t: Unary(*t)),
        st.tuples(inner, inner).map(lambda t: Index(*t)),
        st.tuples(names, st.lists(inner, max_size=3)).map(lambda t: Call(t[0], tuple(t[1]))),
        st.lists(inner, max_size=3).map(lambda xs: ArrayLit(tuple(xs))),
        st.tuples(types, inner).map(lambda t: NewArray(*t)),
    )


exprs = st.recursive(leaves, _compound, max_leaves=8)
targets = st.one_of(names.map(Var), st.tuples(names.map(Var), exprs).map(lambda t: Index(*t)))


def _simple(in_loop: bool):
    options = [
        st.tuples(names, types, exprs).map(lambda t: VarDecl(*t)),
        st.tuples(targets, st.sampled_from(ASSIGN_OPS), exprs).map(lambda t: Assign(*t)),
        exprs.map(ExprStmt),
        st.one_of(st.none(), exprs).map(Return),
        exprs.map(Throw),
        exprs.map(Assert),
    ]
    if in_loop:
        options += [st.just(Break()), st.just(Continue())]
    return st.one_of(*options)


def statements(depth: int = 2, in_loop: bool = False):
    simple = _simple(in_loop)
    if depth == 0:
        return simple

    def block(loop):
        return st.lists(statements(depth - 1, loop), max_size=3).map(lambda xs: Block(tuple(xs)))

    here = block(in_loop)
    return st.one_of(
        simple,
        st.tuples(exprs, here, st.one_of(st.none(), here)).map(lambda t: If(*t)),
        st.tuples(exprs, block(True)).map(lambda t: While(*t)),
        st.tuples(here, here).map(lambda t: Try(*t)),
        here,
    )


@st.composite
def functions(draw, unit_path="src/gen.mini"):
    name = draw(names)
    params = draw(st.lists(st.tuples(names, types), max_size=3, unique_by=lambda p: p[0]))
    ret = draw(st.one_of(st.none(), types))
    body = Block(tuple(draw(st.lists(statements(), max_size=4))))
    fn = FunctionDecl(name, tuple(Param(n, t) for n, t in params), ret, body)
    return number_function(fn, unit_path)


@st.composite
def units(draw):
    fns = draw(st.lists(functions(), min_size=1, max_size=3, unique_by=lambda f: f.name))
    return SourceUnit("src/gen.mini", tuple(fns), "program")
