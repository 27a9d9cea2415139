import pytest

from sosieforge.nodes import INT, ArrayType, StatementId, Var, own_expressions, walk_expr
from sosieforge.parser import parse
from sosieforge.program import Program
from sosieforge.typecheck import TypeCheckError, typecheck


def prog(src, tests=None):
    units = [parse(src, "src/p.mini")]
    if tests is not None:
        units.append(parse(tests, "tests/t.mini"))
    return Program.of(units)


def check(src, tests=None):
    return typecheck(prog(src, tests))


def test_bool_into_int_rejected():
    with pytest.raises(TypeCheckError) as exc:
        check("fn f() { let x: Int = true; }")
    assert exc.value.sid == StatementId("src/p.mini", "f", (0,))


def test_scope_after_declaration():
    table = check("fn f() { let x: Int = 0; let y: Str = \"a\"; }")
    assert table[StatementId("src/p.mini", "f", (1,))] == {"x": INT}
    assert table[StatementId("src/p.mini", "f", (0,))] == {}


def test_scope_includes_params_and_outer_blocks():
    table = check("fn f(a: [Int]) { let i: Int = 0; while (i < len(a)) { let v: Int = a[i]; i += v; } }")
    inner = StatementId("src/p.mini", "f", (1, 0, 1))
    assert table[inner] == {"a": ArrayType(INT), "i": INT, "v": INT}
    # the loop-local is gone after the loop
    assert "v" not in check("fn f() { while (false) { let v: Int = 1; } let w: Int = 2; }")[
        StatementId("src/p.mini", "f", (1,))]


@pytest.mark.parametrize("src", [
    "fn f() -> Int { }",
    "fn f(x: Int) -> Int { if (x > 0) { return 1; } }",
    "fn f() -> Int { while (true) { break; } }",
    "fn f() -> Int { return \"s\"; }",
    "fn f() { return 1; }",
    "fn f() -> Int { return; }",
    "fn f() { let x: Int = 1; let x: Int = 2; }",
    "fn f(x: Int) { let x: Int = 2; }",
    "fn f() { if (1) { } }",
    "fn f() { while (\"s\") { } }",
    "fn f() { throw 3; }",
    "fn f() { y = 1; }",
    "fn f() { let b: Bool = true; b += 1; }",
    "fn f() { let s: Str = \"a\"; s -= \"b\"; }",
    "fn f() { g(); }",
    "fn f() { let x: Int = h(1, 2); } fn h(a: Int) -> Int { return a; }",
    "fn f() { let x: Int = h(true); } fn h(a: Int) -> Int { return a; }",
    "fn f() { let x: Int = v(); } fn v() { }",
    "fn f() { assert true; }",
    "fn f() { let a: [Int] = [1, true]; }",
    "fn f() { let a: [Int] = new Str[2]; }",
    "fn f() { let x: Int = 1; x[0] = 2; }",
    "fn f() { let s: Str = \"a\" + 1; }",
    "fn len(x: Int) -> Int { return x; }",
    "fn f() { } fn f() { }",
    "fn f() { let x: Int = -true; }",
    "fn f() { let b: Bool = !1; }",
    "fn f() { let b: Bool = 1 < \"a\"; }",
])
def test_ill_typed(src):
    with pytest.raises(TypeCheckError):
        check(src)


@pytest.mark.parametrize("src", [
    "fn f() -> Int { while (true) { } }",
    "fn f() -> Int { throw \"no\"; }",
    "fn f(x: Int) -> Int { if (x > 0) { return 1; } else { return 2; } }",
    "fn f() -> Int { try { return 1; } catch { return 2; } }",
    "fn f() { let s: Str = \"a\"; s += \"b\"; s += str(1); }",
    "fn f() { let a: [[Int]] = new [Int][2]; a[0] = [1, 2]; push(a[1], 3); }",
    "fn f() { let b: Bool = \"a\" < \"b\" && 1 <= 2; }",
    "fn f() { let x: Int = 7; x >>>= 1; x <<= 2; x ^= 3; x %= 5; }",
    "fn f() -> Int { let x: Int = abs(-3) + min(1, 2) + max(3, 4) + char_at(\"a\", 0); return x; }",
    "fn f() { let s: Str = substr(\"abc\", 0, 1) + chr(65); print(s); }",
    "fn f(a: [Int]) -> Int { return pop(a); }",
])
def test_well_typed(src):
    check(src)


def test_test_unit_rules():
    src = "fn f(x: Int) -> Int { return x; }"
    check(src, "fn test_ok() { assert f(1) == 1; }")
    with pytest.raises(TypeCheckError):
        check(src, "fn helper() { }")
    with pytest.raises(TypeCheckError):
        check(src, "fn test_bad(x: Int) { }")
    with pytest.raises(TypeCheckError):
        check(src, "fn test_bad() -> Int { return 1; }")
    with pytest.raises(TypeCheckError):
        check(src, "fn test_bad() { assert 1; }")


def test_scope_soundness_on_corpus(programs, scopes):
    for name, program in programs.items():
        table = scopes[name]
        for unit in program.units:
            for fn in unit.functions:
                params = {p.name for p in fn.params}
                for s in fn.statements():
                    env = table[s.sid]
                    assert params <= set(env)
                    for e in own_expressions(s):
                        for sub in walk_expr(e):
                            if isinstance(sub, Var):
                                assert sub.name in env, (s.sid, sub.name)
