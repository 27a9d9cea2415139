import pytest
from hypothesis import given, settings, strategies as st

from sosieforge.interpreter import (
    Interpreter, MiniThrow, evaluate_expression, run_suite, wrap64,
)
from sosieforge.parser import parse, parse_expression
from sosieforge.program import Program


def prog(src, tests):
    return Program.of([parse(src, "src/p.mini"), parse(tests, "tests/t.mini")])


def events_of(program, step_limit=100_000):
    events = []
    results = run_suite(program, step_limit=step_limit, probes=events.append)
    return results, events


def hits(events):
    return [(e.statement, e.depth) for e in events if e.kind == "statement_hit"]


def test_identity_passes_at_depth_one():
    p = prog("fn id(x: Int) -> Int { return x; }", "fn test_a() { assert id(3) == 3; }")
    results, events = events_of(p)
    assert [r.status for r in results] == ["pass"]
    assert [(str(s), d) for s, d in hits(events)] == [("src/p.mini::id::0", 1)]


def test_false_assertion_fails():
    p = prog("fn f() { }", "fn test_a() { assert 1 == 2; }")
    [r] = run_suite(p)
    assert r.status == "fail" and not r.passed


def test_recursion_depths():
    p = prog("fn fact(n: Int) -> Int { if (n <= 1) { return 1; } return n * fact(n - 1); }",
             "fn test_f() { assert fact(5) == 120; }")
    _, events = events_of(p)
    by_stmt = {}
    for sid, d in hits(events):
        by_stmt.setdefault(str(sid), []).append(d)
    assert sorted(by_stmt["src/p.mini::fact::0"]) == [1, 2, 3, 4, 5]
    assert sorted(by_stmt["src/p.mini::fact::1"]) == [1, 2, 3, 4]
    assert by_stmt["src/p.mini::fact::0.0.0"] == [5]


def test_depth_law_nested_calls():
    p = prog("fn f() -> Int { return g() + 1; } fn g() -> Int { return len(\"ab\"); }",
             "fn test_a() { assert f() == 3; }")
    _, events = events_of(p)
    assert {(s.function, d) for s, d in hits(events)} == {("f", 1), ("g", 2)}


def test_test_enter_exit_alternate():
    p = prog("fn f() -> Int { return 1; }",
             "fn test_a() { assert f() == 1; } fn test_b() { assert f() == 2; } fn test_c() { }")
    results, events = events_of(p)
    marks = [(e.kind, e.test_id) for e in events if e.kind.startswith("test_")]
    assert marks == [("test_enter", 0), ("test_exit", 0), ("test_enter", 1), ("test_exit", 1),
                     ("test_enter", 2), ("test_exit", 2)]
    assert [e.passed for e in events if e.kind == "test_exit"] == [True, False, True]
    assert [r.status for r in results] == ["pass", "fail", "pass"]


def test_test_order_by_unit_path():
    units = [parse("fn f() { }", "src/p.mini"),
             parse("fn test_z() { }", "tests/b.mini"),
             parse("fn test_y() { } fn test_x() { }", "tests/a.mini")]
    assert [r.name for r in run_suite(Program.of(units))] == ["test_y", "test_x", "test_z"]


def test_infinite_loop_times_out():
    p = prog("fn spin() { while (true) { } }", "fn test_a() { spin(); }")
    [r] = run_suite(p, step_limit=1000)
    assert r.status == "timeout"


def test_unbounded_recursion_is_a_failure():
    p = prog("fn r(n: Int) -> Int { return r(n + 1); }", "fn test_a() { assert r(0) == 0; }")
    [r] = run_suite(p, step_limit=10_000_000)
    assert r.status == "fail"


def test_runtime_errors_are_catchable():
    p = prog("""
fn safe_div(a: Int, b: Int) -> Int { try { return a / b; } catch { return -1; } }
fn at(xs: [Int], i: Int) -> Int { try { return xs[i]; } catch { return -2; } }
""", """
fn test_div() { assert safe_div(6, 3) == 2; assert safe_div(1, 0) == -1; }
fn test_idx() { assert at([1], 0) == 1; assert at([1], 5) == -2; assert at([1], -1) == -2; }
""")
    assert all(r.passed for r in run_suite(p))


def test_uncaught_throw_fails_with_message():
    p = prog("fn boom() { throw \"bad\"; }", "fn test_a() { boom(); }")
    [r] = run_suite(p)
    assert r.status == "fail" and "bad" in r.detail


def test_evaluate_expression_basics():
    assert evaluate_expression(parse_expression("2+3"), {}) == 5
    with pytest.raises(MiniThrow) as exc:
        evaluate_expression(parse_expression("arr[10]"), {"arr": [1, 2]})
    assert exc.value.message == "index out of bounds"


def test_evaluate_expression_mutates_environment():
    env = {"xs": [1]}
    evaluate_expression(parse_expression("push(xs, 4)"), env)
    assert env["xs"] == [1, 4]


def test_corpus_hash_is_deterministic(programs):
    hm = programs["hashmap"]
    a = evaluate_expression(parse_expression("hash(\"abc\")"), {}, hm)
    b = evaluate_expression(parse_expression("hash(\"abc\")"), {}, hm)
    assert isinstance(a, int) and a == b
    assert a != evaluate_expression(parse_expression("hash(\"abd\")"), {}, hm)


def test_corpus_suites_pass(programs):
    for name, p in programs.items():
        results = run_suite(p)
        assert all(r.passed for r in results), (name, [r for r in results if not r.passed])


def test_suite_determinism(programs):
    p = programs["bank"]
    r1, e1 = events_of(p, 10_000_000)
    r2, e2 = events_of(p, 10_000_000)
    assert r1 == r2 and e1 == e2


def test_probes_do_not_change_results(programs):
    for p in programs.values():
        assert run_suite(p) == events_of(p, 10_000_000)[0]


def test_reused_interpreter_is_stateless(programs):
    interp = Interpreter(programs["textkit"])
    first = interp.run_tests()
    assert interp.run_tests() == first


@pytest.mark.parametrize("expr,value", [
    ("7 / 2", 3), ("-7 / 2", -3), ("7 % 3", 1), ("-7 % 3", -1),
    ("1 << 63", -(1 << 63)), ("-1 >>> 60", 15), ("-8 >> 1", -4),
    ("9223372036854775807 + 1", -(1 << 63)),
    ("5 & 3", 1), ("5 | 3", 7), ("5 ^ 3", 6), ("~0", -1),
    ("\"ab\" + \"c\"", "abc"), ("\"ab\" < \"b\"", True), ("len([1, 2, 3])", 3),
    ("substr(\"hello\", 1, 3)", "el"), ("char_at(\"A\", 0)", 65), ("chr(66)", "B"),
    ("str(-12)", "-12"), ("abs(-4) + min(2, 3) + max(2, 3)", 9),
    ("true || 1 / 0 == 0", True), ("false && 1 / 0 == 0", False),
    ("len(new [Int][3])", 3), ("new Int[2][1]", 0), ("new Str[1][0]", ""),
])
def test_expression_semantics(expr, value):
    assert evaluate_expression(parse_expression(expr), {}) == value


@pytest.mark.parametrize("expr", ["1 / 0", "1 % 0", "substr(\"ab\", 1, 5)", "char_at(\"\", 0)",
                                  "pop(new Int[0])", "new Int[-1]"])
def test_runtime_throws(expr):
    with pytest.raises(MiniThrow):
        evaluate_expression(parse_expression(expr), {})


@settings(max_examples=300)
@given(st.integers(-(1 << 70), 1 << 70))
def test_wrap64_range_and_congruence(v):
    w = wrap64(v)
    assert -(1 << 63) <= w < (1 << 63)
    assert (w - v) % (1 << 64) == 0


@settings(max_examples=200)
@given(st.integers(-(1 << 63), (1 << 63) - 1), st.integers(-(1 << 63), (1 << 63) - 1))
def test_int_arithmetic_wraps(a, b):
    env = {"a": a, "b": b}
    assert evaluate_expression(parse_expression("a + b"), env) == wrap64(a + b)
    assert evaluate_expression(parse_expression("a * b"), env) == wrap64(a * b)
    assert evaluate_expression(parse_expression("a - b"), env) == wrap64(a - b)
