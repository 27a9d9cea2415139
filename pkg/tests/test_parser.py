import pytest
from hypothesis import given, settings

from sosieforge import corpus_dir
from sosieforge.nodes import (
    Block, If, IntLit, Return, StatementId, While, count_statements, kind_of, strip_ids, walk,
)
from sosieforge.parser import ParseError, parse, parse_expression
from sosieforge.printer import format_expr, pretty_print

from strategies import exprs


def test_minimal_function():
    unit = parse("fn f() -> Int { return 1; }", "src/a.mini")
    assert len(unit.functions) == 1
    (stmt,) = unit.functions[0].body.stmts
    assert isinstance(stmt, Return)
    assert stmt.sid == StatementId("src/a.mini", "f", (0,))
    assert unit.kind == "program"


def test_malformed_reports_position_of_brace():
    with pytest.raises(ParseError) as exc:
        parse("fn f( {", "src/a.mini")
    assert (exc.value.line, exc.value.col) == (1, 7)
    assert "expected" in exc.value.message


def test_hash_has_six_statements():
    text = (corpus_dir("hashmap") / "src" / "hashmap.mini").read_text()
    unit = parse(text, "src/hashmap.mini")
    fn = unit.function("hash")
    assert len(list(fn.statements())) == 6
    assert len(fn.body.stmts) == 6


def test_ids_are_depth_first_paths():
    src = """
fn f(n: Int) -> Int {
    let a: Int = 0;
    while (a < n) {
        if (a == 3) {
            break;
        } else {
            a += 2;
        }
        a += 1;
    }
    return a;
}
"""
    fn = parse(src, "src/x.mini").functions[0]
    paths = [s.sid.path for s in fn.statements()]
    # If -> (then, else), While -> (body,), block children by position
    assert paths == [(0,), (1,), (1, 0), (1, 0, 0), (1, 0, 0, 0), (1, 0, 0, 0, 0), (1, 0, 0, 1),
                     (1, 0, 0, 1, 0), (1, 0, 1), (2,)]
    kinds = [kind_of(s) for s in fn.statements()]
    assert kinds == ["VarDecl", "While", "Block", "If", "Block", "Break", "Block", "Assign", "Assign", "Return"]


def test_statement_kinds_in_order():
    src = "fn f() { let x: Int = 1; try { x = 2; } catch { throw \"e\"; } }"
    fn = parse(src, "src/x.mini").functions[0]
    assert [kind_of(s) for s in fn.statements()] == ["VarDecl", "Try", "Block", "Assign", "Block", "Throw"]


def test_else_if_sugar():
    fn = parse("fn f(x: Int) -> Int { if (x < 0) { return 0; } else if (x > 9) { return 9; } return x; }",
               "src/x.mini").functions[0]
    outer = fn.body.stmts[0]
    assert isinstance(outer, If)
    assert isinstance(outer.orelse, Block) and isinstance(outer.orelse.stmts[0], If)
    text = pretty_print(parse(pretty_print(parse("fn g() { }", "src/y.mini")), "src/y.mini"))
    assert "{ }" in text


def test_break_outside_loop_rejected():
    with pytest.raises(ParseError):
        parse("fn f() { break; }", "src/x.mini")
    with pytest.raises(ParseError):
        parse("fn f() { if (true) { continue; } }", "src/x.mini")


@pytest.mark.parametrize("text", [
    "fn f() { let x: Int = ; }",
    "fn f() { x = 1 }",
    "fn () { }",
    "fn f() -> { }",
    "fn f() { return 99999999999999999999; }",
    'fn f() { let s: Str = "unterminated; }',
    "fn f() { let x: Int = 1; } }",
    "fn f() { @ }",
])
def test_malformed_inputs(text):
    with pytest.raises(ParseError):
        parse(text, "src/x.mini")


def test_kind_from_path():
    assert parse("fn test_a() { assert true; }", "tests/a.mini").kind == "test"
    unit = parse("fn test_a() { assert true; } fn helper() { }", "tests/a.mini")
    assert [f.is_test for f in unit.functions] == [True, False]


def test_comments_ignored():
    unit = parse("// header\nfn f() { // trailing\n let x: Int = 1; // x\n}", "src/x.mini")
    assert count_statements(unit.functions[0].body) == 2


def test_precedence():
    e = parse_expression("1 + 2 * 3 - 4")
    assert format_expr(e) == "1 + 2 * 3 - 4"
    assert format_expr(parse_expression("(1 + 2) * 3")) == "(1 + 2) * 3"
    assert format_expr(parse_expression("1 - (2 - 3)")) == "1 - (2 - 3)"
    assert format_expr(parse_expression("a || b && c")) == "a || b && c"
    assert format_expr(parse_expression("(a || b) && c")) == "(a || b) && c"
    assert format_expr(parse_expression("- -x")) == "- -x"
    assert format_expr(parse_expression("!(a == b)")) == "!(a == b)"


def test_string_escapes_round_trip():
    e = parse_expression(r'"a\"b\\c\nd\te"')
    assert e.value == 'a"b\\c\nd\te'
    assert parse_expression(format_expr(e)) == e


@pytest.mark.parametrize("name", ["sigdemo", "bank", "hashmap", "textkit", "arraystats"])
def test_corpus_round_trip_and_id_stability(name):
    root = corpus_dir(name)
    for f in sorted(root.glob("*/*.mini")):
        rel = f"{f.parent.name}/{f.name}"
        text = f.read_text()
        a = parse(text, rel)
        b = parse(text, rel)
        assert [s.sid for fn in a.functions for s in fn.statements()] == \
               [s.sid for fn in b.functions for s in fn.statements()]
        again = parse(pretty_print(a), rel)
        assert again == a
        assert pretty_print(again) == pretty_print(a)


@settings(max_examples=300)
@given(exprs)
def test_expression_round_trip(e):
    assert parse_expression(format_expr(e)) == e
