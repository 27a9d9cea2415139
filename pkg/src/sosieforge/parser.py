"""Hand-written lexer and recursive-descent parser for MiniLang."""

from __future__ import annotations

import re
from pathlib import PurePosixPath
from typing import List, Optional, Tuple

from .nodes import (
    BOOL, INT, STR, ArrayLit, ArrayType, Assert, Assign, Binary, Block, BoolLit, Break, Call,
    Continue, Expr, ExprStmt, FunctionDecl, If, Index, IntLit, NewArray, Param, Return,
    SourceUnit, Statement, StrLit, Throw, Try, Type, Unary, Var, VarDecl, While, number_function,
)


class LangError(Exception):
    """Base class for MiniLang front-end errors."""


class ParseError(LangError):
    def __init__(self, message: str, line: int, col: int, path: str = "<input>"):
        super().__init__(f"{path}:{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col
        self.path = path


KEYWORDS = {
    "fn", "let", "if", "else", "while", "return", "break", "continue", "throw",
    "try", "catch", "assert", "true", "false", "new", "Int", "Bool", "Str",
}

ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=", "%=", "^=", "&=", "|=", "<<=", ">>=", ">>>=")

# longest first so the alternation is greedy
_OPERATORS = sorted(
    [">>>=", ">>>", "<<=", ">>=", "==", "!=", "<=", ">=", "&&", "||", "->", "+=", "-=",
     "*=", "/=", "%=", "^=", "&=", "|=", "<<", ">>"]
    + list("+-*/%<>=!~&|^(){}[],;:"),
    key=len, reverse=True,
)

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>//[^\n]*)"
    r"|(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r'|(?P<str>"(?:[^"\\\n]|\\.)*")'
    r"|(?P<op>" + "|".join(re.escape(o) for o in _OPERATORS) + r")"
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}

MAX_INT = 2**63 - 1

# binary precedence, higher binds tighter; all left associative
BINARY_PRECEDENCE = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5,
    "==": 6, "!=": 6,
    "<": 7, "<=": 7, ">": 7, ">=": 7,
    "<<": 8, ">>": 8, ">>>": 8,
    "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10,
}
UNARY_PRECEDENCE = 11


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind: str, text: str, line: int, col: int):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def tokenize(source: str, path: str = "<input>") -> List[Token]:
    tokens: List[Token] = []
    line, line_start, i = 1, 0, 0
    while i < len(source):
        m = _TOKEN_RE.match(source, i)
        if m is None:
            raise ParseError(f"unexpected character {source[i]!r}", line, i - line_start + 1, path)
        kind = m.lastgroup
        text = m.group()
        col = i - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            tokens.append(Token("kw" if text in KEYWORDS else "ident", text, line, col))
        elif kind in ("int", "str", "op"):
            tokens.append(Token(kind, text, line, col))
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1))
    return tokens


def _unescape(raw: str) -> str:
    out = []
    it = iter(raw[1:-1])
    for ch in it:
        if ch == "\\":
            nxt = next(it)
            out.append(_ESCAPES.get(nxt, nxt))
        else:
            out.append(ch)
    return "".join(out)


class Parser:
    def __init__(self, source: str, path: str):
        self.path = path
        self.tokens = tokenize(source, path)
        self.i = 0
        self.loop_depth = 0

    # -- token helpers ----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col, self.path)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "kw")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected '{text}', found '{found}'")
        tok = self.tok
        self.i += 1
        return tok

    def expect_ident(self, what: str = "identifier") -> str:
        if self.tok.kind != "ident":
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found '{found}'")
        name = self.tok.text
        self.i += 1
        return name

    # -- declarations -----------------------------------------------------

    def unit(self, kind: str) -> SourceUnit:
        functions = []
        while self.tok.kind != "eof":
            functions.append(self.function(kind))
        return SourceUnit(self.path, tuple(functions), kind)

    def function(self, kind: str) -> FunctionDecl:
        start = self.expect("fn")
        name = self.expect_ident("function name")
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                pname = self.expect_ident("parameter name")
                self.expect(":")
                params.append(Param(pname, self.type()))
                if not self.accept(","):
                    break
        self.expect(")")
        ret = self.type() if self.accept("->") else None
        body = self.block()
        fn = FunctionDecl(name, tuple(params), ret, body,
                          is_test=kind == "test" and name.startswith("test_"),
                          pos=(start.line, start.col))
        return number_function(fn, self.path)

    def type(self) -> Type:
        if self.accept("["):
            elem = self.type()
            self.expect("]")
            return ArrayType(elem)
        for t in (INT, BOOL, STR):
            if self.accept(t.name):
                return t
        raise self.error(f"expected type, found '{self.tok.text or 'end of input'}'")

    # -- statements -------------------------------------------------------

    def block(self) -> Block:
        start = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("expected '}', found 'end of input'")
            stmts.append(self.statement())
        self.expect("}")
        return Block(tuple(stmts), pos=(start.line, start.col))

    def statement(self) -> Statement:
        tok = self.tok
        pos = (tok.line, tok.col)
        if self.at("{"):
            return self.block()
        if self.accept("let"):
            name = self.expect_ident("variable name")
            self.expect(":")
            typ = self.type()
            self.expect("=")
            init = self.expr()
            self.expect(";")
            return VarDecl(name, typ, init, pos=pos)
        if self.accept("if"):
            return self.if_rest(pos)
        if self.accept("while"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            self.loop_depth += 1
            body = self.block()
            self.loop_depth -= 1
            return While(cond, body, pos=pos)
        if self.accept("return"):
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return Return(value, pos=pos)
        if self.at("break") or self.at("continue"):
            self.i += 1
            if self.loop_depth == 0:
                raise self.error(f"'{tok.text}' outside of a loop", tok)
            self.expect(";")
            return Break(pos=pos) if tok.text == "break" else Continue(pos=pos)
        if self.accept("throw"):
            value = self.expr()
            self.expect(";")
            return Throw(value, pos=pos)
        if self.accept("try"):
            body = self.block()
            self.expect("catch")
            return Try(body, self.block(), pos=pos)
        if self.accept("assert"):
            cond = self.expr()
            self.expect(";")
            return Assert(cond, pos=pos)
        target = self.expr()
        if self.tok.kind == "op" and self.tok.text in ASSIGN_OPS:
            if not isinstance(target, (Var, Index)):
                raise self.error("invalid assignment target", tok)
            op = self.tok.text
            self.i += 1
            value = self.expr()
            self.expect(";")
            return Assign(target, op, value, pos=pos)
        self.expect(";")
        return ExprStmt(target, pos=pos)

    def if_rest(self, pos: Tuple[int, int]) -> If:
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.block()
        orelse = None
        if self.accept("else"):
            if self.at("if"):
                inner_tok = self.tok
                self.i += 1
                inner = self.if_rest((inner_tok.line, inner_tok.col))
                orelse = Block((inner,), pos=inner.pos)
            else:
                orelse = self.block()
        return If(cond, then, orelse, pos=pos)

    # -- expressions ------------------------------------------------------

    def expr(self, min_prec: int = 1) -> Expr:
        left = self.unary()
        while True:
            tok = self.tok
            prec = BINARY_PRECEDENCE.get(tok.text) if tok.kind == "op" else None
            if prec is None or prec < min_prec:
                return left
            self.i += 1
            right = self.expr(prec + 1)
            left = Binary(tok.text, left, right, pos=(tok.line, tok.col))

    def unary(self) -> Expr:
        tok = self.tok
        if tok.kind == "op" and tok.text in ("-", "!", "~"):
            self.i += 1
            return Unary(tok.text, self.unary(), pos=(tok.line, tok.col))
        return self.postfix()

    def postfix(self) -> Expr:
        e = self.primary()
        while self.at("["):
            tok = self.tok
            self.i += 1
            idx = self.expr()
            self.expect("]")
            e = Index(e, idx, pos=(tok.line, tok.col))
        return e

    def primary(self) -> Expr:
        tok = self.tok
        pos = (tok.line, tok.col)
        if tok.kind == "int":
            self.i += 1
            value = int(tok.text)
            if value > MAX_INT:
                raise self.error("integer literal out of range", tok)
            return IntLit(value, pos=pos)
        if tok.kind == "str":
            self.i += 1
            return StrLit(_unescape(tok.text), pos=pos)
        if self.accept("true"):
            return BoolLit(True, pos=pos)
        if self.accept("false"):
            return BoolLit(False, pos=pos)
        if tok.kind == "ident":
            self.i += 1
            if self.accept("("):
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.expr())
                        if not self.accept(","):
                            break
                self.expect(")")
                return Call(tok.text, tuple(args), pos=pos)
            return Var(tok.text, pos=pos)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.accept("["):
            elems = []
            if not self.at("]"):
                while True:
                    elems.append(self.expr())
                    if not self.accept(","):
                        break
            self.expect("]")
            return ArrayLit(tuple(elems), pos=pos)
        if self.accept("new"):
            elem = self.type()
            self.expect("[")
            size = self.expr()
            self.expect("]")
            return NewArray(elem, size, pos=pos)
        raise self.error(f"expected expression, found '{tok.text or 'end of input'}'")


def infer_kind(path: str) -> str:
    return "test" if "tests" in PurePosixPath(path).parts[:-1] else "program"


def parse(source_text: str, path: str = "<input>", kind: Optional[str] = None) -> SourceUnit:
    """Parse one ``.mini`` file.

    ``kind`` defaults to ``"test"`` for files under a ``tests/`` directory.
    Raises :class:`ParseError` with the offending line and column.
    """
    return Parser(source_text, path).unit(kind or infer_kind(path))


def parse_expression(text: str) -> Expr:
    p = Parser(text, "<expr>")
    e = p.expr()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected '{p.tok.text}'")
    return e
