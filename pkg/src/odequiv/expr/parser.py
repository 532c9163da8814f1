"""Recursive-descent parser for the coefficient expression grammar.

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := base ("^" factor)?
    base   := number | name | name "(" expr ")" | "(" expr ")" | "-" base

Unary minus lives in ``base``, so it binds tighter than ``^``: ``-x^2`` is
``(-x)^2``. A minus directly in front of a number literal folds into a
negative constant. Implicit multiplication is rejected.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..errors import ParseError
from .nodes import FUNCTIONS, Const, Expr, Func, Neg, Power, Product, Quotient, Sum, Var

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", _byte_offset(text, bad), text)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, _byte_offset(self.text, tok[2]), self.text)

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] == "end":
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            self.error(f"expected {value!r}, found {what}")
        return self.advance()

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            self.error("empty expression")
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.error(f"unexpected token {tok[1]!r}")
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            t = self.term()
            terms.append(t if op == "+" else Neg(t))
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self) -> Expr:
        acc = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            rhs = self.factor()
            if op == "/":
                acc = Quotient(acc, rhs)
            elif isinstance(acc, Product):
                acc = Product(acc.factors + (rhs,))
            else:
                acc = Product((acc, rhs))
        return acc

    def factor(self) -> Expr:
        b = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return Power(b, self.factor())
        return b

    def base(self) -> Expr:
        tok = self.peek()
        kind, value, _ = tok
        if kind == "num":
            self.advance()
            return Const(Fraction(value))
        if kind == "name":
            self.advance()
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if value not in FUNCTIONS:
                    self.error(f"unknown function {value!r}", tok)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Func(value, arg)
            if value in FUNCTIONS:
                self.error(f"function {value!r} needs a parenthesized argument", nxt)
            return Var(value)
        if kind == "op" and value == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if kind == "op" and value == "-":
            self.advance()
            if self.peek()[0] == "num" and Fraction(self.peek()[1]) != 0:
                return Const(-Fraction(self.advance()[1]))
            return Neg(self.base())
        if kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected token {value!r}")


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree (no simplification)."""
    if not isinstance(text, str):
        raise TypeError("parse expects a string")
    return _Parser(text).parse()
