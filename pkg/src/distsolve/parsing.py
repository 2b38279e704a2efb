"""Recursive-descent parser for closed-family expressions.

Grammar (LL(1))::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("+" | "-") unary | power
    power   := atom ("^" INT)?
    atom    := NUMBER | "x" | "z" | "pi" | FUNC "(" expr ")" | "(" expr ")"
    FUNC    := "exp" | "cos" | "sin" | "cosh" | "sinh"

Function arguments must be affine in ``x``; division is by constants only.
``z`` is a scalar parameter substituted at parse time. Anything outside the
family is a parse error carrying the offset of the offending token.
"""

from __future__ import annotations

import math
import re
from typing import NamedTuple

from .errors import ExpressionParseError
from .expression import COS, NONE, SIN, SmoothExpression

FUNCTIONS = ("exp", "cos", "sin", "cosh", "sinh")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))"
)


class Token(NamedTuple):
    kind: str  # "num", "name", "op", "end"
    text: str
    pos: int


def tokenize(text: str):
    tokens = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None:
            rest = len(text) - len(text[pos:].lstrip())
            if rest >= len(text):
                break
            raise ExpressionParseError(f"unexpected character {text[rest]!r}", rest, text)
        kind = m.lastgroup
        start = m.start(kind)
        tok = m.group(kind)
        if tok == "**":
            tok = "^"
        tokens.append(Token(kind, tok, start))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, z):
        self.text = text
        self.z = z
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def fail(self, message, tok=None):
        tok = self.tok if tok is None else tok
        raise ExpressionParseError(message, tok.pos, self.text)

    def advance(self):
        tok = self.tok
        self.i += 1
        return tok

    def expect(self, text):
        if self.tok.text != text or self.tok.kind != "op":
            self.fail(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def parse(self):
        if self.tok.kind == "end":
            self.fail("empty expression")
        e = self.expr()
        if self.tok.kind != "end":
            self.fail(f"unexpected {self.tok.text!r}")
        return e

    def expr(self):
        e = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance()
            rhs_tok = self.tok
            rhs = self.unary()
            if op.text == "*":
                e = e * rhs
            else:
                if not rhs.is_constant() or rhs.is_zero() or rhs.constant_value() == 0.0:
                    self.fail("division is only allowed by a nonzero constant", rhs_tok)
                e = e / rhs.constant_value()
        return e

    def unary(self):
        if self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            e = self.unary()
            return -e if op == "-" else e
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            tok = self.tok
            if tok.kind != "num" or not re.fullmatch(r"\d+", tok.text):
                self.fail("exponent must be a nonnegative integer literal")
            self.advance()
            return base ** int(tok.text)
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return SmoothExpression.constant(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "name":
            self.advance()
            if tok.text == "x":
                return SmoothExpression.monomial(1)
            if tok.text == "pi":
                return SmoothExpression.constant(math.pi)
            if tok.text == "z":
                if self.z is None:
                    self.fail("parameter z used but no value was supplied", tok)
                return SmoothExpression.constant(float(self.z))
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg_tok = self.tok
                arg = self.expr()
                self.expect(")")
                return self.function(tok.text, arg, arg_tok)
            self.fail(f"unknown name {tok.text!r}", tok)
        self.fail(f"unexpected {tok.text or 'end of input'!r}")

    def function(self, name, arg, arg_tok):
        a, b = self.affine(arg, arg_tok)
        if name == "exp":
            return SmoothExpression.term(math.exp(b), 0, a, NONE, 0.0)
        if name in ("cosh", "sinh"):
            sign = 1.0 if name == "cosh" else -1.0
            return SmoothExpression(
                ((0.5 * math.exp(b), 0, a, NONE, 0.0), (sign * 0.5 * math.exp(-b), 0, -a, NONE, 0.0))
            )
        # cos(a x + b) = cos b cos(a x) - sin b sin(a x)
        if name == "cos":
            return SmoothExpression(((math.cos(b), 0, 0.0, COS, a), (-math.sin(b), 0, 0.0, SIN, a)))
        return SmoothExpression(((math.sin(b), 0, 0.0, COS, a), (math.cos(b), 0, 0.0, SIN, a)))

    def affine(self, e: SmoothExpression, tok):
        slope = offset = 0.0
        for t in e.terms:
            if t.exp_rate != 0.0 or t.trig != NONE or t.power > 1:
                self.fail("function argument must be affine in x", tok)
            if t.power == 1:
                slope += t.coeff
            else:
                offset += t.coeff
        return slope, offset


def parse_expression(text: str, z=None) -> SmoothExpression:
    """Parse ``text`` into a :class:`SmoothExpression`; ``z`` fills the parameter."""
    if not isinstance(text, str):
        raise ExpressionParseError("expression must be a string", 0, str(text))
    return _Parser(text, z).parse()


def uses_parameter(text: str) -> bool:
    return any(t.kind == "name" and t.text == "z" for t in tokenize(text))
