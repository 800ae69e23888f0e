"""Pratt parser for the expression grammar.

    number := decimal literal (optional fraction and exponent)
    ident  := [A-Za-z][A-Za-z0-9_]*
    ^ (right-assoc)  >  unary -  >  * /  >  + -

The parser builds raw nodes (no simplification) so that printing and
re-parsing gives back a structurally equal tree. The one exception is a
unary minus applied directly to a numeric literal, which becomes a negative
constant.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .expr import FUNCTIONS, BinOp, Const, Expr, Func, Neg, Sym


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos}: {text!r}")


class UnknownSymbolError(ValueError):
    def __init__(self, name: str, pos: int | None = None):
        self.name = name
        self.pos = pos
        where = f" at position {pos}" if pos is not None else ""
        super().__init__(f"unknown symbol {name!r}{where}")


_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num | ident | op | end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[start]!r}", text, start)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


_INFIX_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_PREFIX_BP = 30  # unary minus binds looser than ^, tighter than * /


class _Parser:
    def __init__(self, text: str, known: set[str] | None):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.known = known

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text or tok.kind != "op":
            found = tok.text or "end of input"
            raise ExprSyntaxError(f"expected {text!r}, found {found!r}", self.text, tok.pos)
        return tok

    def parse(self) -> Expr:
        if self.peek().kind == "end":
            raise ExprSyntaxError("empty expression", self.text, 0)
        e = self.expr(0)
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(f"unexpected token {tok.text!r}", self.text, tok.pos)
        return e

    def expr(self, rbp: int) -> Expr:
        left = self.nud(self.next())
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _INFIX_BP:
                break
            lbp = _INFIX_BP[tok.text]
            if lbp <= rbp:
                break
            self.next()
            # right associativity for ^
            right = self.expr(lbp - 1 if tok.text == "^" else lbp)
            left = BinOp(tok.text, left, right)
        return left

    def nud(self, tok: _Tok) -> Expr:
        if tok.kind == "num":
            return Const(float(tok.text))
        if tok.kind == "ident":
            if self.peek().kind == "op" and self.peek().text == "(":
                return self.call(tok)
            if tok.text in FUNCTIONS:
                raise ExprSyntaxError(f"function {tok.text!r} needs an argument", self.text, tok.pos)
            if self.known is not None and tok.text not in self.known:
                raise UnknownSymbolError(tok.text, tok.pos)
            return Sym(tok.text)
        if tok.kind == "op" and tok.text == "-":
            operand = self.expr(_PREFIX_BP)
            if isinstance(operand, Const) and self.toks[self.i - 1].kind == "num":
                return Const(-operand.value)
            return Neg(operand)
        if tok.kind == "op" and tok.text == "(":
            e = self.expr(0)
            self.expect(")")
            return e
        found = tok.text or "end of input"
        raise ExprSyntaxError(f"unexpected {found!r}", self.text, tok.pos)

    def call(self, name: _Tok) -> Expr:
        self.expect("(")
        args = [self.expr(0)]
        while self.peek().kind == "op" and self.peek().text == ",":
            self.next()
            args.append(self.expr(0))
        self.expect(")")
        if name.text not in FUNCTIONS:
            raise ExprSyntaxError(f"unknown function {name.text!r}", self.text, name.pos)
        if len(args) != 1:
            raise ExprSyntaxError(
                f"{name.text} takes 1 argument, got {len(args)}", self.text, name.pos
            )
        return Func(name.text, args[0])


def parse(text: str, table=None, known: Iterable[str] | None = None) -> Expr:
    """Parse `text` into an expression tree.

    When a symbol table (or an explicit `known` name set) is given, every
    identifier must be declared there.
    """
    names: set[str] | None = None
    if table is not None:
        names = set(table.all_names())
    if known is not None:
        names = (names or set()) | set(known)
    return _Parser(text, names).parse()
