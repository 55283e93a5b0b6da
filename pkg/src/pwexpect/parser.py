"""Recursive-descent parser for ``.pwhile`` programs and cost expressions.

Concrete syntax::

    skip | tick(q) | halt | x := e | x := {p1: e1, ..., pn: en}
    if [assert] (guard) {c} else {d}        # [assert] and else optional
    while [assert] (guard) inv(cexp) {c}    # [assert] and inv(...) optional
    {c} <> {d}        {c} [p] {d}        c; d        # comments run to EOL

Rationals are written ``a/b`` or as finite decimals. Comparisons other than
``>=`` are desugared into ``>=``, negation and conjunction.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import List, Optional, Tuple

from .syntax import (Add, And, Assign, BExp, Ceil, CMax, Command, Const,
                     CostExpr, CSum, DExp, Exp, Geq, Guard, Halt, If,
                     LoopAnnotation, Mul, NdChoice, Norm, NormMul, Not, One,
                     Or, ProbChoice, Scaled, Seq, Skip, Tick, Var, While,
                     FALSE, ONE, TRUE)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|<>|>=|<=|==|!=|&&|\|\||->|[-+*/·(){}\[\];,:<>!⌈⌉])
""", re.VERBOSE)

KEYWORDS = {"skip", "tick", "halt", "if", "else", "while", "inv", "true",
            "false", "max", "nat", "bounds", "value"}


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind, self.text, self.line, self.col = kind, text, line, col

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        if kind != "ws":
            if kind == "ident" and tok in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, tok, line, pos - line_start + 1))
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            line_start = pos + tok.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "kw")

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def done(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # -- numbers -------------------------------------------------------------

    def rational(self) -> Fraction:
        tok = self.tok
        if tok.kind != "num":
            raise self.error(f"expected a number, found {tok.text!r}")
        self.i += 1
        value = Fraction(tok.text)
        if self.at("/") and self.peek().kind == "num":
            self.i += 1
            den = Fraction(self.tok.text)
            self.i += 1
            if den == 0:
                raise self.error("division by zero", tok)
            value /= den
        return value

    def probability(self) -> Fraction:
        tok = self.tok
        p = self.rational()
        if not 0 <= p <= 1:
            raise self.error(f"probability {p} outside [0, 1]", tok)
        return p

    # -- integer expressions -------------------------------------------------

    def exp(self) -> Exp:
        e = self.term()
        while self.at("+") or self.at("-"):
            if self.tok.text == "+":
                self.i += 1
                e = Add(e, self.term())
            else:
                self.i += 1
                t = self.term()
                e = Add(e, Const(-t.value) if isinstance(t, Const) else Mul(Const(-1), t))
        return e

    def term(self) -> Exp:
        e = self.factor()
        while self.accept("*"):
            e = Mul(e, self.factor())
        return e

    def factor(self) -> Exp:
        tok = self.tok
        if tok.kind == "num":
            if "." in tok.text:
                raise self.error("expected an integer")
            self.i += 1
            return Const(int(tok.text))
        if tok.kind == "ident":
            self.i += 1
            return Var(tok.text)
        if self.accept("-"):
            f = self.factor()
            return Const(-f.value) if isinstance(f, Const) else Mul(Const(-1), f)
        if self.accept("("):
            e = self.exp()
            self.expect(")")
            return e
        raise self.error(f"expected an expression, found {tok.text or 'end of input'!r}")

    # -- boolean expressions -------------------------------------------------

    def bexp(self) -> BExp:
        b = self.band()
        while self.accept("||"):
            b = Or(b, self.band())
        return b

    def band(self) -> BExp:
        b = self.bnot()
        while self.accept("&&"):
            b = And(b, self.bnot())
        return b

    def bnot(self) -> BExp:
        if self.accept("!"):
            return Not(self.bnot())
        return self.batom()

    def batom(self) -> BExp:
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if self.at("("):
            saved = self.i
            try:
                self.i += 1
                b = self.bexp()
                self.expect(")")
                return b
            except ParseError:
                self.i = saved
        a = self.exp()
        tok = self.tok
        ops = (">=", ">", "<=", "<", "==", "!=")
        if tok.text not in ops or tok.kind != "op":
            raise self.error("expected a comparison operator")
        self.i += 1
        b = self.exp()
        return _compare(tok.text, a, b)

    # -- cost expressions ----------------------------------------------------

    def cexp(self) -> CostExpr:
        c = self.cprod()
        while self.accept("+"):
            c = CSum(c, self.cprod())
        return c

    def cprod(self) -> CostExpr:
        start = self.tok
        items = [self.cunit()]
        while self.at("*") or self.at("·"):
            self.i += 1
            items.append(self.cunit())
        return self._combine(items, start)

    def cunit(self):
        tok = self.tok
        if tok.kind == "num":
            bare_one = tok.text == "1" and not (self.peek().text == "/" and self.peek(2).kind == "num")
            return ("num", self.rational(), bare_one)
        if self.accept("⌈"):
            e = self.exp()
            self.expect("⌉")
            return ("norm", Ceil(e))
        if self.accept("nat"):
            self.expect("(")
            e = self.exp()
            self.expect(")")
            return ("norm", Ceil(e))
        if self.accept("["):
            b = self.bexp()
            self.expect("]")
            return ("guard", b)
        if self.accept("max"):
            self.expect("(")
            left = self.cexp()
            self.expect(",")
            right = self.cexp()
            self.expect(")")
            return ("cexp", CMax(left, right))
        if self.accept("("):
            c = self.cexp()
            self.expect(")")
            return ("cexp", c)
        raise self.error(f"expected a cost expression, found {tok.text or 'end of input'!r}")

    def _combine(self, items, start: Token) -> CostExpr:
        from .costexpr import cmul, scale

        for k, item in enumerate(items):
            if item[0] == "guard":
                rest = items[k + 1:]
                if not rest:
                    raise self.error("guard bracket needs a cost expression after it", start)
                body = Guard(item[1], self._combine(rest, start))
                if k == 0:
                    return body
                return cmul(self._combine(items[:k], start), body)
        coeff: Optional[Fraction] = None
        norms: List[Norm] = []
        compounds: List[CostExpr] = []
        for k, item in enumerate(items):
            if item[0] == "num":
                if k == 0:
                    coeff = item[1]
                elif item[2]:
                    norms.append(ONE)
                else:
                    coeff = item[1] * (1 if coeff is None else coeff)
            elif item[0] == "norm":
                norms.append(item[1])
            else:
                compounds.append(item[1])
        if compounds and len(items) == 1:
            return compounds[0]
        if coeff is None:
            coeff = Fraction(1)
        norm: Norm = ONE
        if norms:
            norm = norms[0]
            for n in norms[1:]:
                norm = NormMul(norm, n)
        result: CostExpr = Scaled(coeff, norm)
        for c in compounds:
            result = cmul(result, c)
        return result

    # -- commands ------------------------------------------------------------

    def program(self) -> Command:
        c = self.seq()
        self.done()
        return c

    def seq(self) -> Command:
        first = self.stmt()
        if self.accept(";"):
            if self.at("}") or self.tok.kind == "eof":
                return first
            return Seq(first, self.seq())
        return first

    def block(self) -> Command:
        self.expect("{")
        c = self.seq()
        self.expect("}")
        return c

    def stmt(self) -> Command:
        tok = self.tok
        if self.accept("skip"):
            return Skip()
        if self.accept("halt"):
            return Halt()
        if self.accept("tick"):
            self.expect("(")
            cost_tok = self.tok
            cost = self.rational()
            self.expect(")")
            if cost < 0:
                raise self.error("negative tick cost", cost_tok)
            return Tick(cost)
        if self.accept("if"):
            assertion = self._assertion()
            self.expect("(")
            guard = self.bexp()
            self.expect(")")
            then = self.block()
            orelse: Command = Skip()
            if self.accept("else"):
                orelse = self.block()
            return If(assertion, guard, then, orelse)
        if self.accept("while"):
            assertion = self._assertion()
            self.expect("(")
            guard = self.bexp()
            self.expect(")")
            annotation = self._annotation() if self.at("inv") else None
            body = self.block()
            return While(assertion, guard, body, annotation)
        if tok.kind == "ident" and self.peek().text == ":=":
            self.i += 2
            return Assign(tok.text, self._dexp())
        if self.at("{"):
            c = self.block()
            while self.at("<>") or self.at("["):
                if self.accept("<>"):
                    c = NdChoice(c, self.block())
                else:
                    self.expect("[")
                    p = self.probability()
                    self.expect("]")
                    c = ProbChoice(p, c, self.block())
            return c
        raise self.error(f"expected a command, found {tok.text or 'end of input'!r}")

    def _assertion(self) -> BExp:
        if self.accept("["):
            b = self.bexp()
            self.expect("]")
            return b
        return TRUE

    def _annotation(self) -> LoopAnnotation:
        self.expect("inv")
        self.expect("(")
        invariant = self.cexp()
        bounds: List[Tuple[CostExpr, CostExpr]] = []
        value = None
        while self.accept(";"):
            if self.accept("bounds"):
                self.expect(":")
                while True:
                    g = self.cexp()
                    self.expect("->")
                    bounds.append((g, self.cexp()))
                    if not self.accept(","):
                        break
            elif self.accept("value"):
                self.expect(":")
                value = self.cexp()
            else:
                raise self.error("expected 'bounds:' or 'value:' clause")
        self.expect(")")
        return LoopAnnotation(invariant, tuple(bounds), value)

    def _dexp(self) -> DExp:
        start = self.tok
        if not self.accept("{"):
            return DExp.point(self.exp())
        choices = []
        while True:
            p_tok = self.tok
            p = self.rational()
            if not 0 < p <= 1:
                raise self.error(f"probability {p} outside (0, 1]", p_tok)
            self.expect(":")
            choices.append((p, self.exp()))
            if not self.accept(","):
                break
        self.expect("}")
        total = sum((p for p, _ in choices), Fraction(0))
        if total != 1:
            raise self.error(f"distribution probabilities sum to {total}, expected 1", start)
        return DExp(tuple(choices))


def _compare(op: str, a: Exp, b: Exp) -> BExp:
    def succ(e: Exp) -> Exp:
        return Const(e.value + 1) if isinstance(e, Const) else Add(e, Const(1))

    if op == ">=":
        return Geq(a, b)
    if op == ">":
        return Geq(a, succ(b))
    if op == "<=":
        return Geq(b, a)
    if op == "<":
        return Geq(b, succ(a))
    eq = And(Geq(a, b), Geq(b, a))
    return eq if op == "==" else Not(eq)


def parse_program(text: str) -> Command:
    return Parser(text).program()


def parse_exp(text: str) -> Exp:
    p = Parser(text)
    e = p.exp()
    p.done()
    return e


def parse_bexp(text: str) -> BExp:
    p = Parser(text)
    b = p.bexp()
    p.done()
    return b


def parse_cexp(text: str) -> CostExpr:
    p = Parser(text)
    c = p.cexp()
    p.done()
    return c
