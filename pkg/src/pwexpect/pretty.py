"""Pretty printer producing text that parses back to the same AST."""

from __future__ import annotations

from fractions import Fraction

from .syntax import (Add, And, Assign, BExp, BTrue, Ceil, CMax, Command,
                     Const, CostExpr, CSum, DExp, Exp, Geq, Guard, Halt, Hole,
                     If, LoopAnnotation, Mul, NdChoice, Norm, NormMul, Not, One,
                     Or, ProbChoice, Scaled, Seq, Skip, Tick, Var, While)


def fmt_rat(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def pretty_exp(e: Exp) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Add):
        left = pretty_exp(e.left)
        if isinstance(e.right, Const) and e.right.value < 0:
            return f"{left} - {-e.right.value}"
        right = pretty_exp(e.right)
        if isinstance(e.right, Add):
            right = f"({right})"
        return f"{left} + {right}"
    if isinstance(e, Mul):
        left = pretty_exp(e.left)
        right = pretty_exp(e.right)
        if isinstance(e.left, Add):
            left = f"({left})"
        if isinstance(e.right, (Add, Mul)):
            right = f"({right})"
        return f"{left} * {right}"
    raise TypeError(e)


def pretty_bexp(b: BExp) -> str:
    if isinstance(b, BTrue):
        return "true"
    if isinstance(b, Geq):
        # `a > 0` parses to `a >= 1`; print it back the way it is usually written
        if b.right == Const(1):
            return f"{pretty_exp(b.left)} > 0"
        return f"{pretty_exp(b.left)} >= {pretty_exp(b.right)}"
    if isinstance(b, Not):
        if isinstance(b.arg, BTrue):
            return "false"
        inner = pretty_bexp(b.arg)
        if isinstance(b.arg, (Geq, And, Or)):
            inner = f"({inner})"
        return f"!{inner}"
    if isinstance(b, And):
        left = pretty_bexp(b.left)
        right = pretty_bexp(b.right)
        if isinstance(b.left, Or):
            left = f"({left})"
        if isinstance(b.right, (And, Or)):
            right = f"({right})"
        return f"{left} && {right}"
    if isinstance(b, Or):
        left = pretty_bexp(b.left)
        right = pretty_bexp(b.right)
        if isinstance(b.right, Or):
            right = f"({right})"
        return f"{left} || {right}"
    raise TypeError(b)


def _has_one(m: Norm) -> bool:
    if isinstance(m, One):
        return True
    if isinstance(m, NormMul):
        return _has_one(m.left) or _has_one(m.right)
    return False


def pretty_norm(m: Norm) -> str:
    if isinstance(m, One):
        return "1"
    if isinstance(m, Ceil):
        return f"⌈{pretty_exp(m.exp)}⌉"
    if isinstance(m, Hole):
        return f"•{m.index}"
    if isinstance(m, NormMul):
        right = pretty_norm(m.right)
        if isinstance(m.right, NormMul):
            right = f"({right})"
        return f"{pretty_norm(m.left)}·{right}"
    raise TypeError(m)


def pretty_cexp(c: CostExpr) -> str:
    if isinstance(c, Scaled):
        if isinstance(c.norm, One):
            return fmt_rat(c.coeff)
        if c.coeff == 1 and not _has_one(c.norm):
            return pretty_norm(c.norm)
        return f"{fmt_rat(c.coeff)}·{pretty_norm(c.norm)}"
    if isinstance(c, CSum):
        right = pretty_cexp(c.right)
        if isinstance(c.right, CSum):
            right = f"({right})"
        return f"{pretty_cexp(c.left)} + {right}"
    if isinstance(c, CMax):
        return f"max({pretty_cexp(c.left)}, {pretty_cexp(c.right)})"
    if isinstance(c, Guard):
        body = pretty_cexp(c.body)
        if isinstance(c.body, CSum):
            body = f"({body})"
        return f"[{pretty_bexp(c.cond)}]·{body}"
    raise TypeError(c)


def pretty_dexp(d: DExp) -> str:
    if d.is_point:
        return pretty_exp(d.choices[0][1])
    inner = ", ".join(f"{fmt_rat(p)}: {pretty_exp(e)}" for p, e in d.choices)
    return "{" + inner + "}"


def pretty_annotation(a: LoopAnnotation) -> str:
    parts = [pretty_cexp(a.invariant)]
    if a.bounds:
        bounds = ", ".join(f"{pretty_cexp(g)} -> {pretty_cexp(h)}" for g, h in a.bounds)
        parts.append(f"bounds: {bounds}")
    if a.value is not None:
        parts.append(f"value: {pretty_cexp(a.value)}")
    return "inv(" + "; ".join(parts) + ")"


def _assertion(b: BExp) -> str:
    return "" if isinstance(b, BTrue) else f"[{pretty_bexp(b)}] "


def pretty(c: Command) -> str:
    if isinstance(c, Skip):
        return "skip"
    if isinstance(c, Tick):
        return f"tick({fmt_rat(c.cost)})"
    if isinstance(c, Halt):
        return "halt"
    if isinstance(c, Assign):
        return f"{c.var} := {pretty_dexp(c.dist)}"
    if isinstance(c, If):
        return (f"if {_assertion(c.assertion)}({pretty_bexp(c.guard)}) "
                f"{{{pretty(c.then)}}} else {{{pretty(c.orelse)}}}")
    if isinstance(c, While):
        ann = f"{pretty_annotation(c.annotation)} " if c.annotation else ""
        return f"while {_assertion(c.assertion)}({pretty_bexp(c.guard)}) {ann}{{{pretty(c.body)}}}"
    if isinstance(c, NdChoice):
        return f"{{{pretty(c.left)}}} <> {{{pretty(c.right)}}}"
    if isinstance(c, ProbChoice):
        return f"{{{pretty(c.left)}}} [{fmt_rat(c.prob)}] {{{pretty(c.right)}}}"
    if isinstance(c, Seq):
        first = pretty(c.first)
        if isinstance(c.first, Seq):
            first = f"{{{first}}}"
        return f"{first}; {pretty(c.second)}"
    raise TypeError(c)
