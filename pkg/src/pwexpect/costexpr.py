"""Cost expressions: evaluation, algebra, simplification and the syntactic
expected-cost transformer ``et♯`` with its side conditions.

A bound produced by `et_sharp` is only claimed sound once every returned
`SideCondition` has been discharged, here by exact checking on a finite store
domain (`discharge`).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

from .lang import (Store, bexp_vars, eval_bexp, eval_exp, exp_vars,
                   subst_bexp, subst_exp)
from .numeric import InvariantVerdict
from .syntax import (Add, And, Assign, BExp, BTrue, Ceil, CMax, Command,
                     Const, CostExpr, CSum, Exp, FALSE, Geq, Guard, Halt, Hole,
                     If, Mul, NdChoice, Norm, NormMul, Not, One, ONE, Or,
                     ProbChoice, Scaled, Seq, Skip, TRUE, Tick, Var, While,
                     ZERO, conj, const, has_loop, is_probabilistic, neg)


class AnnotationError(ValueError):
    """A loop lacks the annotation the analysis needs, or it is malformed."""


class NonConcaveContext(ValueError):
    """An invariant context fails the concavity check for a probabilistic body."""


# ----------------------------------------------------------------------------
# Evaluation

def eval_norm(m: Norm, s: Store, holes: Sequence[Fraction] = ()) -> Fraction:
    if isinstance(m, One):
        return Fraction(1)
    if isinstance(m, Ceil):
        return Fraction(max(eval_exp(m.exp, s), 0))
    if isinstance(m, NormMul):
        return eval_norm(m.left, s, holes) * eval_norm(m.right, s, holes)
    if isinstance(m, Hole):
        return Fraction(holes[m.index - 1])
    raise TypeError(m)


def eval_cexp(c: CostExpr, s: Store, holes: Sequence[Fraction] = ()) -> Fraction:
    """Exact value of ``c`` at ``s``; ``holes`` gives values for hole norms."""
    if isinstance(c, Scaled):
        if c.coeff == 0:
            return Fraction(0)
        return c.coeff * eval_norm(c.norm, s, holes)
    if isinstance(c, CSum):
        return eval_cexp(c.left, s, holes) + eval_cexp(c.right, s, holes)
    if isinstance(c, CMax):
        return max(eval_cexp(c.left, s, holes), eval_cexp(c.right, s, holes))
    if isinstance(c, Guard):
        if not eval_bexp(c.cond, s):
            return Fraction(0)
        return eval_cexp(c.body, s, holes)
    raise TypeError(c)


# ----------------------------------------------------------------------------
# Algebra

def scale(p, c: CostExpr) -> CostExpr:
    """``p ⊡ c`` for a nonnegative rational ``p``, pushed into the leaves."""
    p = Fraction(p)
    if p == 1:
        return c
    if isinstance(c, Scaled):
        return Scaled(p * c.coeff, c.norm)
    if isinstance(c, Guard):
        return Guard(c.cond, scale(p, c.body))
    return type(c)(scale(p, c.left), scale(p, c.right))


def _norm_mul(m: Norm, n: Norm) -> Norm:
    if isinstance(m, One):
        return n
    if isinstance(n, One):
        return m
    return NormMul(m, n)


def cmul(c: CostExpr, d: CostExpr) -> CostExpr:
    """Product of two cost expressions, distributed down to norm products.

    Valid because every cost expression is nonnegative, so multiplication
    distributes over both ``+`` and ``max``.
    """
    if isinstance(c, Scaled) and isinstance(d, Scaled):
        return Scaled(c.coeff * d.coeff, _norm_mul(c.norm, d.norm))
    if isinstance(c, Guard):
        return Guard(c.cond, cmul(c.body, d))
    if isinstance(c, (CSum, CMax)):
        return type(c)(cmul(c.left, d), cmul(c.right, d))
    if isinstance(d, Guard):
        return Guard(d.cond, cmul(c, d.body))
    return type(d)(cmul(c, d.left), cmul(c, d.right))


def csum(terms: Iterable[CostExpr]) -> CostExpr:
    result = None
    for t in terms:
        result = t if result is None else CSum(result, t)
    return ZERO if result is None else result


def subst_cexp(c: CostExpr, x: str, a: Exp) -> CostExpr:
    """``c[x/a]``: replace ``x`` by ``a`` inside every norm and guard."""
    if isinstance(c, Scaled):
        return Scaled(c.coeff, _subst_norm(c.norm, x, a))
    if isinstance(c, Guard):
        return Guard(subst_bexp(c.cond, x, a), subst_cexp(c.body, x, a))
    return type(c)(subst_cexp(c.left, x, a), subst_cexp(c.right, x, a))


def _subst_norm(m: Norm, x: str, a: Exp) -> Norm:
    if isinstance(m, Ceil):
        return Ceil(subst_exp(m.exp, x, a))
    if isinstance(m, NormMul):
        return NormMul(_subst_norm(m.left, x, a), _subst_norm(m.right, x, a))
    return m


def cexp_vars(c: CostExpr):
    if isinstance(c, Scaled):
        yield from _norm_vars(c.norm)
    elif isinstance(c, Guard):
        yield from bexp_vars(c.cond)
        yield from cexp_vars(c.body)
    else:
        yield from cexp_vars(c.left)
        yield from cexp_vars(c.right)


def _norm_vars(m: Norm):
    if isinstance(m, Ceil):
        yield from exp_vars(m.exp)
    elif isinstance(m, NormMul):
        yield from _norm_vars(m.left)
        yield from _norm_vars(m.right)


def _has_hole(x) -> bool:
    if isinstance(x, Hole):
        return True
    if isinstance(x, (One, Ceil)):
        return False
    if isinstance(x, Scaled):
        return _has_hole(x.norm)
    if isinstance(x, Guard):
        return _has_hole(x.body)
    return _has_hole(x.left) or _has_hole(x.right)


# ----------------------------------------------------------------------------
# Simplification

def simplify_exp(e: Exp) -> Exp:
    if isinstance(e, (Var, Const)):
        return e
    left, right = simplify_exp(e.left), simplify_exp(e.right)
    if isinstance(left, Const) and isinstance(right, Const):
        v = left.value + right.value if isinstance(e, Add) else left.value * right.value
        return Const(v)
    if isinstance(e, Add):
        if isinstance(left, Const) and left.value == 0:
            return right
        if isinstance(right, Const):
            if right.value == 0:
                return left
            if isinstance(left, Add) and isinstance(left.right, Const):
                return simplify_exp(Add(left.left, Const(left.right.value + right.value)))
        return Add(left, right)
    for a, b in ((left, right), (right, left)):
        if isinstance(a, Const):
            if a.value == 0:
                return Const(0)
            if a.value == 1:
                return b
    return Mul(left, right)


def simplify_bexp(b: BExp) -> BExp:
    if not any(True for _ in bexp_vars(b)):
        return TRUE if eval_bexp(b, Store()) else FALSE
    if isinstance(b, Geq):
        return Geq(simplify_exp(b.left), simplify_exp(b.right))
    if isinstance(b, Not):
        arg = simplify_bexp(b.arg)
        return arg.arg if isinstance(arg, Not) else Not(arg)
    if isinstance(b, (And, Or)):
        left, right = simplify_bexp(b.left), simplify_bexp(b.right)
        absorbing, unit = (FALSE, TRUE) if isinstance(b, And) else (TRUE, FALSE)
        if absorbing in (left, right):
            return absorbing
        if left == unit:
            return right
        if right == unit or left == right:
            return left
        return type(b)(left, right)
    return b


def _split_norm(m: Norm) -> Tuple[Fraction, List[Norm]]:
    """Constant factor and remaining store-dependent factors of a norm."""
    if isinstance(m, One):
        return Fraction(1), []
    if isinstance(m, Ceil):
        e = simplify_exp(m.exp)
        if isinstance(e, Const):
            return Fraction(max(e.value, 0)), []
        return Fraction(1), [Ceil(e)]
    if isinstance(m, NormMul):
        q1, f1 = _split_norm(m.left)
        q2, f2 = _split_norm(m.right)
        return q1 * q2, f1 + f2
    return Fraction(1), [m]


def _terms(c: CostExpr) -> List[CostExpr]:
    if isinstance(c, CSum):
        return _terms(c.left) + _terms(c.right)
    return [c]


def simplify(c: CostExpr) -> CostExpr:
    """Semantics-preserving normalisation: folds constants and trivial guards,
    drops zero terms, flattens and merges sums, removes duplicate `max` arms."""
    if isinstance(c, Scaled):
        q, factors = _split_norm(c.norm)
        q *= c.coeff
        if q == 0:
            return ZERO
        norm: Norm = ONE
        for f in factors:
            norm = _norm_mul(norm, f)
        return Scaled(q, norm)
    if isinstance(c, CSum):
        merged: List[CostExpr] = []
        for t in _terms(c):
            for u in _terms(simplify(t)):
                if u == ZERO:
                    continue
                for i, v in enumerate(merged):
                    if isinstance(u, Scaled) and isinstance(v, Scaled) and u.norm == v.norm:
                        merged[i] = Scaled(u.coeff + v.coeff, u.norm)
                        break
                    if isinstance(u, Guard) and isinstance(v, Guard) and u.cond == v.cond:
                        merged[i] = Guard(u.cond, simplify(CSum(v.body, u.body)))
                        break
                else:
                    merged.append(u)
        return csum(merged)
    if isinstance(c, CMax):
        left, right = simplify(c.left), simplify(c.right)
        if left == right or right == ZERO:
            return left
        if left == ZERO:
            return right
        if (isinstance(left, Scaled) and isinstance(right, Scaled)
                and isinstance(left.norm, One) and isinstance(right.norm, One)):
            return left if left.coeff >= right.coeff else right
        return CMax(left, right)
    if isinstance(c, Guard):
        cond = simplify_bexp(c.cond)
        if cond == FALSE:
            return ZERO
        body = simplify(c.body)
        if cond == TRUE or body == ZERO:
            return body if cond == TRUE else ZERO
        if isinstance(body, Guard):
            if body.cond == cond:
                return body
            return Guard(simplify_bexp(And(cond, body.cond)), body.body)
        return Guard(cond, body)
    raise TypeError(c)


# ----------------------------------------------------------------------------
# Hole contexts and concavity

@dataclass(frozen=True)
class HoleContext:
    """Cost expression whose norms may be holes ``•1 .. •k``."""

    expr: CostExpr
    arity: int

    def instantiate(self, fillers: Sequence[CostExpr]) -> CostExpr:
        if len(fillers) != self.arity:
            raise ValueError(f"context takes {self.arity} fillers, got {len(fillers)}")
        return _fill(self.expr, fillers)

    def evaluate(self, s: Store, values: Sequence[Fraction]) -> Fraction:
        return eval_cexp(self.expr, s, values)


def _fill(c: CostExpr, fillers: Sequence[CostExpr]) -> CostExpr:
    if isinstance(c, Scaled):
        if not _has_hole(c.norm):
            return c
        return scale(c.coeff, _fill_norm(c.norm, fillers))
    if isinstance(c, Guard):
        return Guard(c.cond, _fill(c.body, fillers))
    return type(c)(_fill(c.left, fillers), _fill(c.right, fillers))


def _fill_norm(m: Norm, fillers: Sequence[CostExpr]) -> CostExpr:
    if isinstance(m, Hole):
        return fillers[m.index - 1]
    if isinstance(m, NormMul):
        return cmul(_fill_norm(m.left, fillers), _fill_norm(m.right, fillers))
    return Scaled(Fraction(1), m)


def decompose(c: CostExpr) -> Tuple[HoleContext, List[CostExpr]]:
    """Split ``c`` into a context ``C`` and terms ``g1..gk`` with ``c = C[g1..gk]``.

    Holes are the maximal store-dependent subterms: each non-constant norm
    (its coefficient stays in the context) and each guarded subterm. Sums,
    maxima and constants form the context, so ``⟦C⟧`` depends on the store
    only through the hole values.
    """
    gs: List[CostExpr] = []

    def walk(e: CostExpr) -> CostExpr:
        if isinstance(e, Scaled):
            if isinstance(e.norm, One):
                return e
            gs.append(Scaled(Fraction(1), e.norm))
            return Scaled(e.coeff, Hole(len(gs)))
        if isinstance(e, Guard):
            gs.append(e)
            return Scaled(Fraction(1), Hole(len(gs)))
        return type(e)(walk(e.left), walk(e.right))

    expr = walk(c)
    return HoleContext(expr, len(gs)), gs


def trivial_context(c: CostExpr) -> Tuple[HoleContext, List[CostExpr]]:
    """The coarsest decomposition ``C = •1``, ``g1 = c``; always concave."""
    return HoleContext(Scaled(Fraction(1), Hole(1)), 1), [c]


@dataclass(frozen=True)
class ConcavityVerdict:
    concave: bool
    reason: str = ""
    subterm: Optional[CostExpr] = None

    def __bool__(self):
        return self.concave


def check_concave_context(ctx: HoleContext) -> ConcavityVerdict:
    """Sufficient syntactic test that ``λr. ⟦C[r]⟧`` is concave.

    Accepts contexts in which every hole occurs once, no hole sits under a
    ``max``, and no norm product has two hole-carrying factors. Per store
    such a context is a linear function of the hole values with nonnegative
    slopes plus a nonnegative constant, hence weakly monotone and concave.
    """
    counts: dict = {}

    def count(x):
        if isinstance(x, Hole):
            counts[x.index] = counts.get(x.index, 0) + 1
        elif isinstance(x, Scaled):
            count(x.norm)
        elif isinstance(x, Guard):
            count(x.body)
        elif isinstance(x, (NormMul, CSum, CMax)):
            count(x.left)
            count(x.right)

    count(ctx.expr)
    for i in range(1, ctx.arity + 1):
        if counts.get(i, 0) != 1:
            return ConcavityVerdict(False, f"hole •{i} occurs {counts.get(i, 0)} times", ctx.expr)
    extra = set(counts) - set(range(1, ctx.arity + 1))
    if extra:
        return ConcavityVerdict(False, f"unknown hole •{min(extra)}", ctx.expr)

    # verdicts are falsy when negative, so combine with `is None`, never `or`
    def first(*parts) -> Optional[ConcavityVerdict]:
        for part in parts:
            v = find(part)
            if v is not None:
                return v
        return None

    def find(x) -> Optional[ConcavityVerdict]:
        if isinstance(x, CMax):
            if _has_hole(x):
                return ConcavityVerdict(False, "hole under max", x)
            return None
        if isinstance(x, Scaled):
            return find(x.norm)
        if isinstance(x, NormMul):
            if _has_hole(x.left) and _has_hole(x.right):
                return ConcavityVerdict(False, "product of two hole-carrying factors", Scaled(Fraction(1), x))
            return first(x.left, x.right)
        if isinstance(x, Guard):
            return find(x.body)
        if isinstance(x, CSum):
            return first(x.left, x.right)
        return None

    verdict = find(ctx.expr)
    return verdict if verdict is not None else ConcavityVerdict(True)


# ----------------------------------------------------------------------------
# Side conditions

@dataclass(frozen=True)
class SideCondition:
    """Obligation ``guard ⊨ lhs ⊑ rhs``; ``provenance`` names the emitting rule."""

    guard: BExp
    lhs: CostExpr
    rhs: CostExpr
    provenance: str


def check_leq(lhs: CostExpr, rhs: CostExpr, guard: BExp,
              domain: Iterable[Store]) -> InvariantVerdict:
    """Exact check of ``⟦lhs⟧ ≤ ⟦rhs⟧`` at every store of ``domain`` satisfying
    ``guard``; returns the first violation in domain order."""
    n = 0
    for s in domain:
        if not eval_bexp(guard, s):
            continue
        n += 1
        lv, rv = eval_cexp(lhs, s), eval_cexp(rhs, s)
        if lv > rv:
            return InvariantVerdict(False, s, lv, rv, n)
    return InvariantVerdict(True, checked=n)


def discharge(conds: Iterable[SideCondition], domain: Sequence[Store]):
    """Pairs ``(condition, verdict)`` for every side condition."""
    return [(sc, check_leq(sc.lhs, sc.rhs, sc.guard, domain)) for sc in conds]


# ----------------------------------------------------------------------------
# The transformer

@dataclass(frozen=True)
class LoopRecord:
    """An annotated loop met by `et_sharp` together with its continuation."""

    loop: While
    post: CostExpr


def et_sharp(flag: bool, c: Command, f: CostExpr,
             trace: Optional[List[LoopRecord]] = None) -> Tuple[CostExpr, List[SideCondition]]:
    """Syntactic expectation transformer: ``ect♯`` when ``flag`` else ``evt♯``.

    Returns the bound and the side conditions under which it is sound.
    Loops are handled through their annotations; annotated loops analysed
    for cost are appended to ``trace`` when given.
    """
    conds: List[SideCondition] = []
    bound = _et_sharp(flag, c, f, conds, trace)
    return bound, conds


def evt_bound(c: Command, g: CostExpr) -> Tuple[CostExpr, List[SideCondition]]:
    """Bound ``h`` with ``evt[c](⟦g⟧) ⊑ ⟦h⟧`` once the conditions hold."""
    return et_sharp(False, c, g)


def _et_sharp(flag, c, f, conds, trace) -> CostExpr:
    if isinstance(c, Skip):
        return f
    if isinstance(c, Tick):
        return CSum(const(c.cost), f) if flag else f
    if isinstance(c, Halt):
        return ZERO
    if isinstance(c, Assign):
        return csum(scale(p, subst_cexp(f, c.var, a)) for p, a in c.dist.choices)
    if isinstance(c, If):
        then = _et_sharp(flag, c.then, f, conds, trace)
        orelse = _et_sharp(flag, c.orelse, f, conds, trace)
        return CSum(Guard(conj(c.assertion, c.guard), then),
                    Guard(conj(c.assertion, neg(c.guard)), orelse))
    if isinstance(c, NdChoice):
        return CMax(_et_sharp(flag, c.left, f, conds, trace),
                    _et_sharp(flag, c.right, f, conds, trace))
    if isinstance(c, ProbChoice):
        left = _et_sharp(flag, c.left, f, conds, trace)
        right = _et_sharp(flag, c.right, f, conds, trace)
        return CSum(scale(c.prob, left), scale(1 - c.prob, right))
    if isinstance(c, Seq):
        if flag and has_loop(c.second):
            return _seq_rule(c, f, conds, trace)
        return _et_sharp(flag, c.first, _et_sharp(flag, c.second, f, conds, trace), conds, trace)
    if isinstance(c, While):
        if flag:
            return _while_rule(c, f, conds, trace)
        return _while_value_rule(c, f, conds, trace)
    raise TypeError(c)


def _context_for(bound: CostExpr, body: Command, overrides=()) -> Tuple[HoleContext, List[CostExpr]]:
    ctx, gs = decompose(bound)
    if is_probabilistic(body):
        verdict = check_concave_context(ctx)
        if not verdict:
            if overrides:
                raise NonConcaveContext(
                    f"invariant context is not concave ({verdict.reason}) and the "
                    f"loop body is probabilistic")
            ctx, gs = trivial_context(bound)
    return ctx, gs


def _seq_rule(c: Seq, f, conds, trace) -> CostExpr:
    tail = simplify(_et_sharp(True, c.second, f, conds, trace))
    ctx, gs = _context_for(tail, c.first)
    hs = [_et_sharp(False, c.first, g, conds, trace) for g in gs]
    cost = _et_sharp(True, c.first, ZERO, conds, trace)
    return CSum(cost, ctx.instantiate(hs))


def _annotation(c: While):
    if c.annotation is None:
        from .pretty import pretty_bexp
        raise AnnotationError(f"while loop with guard {pretty_bexp(c.guard)!r} has no inv(...) annotation")
    return c.annotation


def _while_rule(c: While, f, conds, trace) -> CostExpr:
    ann = _annotation(c)
    inv = ann.invariant
    overrides = {simplify(g): h for g, h in ann.bounds}
    ctx, gs = _context_for(inv, c.body, overrides)
    unknown = set(overrides) - {simplify(g) for g in gs}
    if unknown:
        from .pretty import pretty_cexp
        raise AnnotationError("bounds given for terms that are not holes of the invariant: "
                              + ", ".join(sorted(pretty_cexp(g) for g in unknown)))
    hs = []
    for g in gs:
        h = _et_sharp(False, c.body, g, conds, trace)
        user = overrides.get(simplify(g))
        if user is not None:
            # h is only consumed under the guard-true condition
            conds.append(SideCondition(conj(c.assertion, c.guard), h, user, "while:bound"))
            h = user
        hs.append(h)
    cost = _et_sharp(True, c.body, ZERO, conds, trace)
    conds.append(SideCondition(conj(c.assertion, c.guard),
                               CSum(cost, ctx.instantiate(hs)), inv, "while:guard-true"))
    conds.append(SideCondition(conj(c.assertion, neg(c.guard)), f, inv, "while:guard-false"))
    if trace is not None:
        trace.append(LoopRecord(c, f))
    return inv


def _while_value_rule(c: While, f, conds, trace) -> CostExpr:
    ann = _annotation(c)
    inv = ann.value if ann.value is not None else ann.invariant
    after = _et_sharp(False, c.body, inv, conds, trace)
    conds.append(SideCondition(conj(c.assertion, c.guard), after, inv, "while-value:guard-true"))
    conds.append(SideCondition(conj(c.assertion, neg(c.guard)), f, inv, "while-value:guard-false"))
    return inv
