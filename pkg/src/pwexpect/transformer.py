"""Semantic expectation transformer ``et[c]`` over store expectations.

Expectations are memoised callables ``Store -> Fraction | INF``. Loops are
evaluated by Kleene iteration from the zero expectation: ``fuel`` iterates
give a pointwise lower approximation of the least fixed point that is
monotone in ``fuel``.
"""

from __future__ import annotations

import itertools
import sys
from fractions import Fraction
from typing import Callable, Dict, Iterable, Sequence

from .lang import Store, eval_bexp, eval_dexp
from .mdist import (Active, Multidistribution, Terminal, convex_union,
                    expectation, successors)
from .numeric import INF, ExtRat, InvariantVerdict, emul
from .syntax import (Assign, BExp, Command, CostExpr, Halt, If, NdChoice,
                     ProbChoice, Seq, Skip, Tick, While)


class Expectation:
    """Total map from stores to extended nonnegative rationals."""

    __slots__ = ("fn", "tag", "_memo")

    def __init__(self, fn: Callable[[Store], ExtRat], tag: str = "λσ"):
        self.fn = fn
        self.tag = tag
        self._memo: Dict[Store, ExtRat] = {}

    def __call__(self, s: Store) -> ExtRat:
        v = self._memo.get(s)
        if v is None:
            v = self._memo[s] = self.fn(s)
        return v

    def __repr__(self):
        return f"Expectation({self.tag})"

    @classmethod
    def const(cls, r) -> "Expectation":
        r = r if r == INF else Fraction(r)
        return cls(lambda s: r, str(r))

    @classmethod
    def iverson(cls, b: BExp) -> "Expectation":
        from .pretty import pretty_bexp
        return cls(lambda s: Fraction(1) if eval_bexp(b, s) else Fraction(0), f"[{pretty_bexp(b)}]")

    @classmethod
    def of_cexp(cls, c: CostExpr) -> "Expectation":
        from .costexpr import eval_cexp
        from .pretty import pretty_cexp
        return cls(lambda s: eval_cexp(c, s), pretty_cexp(c))

    def __add__(self, other: "Expectation") -> "Expectation":
        return Expectation(lambda s: self(s) + other(s), f"({self.tag} + {other.tag})")

    def __mul__(self, other: "Expectation") -> "Expectation":
        return Expectation(lambda s: emul(self(s), other(s)), f"{self.tag}·{other.tag}")

    def scale(self, r) -> "Expectation":
        return Expectation(lambda s: emul(r, self(s)), f"{r}·{self.tag}")

    def maximum(self, other: "Expectation") -> "Expectation":
        return Expectation(lambda s: max(self(s), other(s)), f"max({self.tag}, {other.tag})")

    def leq_on(self, other: "Expectation", domain: Iterable[Store]) -> bool:
        return all(self(s) <= other(s) for s in domain)


ZERO = Expectation.const(0)


def et(flag: bool, c: Command, f: Expectation, fuel: int) -> Expectation:
    """``ect[c](f)`` when ``flag`` is true, ``evt[c](f)`` otherwise.

    Each while loop is replaced by its ``fuel``-th Kleene iterate.
    """
    if fuel < 0:
        raise ValueError("fuel must be nonnegative")
    # evaluating the n-th iterate recurses through all n iterates
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 1000 + 40 * fuel))
    return _et(flag, c, f, fuel)


def _et(flag, c, f, fuel) -> Expectation:
    if isinstance(c, Skip):
        return f
    if isinstance(c, Tick):
        if not flag or c.cost == 0:
            return f
        r = c.cost
        return Expectation(lambda s: r + f(s), f"({r} + {f.tag})")
    if isinstance(c, Halt):
        return ZERO
    if isinstance(c, Assign):
        x, d = c.var, c.dist

        def assign(s):
            total: ExtRat = Fraction(0)
            for v, p in eval_dexp(d, s).items():
                total += emul(p, f(s.set(x, v)))
            return total

        return Expectation(assign, f"{f.tag}[{x}:=..]")
    if isinstance(c, If):
        then = _et(flag, c.then, f, fuel)
        orelse = _et(flag, c.orelse, f, fuel)
        assertion, guard = c.assertion, c.guard

        def branch(s):
            if not eval_bexp(assertion, s):
                return Fraction(0)
            return then(s) if eval_bexp(guard, s) else orelse(s)

        return Expectation(branch, "if")
    if isinstance(c, NdChoice):
        return _et(flag, c.left, f, fuel).maximum(_et(flag, c.right, f, fuel))
    if isinstance(c, ProbChoice):
        p = c.prob
        left = _et(flag, c.left, f, fuel) if p > 0 else ZERO
        right = _et(flag, c.right, f, fuel) if p < 1 else ZERO
        return Expectation(lambda s: emul(p, left(s)) + emul(1 - p, right(s)), "pchoice")
    if isinstance(c, Seq):
        return _et(flag, c.first, _et(flag, c.second, f, fuel), fuel)
    if isinstance(c, While):
        g = ZERO
        for _ in range(fuel):
            g = _loop_step(flag, c, f, g, fuel)
        return g
    raise TypeError(c)


def _loop_step(flag, loop: While, f: Expectation, g: Expectation, fuel: int) -> Expectation:
    """One application of the loop's characteristic functional to ``g``."""
    inner = _et(flag, loop.body, g, fuel)
    assertion, guard = loop.assertion, loop.guard

    def step(s):
        if not eval_bexp(assertion, s):
            return Fraction(0)
        return inner(s) if eval_bexp(guard, s) else f(s)

    return Expectation(step, "loop")


def loop_functional(flag: bool, loop: While, f: Expectation, fuel: int):
    """``G ↦ [β∧b]·et(body)(G) ⊕ [β∧¬b]·f`` as a Python function."""
    return lambda g: _loop_step(flag, loop, f, g, fuel)


def lift_config_expect(flag: bool, f: Expectation, fuel: int):
    """``e[c](f)`` on configurations: active ⟨c, σ⟩ via ``et``, terminal
    stores via ``f``, aborts to 0."""
    cache: Dict[Command, Expectation] = {}

    def e(conf) -> ExtRat:
        if isinstance(conf, Active):
            t = cache.get(conf.command)
            if t is None:
                t = cache[conf.command] = et(flag, conf.command, f, fuel)
            return t(conf.store)
        if isinstance(conf, Terminal):
            return f(conf.store)
        return Fraction(0)

    return e


def check_upper_invariant(loop: While, f: Expectation, inv: Expectation,
                          domain: Sequence[Store], fuel: int = 50) -> InvariantVerdict:
    """Check ``[β∧b]·et(body)(I) ⊕ [β∧¬b]·f ⊑ I`` at every store of ``domain``.

    ``inv`` certifies ``ect[loop](f) ⊑ inv`` on the checked stores once
    verified. Loops nested in the body are evaluated with ``fuel`` iterates.
    """
    if not isinstance(loop, While):
        raise TypeError("check_upper_invariant expects a while loop")
    lhs = _loop_step(True, loop, f, inv, fuel)
    n = 0
    for s in domain:
        n += 1
        lv, rv = lhs(s), inv(s)
        if lv > rv:
            return InvariantVerdict(False, s, lv, rv, n)
    return InvariantVerdict(True, checked=n)


class BudgetExceeded(RuntimeError):
    pass


def derivations(m: Multidistribution, steps: int, budget: int = 10_000):
    """All distinct ``(w, ν)`` with ``m ↠ ν`` at cost ``w`` in at most ``steps``
    lifted steps, each step choosing per entry to stay or to take any rule.

    Raises `BudgetExceeded` when more than ``budget`` pairs would be produced.
    """
    seen = {(Fraction(0), m)}
    frontier = [(Fraction(0), m)]
    for _ in range(steps):
        nxt = []
        for w, mu in frontier:
            options = []
            for p, a in mu.entries:
                opts = [None] + successors(a)
                options.append(opts)
            for combo in itertools.product(*options):
                if all(o is None for o in combo):
                    continue
                weight = w
                parts = []
                for (p, a), o in zip(mu.entries, combo):
                    if o is None:
                        parts.append((p, Multidistribution.dirac(a)))
                    else:
                        weight += p * o.weight
                        parts.append((p, o.result))
                pair = (weight, convex_union(parts))
                if pair not in seen:
                    seen.add(pair)
                    if len(seen) > budget:
                        raise BudgetExceeded(f"more than {budget} derivations")
                    nxt.append(pair)
        if not nxt:
            break
        frontier = nxt
    return seen


def decrease_margin(m: Multidistribution, steps: int, flag: bool, f: Expectation,
                    fuel: int = 50, budget: int = 10_000) -> ExtRat:
    """``min`` over derivations ``m ↠ ν`` at cost ``w`` of
    ``E_m(e(f)) - [flag]·w - E_ν(e(f))``; negative means a violation.

    Loops go through fuel-bounded ``et``, which under-approximates the left
    side, so for loops whose fixed point is only reached in the limit the
    margin is a small negative tail that vanishes as ``fuel`` grows.
    """
    e = lift_config_expect(flag, f, fuel)
    start = expectation(m, e)
    margin: ExtRat = INF
    for w, nu in derivations(m, steps, budget):
        rhs = (w if flag else Fraction(0)) + expectation(nu, e)
        if start == INF:
            continue
        gap = -INF if rhs == INF else start - rhs
        margin = min(margin, gap)
    return margin


def check_decrease(m: Multidistribution, steps: int, flag: bool, f: Expectation,
                   fuel: int = 50, budget: int = 10_000) -> bool:
    """Exact check that ``E_m(e(f)) ≥ [flag]·w + E_ν(e(f))`` for every
    derivation ``m ↠ ν`` at cost ``w`` within ``steps`` lifted steps."""
    return decrease_margin(m, steps, flag, f, fuel, budget) >= 0
