"""Stores and evaluators for expressions, assertions and distributions."""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, Iterable, Iterator, Mapping, Tuple

from .syntax import (Add, And, BExp, BTrue, Const, DExp, Exp, Geq, Mul, Not,
                     Or, Var)


class Store:
    """Immutable map from variable names to integers.

    Unbound variables read as 0. Zero bindings are not stored, so two stores
    are equal exactly when they agree on every variable.
    """

    __slots__ = ("_items", "_map", "_hash")

    def __init__(self, bindings: Mapping[str, int] | Iterable[Tuple[str, int]] = ()):
        if isinstance(bindings, Mapping):
            bindings = bindings.items()
        self._items = tuple(sorted((k, int(v)) for k, v in bindings if v != 0))
        self._map = dict(self._items)
        self._hash = hash(self._items)

    def __getitem__(self, name: str) -> int:
        return self._map.get(name, 0)

    def set(self, name: str, value: int) -> "Store":
        d = dict(self._map)
        d[name] = value
        return Store(d)

    def as_dict(self, variables: Iterable[str] = ()) -> Dict[str, int]:
        d = {v: 0 for v in variables}
        d.update(self._items)
        return d

    def __eq__(self, other):
        return isinstance(other, Store) and self._items == other._items

    def __lt__(self, other: "Store"):
        return self._items < other._items

    def __hash__(self):
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{k}={v}" for k, v in self._items)
        return f"Store({inner})"


def grid(ranges: Mapping[str, Iterable[int]]) -> list[Store]:
    """All stores over the given per-variable value ranges, in lexicographic
    order (variables sorted by name, first variable most significant)."""
    names = sorted(ranges)
    values = [sorted(set(ranges[n])) for n in names]
    return [Store(zip(names, combo)) for combo in itertools.product(*values)]


def eval_exp(e: Exp, s: Store) -> int:
    if isinstance(e, Var):
        return s[e.name]
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Add):
        return eval_exp(e.left, s) + eval_exp(e.right, s)
    if isinstance(e, Mul):
        return eval_exp(e.left, s) * eval_exp(e.right, s)
    raise TypeError(f"not an expression: {e!r}")


def eval_bexp(b: BExp, s: Store) -> bool:
    if isinstance(b, BTrue):
        return True
    if isinstance(b, Geq):
        return eval_exp(b.left, s) >= eval_exp(b.right, s)
    if isinstance(b, Not):
        return not eval_bexp(b.arg, s)
    if isinstance(b, And):
        return eval_bexp(b.left, s) and eval_bexp(b.right, s)
    if isinstance(b, Or):
        return eval_bexp(b.left, s) or eval_bexp(b.right, s)
    raise TypeError(f"not a boolean expression: {b!r}")


def eval_dexp(d: DExp, s: Store) -> Dict[int, Fraction]:
    """Distribution over integers denoted by ``d`` under ``s``; outcomes that
    coincide have their probabilities merged."""
    out: Dict[int, Fraction] = {}
    for p, e in d.choices:
        v = eval_exp(e, s)
        out[v] = out.get(v, Fraction(0)) + p
    return out


# ----------------------------------------------------------------------------
# Variables and substitution

def exp_vars(e: Exp) -> Iterator[str]:
    if isinstance(e, Var):
        yield e.name
    elif isinstance(e, (Add, Mul)):
        yield from exp_vars(e.left)
        yield from exp_vars(e.right)


def bexp_vars(b: BExp) -> Iterator[str]:
    if isinstance(b, Geq):
        yield from exp_vars(b.left)
        yield from exp_vars(b.right)
    elif isinstance(b, Not):
        yield from bexp_vars(b.arg)
    elif isinstance(b, (And, Or)):
        yield from bexp_vars(b.left)
        yield from bexp_vars(b.right)


def subst_exp(e: Exp, x: str, a: Exp) -> Exp:
    if isinstance(e, Var):
        return a if e.name == x else e
    if isinstance(e, Const):
        return e
    return type(e)(subst_exp(e.left, x, a), subst_exp(e.right, x, a))


def subst_bexp(b: BExp, x: str, a: Exp) -> BExp:
    if isinstance(b, BTrue):
        return b
    if isinstance(b, Geq):
        return Geq(subst_exp(b.left, x, a), subst_exp(b.right, x, a))
    if isinstance(b, Not):
        return Not(subst_bexp(b.arg, x, a))
    return type(b)(subst_bexp(b.left, x, a), subst_bexp(b.right, x, a))
