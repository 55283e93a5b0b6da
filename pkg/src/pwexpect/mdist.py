"""Multidistributions and the small-step semantics of pWhile as a weighted
probabilistic reduction system, with demonic value-iteration oracles.

`expected_cost_vi` and `expected_value_vi` return exact lower bounds on the
expected cost and expected value functions: the supremum over all lifted
reductions is approached from below by bounding the number of reductions.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from typing import (Callable, Dict, Iterable, List, Literal, Sequence, Tuple,
                    Union)

from .lang import Store, eval_bexp, eval_dexp
from .numeric import ExtRat, emul
from .syntax import dataclass
from .syntax import (Assign, Command, Halt, If, NdChoice, ProbChoice, Seq,
                     Skip, Tick, While)


# ----------------------------------------------------------------------------
# Configurations

@dataclass(frozen=True)
class Active:
    command: Command
    store: Store


@dataclass(frozen=True)
class Terminal:
    store: Store


class _Aborted:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Aborted"

    def __reduce__(self):
        return (_Aborted, ())


Aborted = _Aborted()

Configuration = Union[Active, Terminal, _Aborted]


def is_terminal(conf: Configuration) -> bool:
    return isinstance(conf, Terminal)


# ----------------------------------------------------------------------------
# Multidistributions

class MassError(ValueError):
    """Total probability mass would exceed 1."""


class Multidistribution:
    """Finite multiset of ``p : a`` entries with ``0 < p <= 1`` and mass ``<= 1``.

    Entries are kept in insertion order; equality and hashing ignore order.
    """

    __slots__ = ("entries", "_key")

    def __init__(self, entries: Iterable[Tuple[Fraction, object]] = ()):
        entries = tuple((Fraction(p), a) for p, a in entries)
        total = Fraction(0)
        for p, _ in entries:
            if not 0 < p <= 1:
                raise ValueError(f"entry probability {p} outside (0, 1]")
            total += p
        if total > 1:
            raise MassError(f"multidistribution mass {total} exceeds 1")
        self.entries = entries
        self._key = None

    @classmethod
    def dirac(cls, a) -> "Multidistribution":
        return cls(((Fraction(1), a),))

    @property
    def mass(self) -> Fraction:
        return sum((p for p, _ in self.entries), Fraction(0))

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def _counter(self):
        if self._key is None:
            self._key = frozenset(Counter(self.entries).items())
        return self._key

    def __eq__(self, other):
        return isinstance(other, Multidistribution) and self._counter() == other._counter()

    def __hash__(self):
        return hash(self._counter())

    def __repr__(self):
        inner = ", ".join(f"{p}: {a!r}" for p, a in self.entries)
        return "{" + inner + "}"

    def fmap(self, fn: Callable) -> "Multidistribution":
        return Multidistribution((p, fn(a)) for p, a in self.entries)


EMPTY = Multidistribution()


def convex_union(parts: Sequence[Tuple[Fraction, Multidistribution]]) -> Multidistribution:
    """``⊎ pᵢ·μᵢ``; raises `MassError` if the resulting mass exceeds 1."""
    entries = []
    for p, m in parts:
        p = Fraction(p)
        if p <= 0:
            raise ValueError(f"convex weight {p} must be positive")
        if p > 1:
            raise MassError(f"convex weight {p} exceeds 1")
        entries.extend((p * q, a) for q, a in m.entries)
    return Multidistribution(entries)


def expectation(m: Multidistribution, f: Callable[[object], ExtRat]) -> ExtRat:
    total: ExtRat = Fraction(0)
    for p, a in m.entries:
        total += emul(p, f(a))
    return total


def restrict(m: Multidistribution, keep: Callable[[object], bool]) -> Multidistribution:
    return Multidistribution((p, a) for p, a in m.entries if keep(a))


# ----------------------------------------------------------------------------
# One-step reduction

@dataclass(frozen=True)
class WeightedOutcome:
    weight: Fraction
    result: Multidistribution


def _dirac(conf, weight=Fraction(0)) -> WeightedOutcome:
    return WeightedOutcome(Fraction(weight), Multidistribution.dirac(conf))


def _rules(conf: Configuration) -> List[Tuple[WeightedOutcome, bool]]:
    """Applicable rules as ``(outcome, unfolds)`` where ``unfolds`` marks a
    loop-unfolding step (the head redex is a while loop entering its body)."""
    if not isinstance(conf, Active):
        return []
    c, s = conf.command, conf.store
    if isinstance(c, Skip):
        return [(_dirac(Terminal(s)), False)]
    if isinstance(c, Tick):
        return [(_dirac(Terminal(s), c.cost), False)]
    if isinstance(c, Halt):
        return [(_dirac(Aborted), False)]
    if isinstance(c, Assign):
        dist = eval_dexp(c.dist, s)
        m = Multidistribution((p, Terminal(s.set(c.var, v))) for v, p in dist.items() if p > 0)
        return [(WeightedOutcome(Fraction(0), m), False)]
    if isinstance(c, If):
        if not eval_bexp(c.assertion, s):
            return [(_dirac(Aborted), False)]
        branch = c.then if eval_bexp(c.guard, s) else c.orelse
        return [(_dirac(Active(branch, s)), False)]
    if isinstance(c, While):
        if not eval_bexp(c.assertion, s):
            return [(_dirac(Aborted), False)]
        if eval_bexp(c.guard, s):
            return [(_dirac(Active(Seq(c.body, c), s)), True)]
        return [(_dirac(Terminal(s)), False)]
    if isinstance(c, NdChoice):
        return [(_dirac(Active(c.left, s)), False), (_dirac(Active(c.right, s)), False)]
    if isinstance(c, ProbChoice):
        if c.prob == 1:
            return [(_dirac(Active(c.left, s)), False)]
        if c.prob == 0:
            return [(_dirac(Active(c.right, s)), False)]
        m = Multidistribution(((c.prob, Active(c.left, s)), (1 - c.prob, Active(c.right, s))))
        return [(WeightedOutcome(Fraction(0), m), False)]
    if isinstance(c, Seq):
        cont = c.second

        def step_fn(a):
            if isinstance(a, Active):
                return Active(Seq(a.command, cont), a.store)
            if isinstance(a, Terminal):
                return Active(cont, a.store)
            return a

        return [(WeightedOutcome(o.weight, o.result.fmap(step_fn)), u)
                for o, u in _rules(Active(c.first, s))]
    raise TypeError(c)


def successors(conf: Configuration) -> List[WeightedOutcome]:
    """All ``(w, μ)`` with ``conf → μ`` at cost ``w`` by one rule application.

    Terminal and aborted configurations have none; a nondeterministic choice
    yields one outcome per branch.
    """
    return [o for o, _ in _rules(conf)]


STAY = None


def step_mdist(m: Multidistribution, choice: Sequence) -> WeightedOutcome:
    """One lifted step: entry ``i`` either stays (``choice[i] is STAY``) or is
    replaced by the outcome ``choice[i]`` (an index into its successors, or a
    `WeightedOutcome`). The weight is ``Σ pᵢ·wᵢ``."""
    if len(choice) != len(m.entries):
        raise ValueError("one selector per entry required")
    parts = []
    weight = Fraction(0)
    for (p, a), sel in zip(m.entries, choice):
        if sel is STAY:
            parts.append((p, Multidistribution.dirac(a)))
            continue
        outcome = sel if isinstance(sel, WeightedOutcome) else successors(a)[sel]
        weight += p * outcome.weight
        parts.append((p, outcome.result))
    return WeightedOutcome(weight, convex_union(parts))


# ----------------------------------------------------------------------------
# Value iteration

DepthMeasure = Literal["unfoldings", "steps"]


def _value_iteration(starts: Iterable[Configuration], depth: int, measure: DepthMeasure,
                     count_cost: bool, final: Callable[[Store], ExtRat]) -> Dict[Configuration, ExtRat]:
    """Demonic bounded value iteration from every start configuration.

    Budget ``r`` bounds the number of reductions that consume it: every step
    for ``measure="steps"``, loop unfoldings only for ``measure="unfoldings"``.
    Values are computed layer by layer (layer ``k`` = configurations reached
    after consuming ``k`` units), so recursion depth stays bounded by the
    size of loop-free fragments.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    by_steps = measure == "steps"
    if measure not in ("steps", "unfoldings"):
        raise ValueError(f"unknown depth measure {measure!r}")
    rules_cache: Dict[Configuration, list] = {}

    def rules(conf):
        r = rules_cache.get(conf)
        if r is None:
            r = rules_cache[conf] = _rules(conf)
        return r

    def consumes(unfolds: bool) -> bool:
        return by_steps or unfolds

    # forward: layer k holds configurations reached after consuming k units
    layers: List[set] = [set(starts)]
    for k in range(depth):
        nxt: set = set()
        seen: set = set()
        stack = list(layers[k])
        while stack:
            conf = stack.pop()
            if conf in seen:
                continue
            seen.add(conf)
            for outcome, unfolds in rules(conf):
                for _, a in outcome.result.entries:
                    if not isinstance(a, Active):
                        continue
                    if consumes(unfolds):
                        nxt.add(a)
                    else:
                        stack.append(a)
        layers.append(nxt)

    # backward: values with remaining budget r = depth - k
    below: Dict[Configuration, ExtRat] = {}
    for k in range(depth, -1, -1):
        r = depth - k
        memo: Dict[Configuration, ExtRat] = {}

        def value(conf) -> ExtRat:
            if isinstance(conf, Terminal):
                return final(conf.store)
            if not isinstance(conf, Active):
                return Fraction(0)
            v = memo.get(conf)
            if v is not None:
                return v
            best: ExtRat = Fraction(0)
            for outcome, unfolds in rules(conf):
                if consumes(unfolds):
                    if r == 0:
                        continue
                    child = below_value
                else:
                    child = value
                total: ExtRat = outcome.weight if count_cost else Fraction(0)
                for p, a in outcome.result.entries:
                    total += emul(p, child(a))
                if total > best:
                    best = total
            memo[conf] = best
            return best

        def below_value(conf, _below=below) -> ExtRat:
            if isinstance(conf, Terminal):
                return final(conf.store)
            if not isinstance(conf, Active):
                return Fraction(0)
            return _below[conf]

        current = {}
        for conf in layers[k]:
            current[conf] = value(conf)
        below = current
    return below


def _zero(_s) -> Fraction:
    return Fraction(0)


def expected_cost_vi(c: Command, s: Store, depth: int,
                     measure: DepthMeasure = "unfoldings") -> Fraction:
    """Demonic lower bound on the expected cost of running ``c`` from ``s``.

    By default ``depth`` bounds the number of loop unfoldings along every
    reduction; ``measure="steps"`` bounds single reduction steps instead.
    Monotone in ``depth`` and converging to the expected cost from below.
    """
    start = Active(c, s)
    return _value_iteration([start], depth, measure, True, _zero)[start]


def expected_cost_vi_many(c: Command, stores: Iterable[Store], depth: int,
                          measure: DepthMeasure = "unfoldings") -> Dict[Store, Fraction]:
    """`expected_cost_vi` for several initial stores, sharing the work."""
    stores = list(stores)
    values = _value_iteration([Active(c, s) for s in stores], depth, measure, True, _zero)
    return {s: values[Active(c, s)] for s in stores}


def expected_value_vi(c: Command, s: Store, f: Callable[[Store], ExtRat], depth: int,
                      measure: DepthMeasure = "unfoldings") -> ExtRat:
    """Demonic lower bound on the expected value of ``f`` on terminal stores;
    aborted runs contribute 0."""
    start = Active(c, s)
    return _value_iteration([start], depth, measure, False, f)[start]


def ascending(values: Sequence[ExtRat]) -> bool:
    return all(a <= b for a, b in zip(values, values[1:]))
