"""Abstract syntax of pWhile programs and of cost expressions.

All nodes are frozen dataclasses, so ASTs are hashable and can be used as
dictionary keys (configurations of the operational semantics embed commands).
"""

from __future__ import annotations

import dataclasses
from dataclasses import field
from fractions import Fraction
from typing import Optional, Tuple, Union


def dataclass(cls=None, *, frozen=True):
    """Frozen dataclass whose hash is computed once per instance.

    ASTs are hashed over and over as parts of configurations; caching keeps
    that linear in the number of fresh nodes.
    """

    def wrap(cls):
        cls = dataclasses.dataclass(frozen=frozen)(cls)
        field_hash = cls.__hash__

        def __hash__(self):
            try:
                return self.__dict__["_hash"]
            except KeyError:
                h = field_hash(self)
                object.__setattr__(self, "_hash", h)
                return h

        cls.__hash__ = __hash__
        return cls

    return wrap if cls is None else wrap(cls)


# ----------------------------------------------------------------------------
# Integer expressions

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Add:
    left: "Exp"
    right: "Exp"


@dataclass(frozen=True)
class Mul:
    left: "Exp"
    right: "Exp"


Exp = Union[Var, Const, Add, Mul]


# ----------------------------------------------------------------------------
# Boolean expressions

@dataclass(frozen=True)
class BTrue:
    pass


@dataclass(frozen=True)
class Geq:
    left: Exp
    right: Exp


@dataclass(frozen=True)
class Not:
    arg: "BExp"


@dataclass(frozen=True)
class And:
    left: "BExp"
    right: "BExp"


@dataclass(frozen=True)
class Or:
    left: "BExp"
    right: "BExp"


BExp = Union[BTrue, Geq, Not, And, Or]

TRUE = BTrue()
FALSE = Not(TRUE)


def conj(a: BExp, b: BExp) -> BExp:
    """Conjunction that drops trivial ``true`` operands."""
    if isinstance(a, BTrue):
        return b
    if isinstance(b, BTrue):
        return a
    return And(a, b)


def neg(b: BExp) -> BExp:
    if isinstance(b, Not):
        return b.arg
    return Not(b)


# ----------------------------------------------------------------------------
# Distribution expressions

@dataclass(frozen=True)
class DExp:
    """Finite distribution ``{p1: e1, ..., pn: en}`` with exact probabilities."""

    choices: Tuple[Tuple[Fraction, Exp], ...]

    def __post_init__(self):
        if not self.choices:
            raise ValueError("distribution expression must be nonempty")
        total = Fraction(0)
        for p, _ in self.choices:
            if not 0 < p <= 1:
                raise ValueError(f"probability {p} outside (0, 1]")
            total += p
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, expected 1")

    @classmethod
    def point(cls, e: Exp) -> "DExp":
        return cls(((Fraction(1), e),))

    @property
    def is_point(self) -> bool:
        return len(self.choices) == 1


# ----------------------------------------------------------------------------
# Cost expressions

@dataclass(frozen=True)
class One:
    pass


@dataclass(frozen=True)
class Ceil:
    """The norm ``⌈a⌉``, evaluating to ``max(a, 0)``."""

    exp: Exp


@dataclass(frozen=True)
class NormMul:
    left: "Norm"
    right: "Norm"


@dataclass(frozen=True)
class Hole:
    """Placeholder in a hole context; only valid inside a `HoleContext`."""

    index: int


Norm = Union[One, Ceil, NormMul, Hole]


@dataclass(frozen=True)
class Scaled:
    coeff: Fraction
    norm: Norm

    def __post_init__(self):
        if self.coeff < 0:
            raise ValueError(f"negative coefficient {self.coeff}")


@dataclass(frozen=True)
class CSum:
    left: "CostExpr"
    right: "CostExpr"


@dataclass(frozen=True)
class CMax:
    left: "CostExpr"
    right: "CostExpr"


@dataclass(frozen=True)
class Guard:
    cond: BExp
    body: "CostExpr"


CostExpr = Union[Scaled, CSum, CMax, Guard]

ONE = One()


def const(q) -> Scaled:
    return Scaled(Fraction(q), ONE)


ZERO = const(0)


# ----------------------------------------------------------------------------
# Commands

@dataclass(frozen=True)
class LoopAnnotation:
    """Candidate upper invariant attached to a while loop.

    ``bounds`` optionally overrides the automatically derived bounds
    ``g -> h`` on the expected value of the invariant's hole terms.
    ``value`` is the invariant used when the loop is analysed for expected
    values instead of expected cost; it defaults to ``invariant``.
    """

    invariant: CostExpr
    bounds: Tuple[Tuple[CostExpr, CostExpr], ...] = ()
    value: Optional[CostExpr] = None


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Tick:
    cost: Fraction

    def __post_init__(self):
        if self.cost < 0:
            raise ValueError(f"negative tick cost {self.cost}")


@dataclass(frozen=True)
class Halt:
    pass


@dataclass(frozen=True)
class Assign:
    var: str
    dist: DExp


@dataclass(frozen=True)
class If:
    assertion: BExp
    guard: BExp
    then: "Command"
    orelse: "Command"


@dataclass(frozen=True)
class While:
    assertion: BExp
    guard: BExp
    body: "Command"
    annotation: Optional[LoopAnnotation] = field(default=None)


@dataclass(frozen=True)
class NdChoice:
    left: "Command"
    right: "Command"


@dataclass(frozen=True)
class ProbChoice:
    prob: Fraction
    left: "Command"
    right: "Command"

    def __post_init__(self):
        if not 0 <= self.prob <= 1:
            raise ValueError(f"probability {self.prob} outside [0, 1]")


@dataclass(frozen=True)
class Seq:
    first: "Command"
    second: "Command"


Command = Union[Skip, Tick, Halt, Assign, If, While, NdChoice, ProbChoice, Seq]


def seq(*cmds: Command) -> Command:
    """Right-nested sequential composition of one or more commands."""
    if not cmds:
        return Skip()
    result = cmds[-1]
    for c in reversed(cmds[:-1]):
        result = Seq(c, result)
    return result


def subcommands(c: Command):
    """Yield ``c`` and all of its subcommands, preorder."""
    yield c
    if isinstance(c, (If,)):
        yield from subcommands(c.then)
        yield from subcommands(c.orelse)
    elif isinstance(c, While):
        yield from subcommands(c.body)
    elif isinstance(c, (NdChoice, ProbChoice)):
        yield from subcommands(c.left)
        yield from subcommands(c.right)
    elif isinstance(c, Seq):
        yield from subcommands(c.first)
        yield from subcommands(c.second)


def has_loop(c: Command) -> bool:
    return any(isinstance(d, While) for d in subcommands(c))


def is_probabilistic(c: Command) -> bool:
    """True if ``c`` samples: a probabilistic choice or a non-point assignment."""
    for d in subcommands(c):
        if isinstance(d, ProbChoice) and 0 < d.prob < 1:
            return True
        if isinstance(d, Assign) and len(d.dist.choices) > 1:
            return True
    return False


def is_deterministic(c: Command) -> bool:
    """True if ``c`` contains no nondeterministic choice."""
    return not any(isinstance(d, NdChoice) for d in subcommands(c))
