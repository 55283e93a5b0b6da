"""Extended nonnegative rationals and the shared invariant-check verdict.

Values are ``Fraction`` instances or ``INF``. Addition and `max` absorb
``INF`` natively; multiplication goes through `emul`, which fixes
``0 * INF = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

INF = math.inf

ExtRat = Union[Fraction, float]


def emul(a: ExtRat, b: ExtRat) -> ExtRat:
    if a == 0 or b == 0:
        return Fraction(0)
    return a * b


def to_json(v: ExtRat) -> str:
    if v == INF:
        return "inf"
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


def from_json(s: str) -> ExtRat:
    return INF if s == "inf" else Fraction(s)


@dataclass(frozen=True)
class InvariantVerdict:
    """Outcome of a pointwise inequality check over a finite store domain.

    ``verified`` is true when no store of the domain violated ``lhs <= rhs``;
    otherwise ``store``, ``lhs`` and ``rhs`` describe the first violation.
    """

    verified: bool
    store: Optional[object] = None
    lhs: Optional[ExtRat] = None
    rhs: Optional[ExtRat] = None
    checked: int = 0

    def __bool__(self):
        return self.verified

    @property
    def status(self) -> str:
        return "Verified-on-domain" if self.verified else "Counterexample"
