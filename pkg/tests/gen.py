"""Random generators shared by the test modules.

Hypothesis strategies cover the syntax (they shrink well); the seeded
``random.Random`` generators feed the larger semantic sweeps, where a fixed
corpus of a few hundred programs is easier to reason about.
"""

from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

from hypothesis import strategies as st

from pwexpect.lang import Store
from pwexpect.syntax import (TRUE, Add, And, Assign, BTrue, Ceil, CMax, Const,
                             CSum, DExp, Geq, Guard, Halt, If, LoopAnnotation,
                             Mul, NdChoice, Not, One, Or, NormMul, ProbChoice,
                             Scaled, Seq, Skip, Tick, Var, While)

VARS = ("x", "y")
CORPUS = Path(__file__).resolve().parent.parent / "corpus"


# ----------------------------------------------------------------------------
# hypothesis strategies

rationals = st.builds(Fraction, st.integers(0, 12), st.integers(1, 6))
probabilities = st.builds(Fraction, st.integers(0, 6), st.just(6))

exps = st.recursive(
    st.one_of(st.sampled_from(VARS).map(Var), st.integers(-5, 5).map(Const)),
    lambda sub: st.one_of(st.builds(Add, sub, sub), st.builds(Mul, sub, sub)),
    max_leaves=6,
)

bexps = st.recursive(
    st.one_of(st.just(TRUE), st.builds(Geq, exps, exps)),
    lambda sub: st.one_of(st.builds(Not, sub), st.builds(And, sub, sub), st.builds(Or, sub, sub)),
    max_leaves=4,
)

# canonical norms: `1` alone or a product of ⌈a⌉ atoms (the concrete syntax
# folds unit factors of a product away)
norms = st.one_of(
    st.just(One()),
    st.recursive(st.builds(Ceil, exps), lambda sub: st.builds(NormMul, sub, sub), max_leaves=3),
)

cexps = st.recursive(
    st.builds(Scaled, rationals, norms),
    lambda sub: st.one_of(st.builds(CSum, sub, sub), st.builds(CMax, sub, sub),
                          st.builds(Guard, bexps, sub)),
    max_leaves=5,
)


@st.composite
def dexps(draw):
    n = draw(st.integers(1, 3))
    if n == 1:
        return DExp.point(draw(exps))
    cuts = sorted(draw(st.lists(st.integers(1, 11), min_size=n - 1, max_size=n - 1, unique=True)))
    bounds = [0] + cuts + [12]
    return DExp(tuple((Fraction(b - a, 12), draw(exps)) for a, b in zip(bounds, bounds[1:])))


annotations = st.builds(
    LoopAnnotation, cexps,
    st.lists(st.tuples(cexps, cexps), max_size=2).map(tuple),
    st.one_of(st.none(), cexps),
)

commands = st.recursive(
    st.one_of(st.just(Skip()), st.just(Halt()), st.builds(Tick, rationals),
              st.builds(Assign, st.sampled_from(VARS), dexps())),
    lambda sub: st.one_of(
        st.builds(If, bexps, bexps, sub, sub),
        st.builds(While, bexps, bexps, sub, st.one_of(st.none(), annotations)),
        st.builds(NdChoice, sub, sub),
        st.builds(ProbChoice, probabilities, sub, sub),
        st.builds(Seq, sub, sub),
    ),
    max_leaves=6,
)

stores = st.builds(lambda x, y: Store({"x": x, "y": y}), st.integers(-6, 6), st.integers(-6, 6))


# ----------------------------------------------------------------------------
# seeded generators

def rand_exp(rng: random.Random, depth: int = 2):
    if depth == 0 or rng.random() < 0.4:
        return Var(rng.choice(VARS)) if rng.random() < 0.6 else Const(rng.randint(-3, 3))
    a = rand_exp(rng, depth - 1)
    if rng.random() < 0.75:
        return Add(a, Const(rng.randint(-2, 2)) if rng.random() < 0.6 else rand_exp(rng, depth - 1))
    return Mul(a, rand_exp(rng, 0))


def rand_bexp(rng: random.Random, depth: int = 1):
    r = rng.random()
    if depth == 0 or r < 0.6:
        return Geq(rand_exp(rng, 1), rand_exp(rng, 1)) if rng.random() < 0.9 else BTrue()
    if r < 0.75:
        return Not(rand_bexp(rng, depth - 1))
    op = And if rng.random() < 0.5 else Or
    return op(rand_bexp(rng, depth - 1), rand_bexp(rng, depth - 1))


def rand_norm(rng: random.Random):
    r = rng.random()
    if r < 0.25:
        return One()
    if r < 0.85:
        return Ceil(rand_exp(rng, 1))
    return NormMul(Ceil(rand_exp(rng, 1)), Ceil(rand_exp(rng, 0)))


def rand_cexp(rng: random.Random, depth: int = 2):
    r = rng.random()
    if depth == 0 or r < 0.35:
        return Scaled(Fraction(rng.randint(0, 6), rng.randint(1, 3)), rand_norm(rng))
    if r < 0.65:
        return CSum(rand_cexp(rng, depth - 1), rand_cexp(rng, depth - 1))
    if r < 0.8:
        return CMax(rand_cexp(rng, depth - 1), rand_cexp(rng, depth - 1))
    return Guard(rand_bexp(rng), rand_cexp(rng, depth - 1))


def rand_prob(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(1, 5), 6)


def rand_dexp(rng: random.Random) -> DExp:
    if rng.random() < 0.5:
        return DExp.point(rand_exp(rng, 1))
    p = rand_prob(rng)
    return DExp(((p, rand_exp(rng, 1)), (1 - p, rand_exp(rng, 1))))


def rand_loop_free(rng: random.Random, depth: int = 3, nondet: bool = True,
                   prob: bool = True, control: bool = True):
    """Random loop-free command; ``control=False`` restricts to
    assignments, ticks and sequencing."""
    r = rng.random()
    if depth == 0 or r < 0.3:
        leaf = rng.random()
        if leaf < 0.4:
            return Tick(Fraction(rng.randint(0, 4), rng.randint(1, 2)))
        if leaf < 0.85 or not control:
            dist = rand_dexp(rng) if prob else DExp.point(rand_exp(rng, 1))
            return Assign(rng.choice(VARS), dist)
        return Halt() if rng.random() < 0.5 else Skip()
    sub = lambda: rand_loop_free(rng, depth - 1, nondet, prob, control)
    if not control:
        return Seq(sub(), sub())
    kinds = ["seq", "seq", "if"] + (["nd"] if nondet else []) + (["pr"] if prob else [])
    kind = rng.choice(kinds)
    if kind == "seq":
        return Seq(sub(), sub())
    if kind == "if":
        assertion = rand_bexp(rng, 0) if rng.random() < 0.25 else TRUE
        return If(assertion, rand_bexp(rng), sub(), sub())
    if kind == "nd":
        return NdChoice(sub(), sub())
    return ProbChoice(rand_prob(rng), sub(), sub())


def rand_store(rng: random.Random, lo: int = -6, hi: int = 6) -> Store:
    return Store({v: rng.randint(lo, hi) for v in VARS})


# ----------------------------------------------------------------------------
# corpus

def corpus_entries(sub: str = ""):
    """``(path, domain, depth)`` for every ``.pwhile`` file of the corpus,
    read from its ``# domain:`` and ``# depth:`` header lines."""
    out = []
    for path in sorted((CORPUS / sub).glob("*.pwhile")):
        domain, depth = "", 10
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.startswith("# domain:"):
                domain = line.split(":", 1)[1].strip()
            elif line.startswith("# depth:"):
                depth = int(line.split(":", 1)[1])
        out.append((path, domain, depth))
    return out
