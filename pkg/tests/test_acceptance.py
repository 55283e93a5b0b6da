"""Acceptance criteria, one test each. Every test reports its measured numbers;
the summary at the end of the run prints one PASS/FAIL line per criterion.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import random
import time
from fractions import Fraction

import pytest

from gen import (CORPUS, corpus_entries, rand_cexp, rand_loop_free,
                 rand_store)
from pwexpect.cli import (SIDE_FAILED, SOUND, AnalysisConfig, analyze,
                          compare, parse_domain, simulate)
from pwexpect.costexpr import (HoleContext, check_concave_context, discharge,
                               eval_cexp, et_sharp)
from pwexpect.lang import Store
from pwexpect.mdist import (STAY, Active, Aborted, Multidistribution,
                            Terminal, expected_cost_vi, expected_cost_vi_many,
                            expected_value_vi, step_mdist, successors)
from pwexpect.numeric import from_json
from pwexpect.parser import parse_bexp, parse_program
from pwexpect.syntax import (CMax, CSum, Guard, Hole, NormMul, Scaled, ZERO,
                             const, has_loop)
from pwexpect.transformer import Expectation, check_decrease, et

TOL = Fraction(1, 10 ** 6)


def cfg(mode, domain, **kw):
    return AnalysisConfig(mode=mode, domain=parse_domain(domain), **kw)


def walk_source(p, k=None):
    inv = f"[x > 0]·{k}·⌈x⌉" if k is not None else "[x > 0]·2·⌈x⌉"
    return (f"while (x > 0) inv({inv}) {{ tick(1); {{x := x + 1}} [{p}] {{x := x - 1}} }}")


def path_text(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def write(tmp_path, text):
    p = tmp_path / "prog.pwhile"
    p.write_text(text, encoding="utf-8")
    return str(p)


@pytest.mark.criterion(1, "geometric loop: bound [x>0]·2, oracle in [2-1e-6, 2] at depth 60, <5 s")
def test_criterion_1_geometric(detail):
    start = time.perf_counter()
    path = str(CORPUS / "geometric.pwhile")
    dom = "x=-10..10"
    a = analyze(path, cfg("analyze", dom))
    statuses = [sc["status"] for sc in a.side_conditions]
    values = {row["store"]["x"]: from_json(row["bound"]) for row in a.table}
    s = simulate(path, cfg("simulate", "x=1", depth=60))
    oracle = from_json(s.table[0]["oracle"])
    c = compare(path, cfg("compare", dom, depth=60))
    elapsed = time.perf_counter() - start
    by_steps = expected_cost_vi(parse_program(path_text(path)), Store({"x": 1}), 60, "steps")
    detail(f"bound {a.bound}, conditions {statuses}, oracle(x=1, 60 unfoldings) = 2 - {float(2 - oracle):.3g} "
           f"(60 single steps would give 2 - {float(2 - by_steps):.3g}), compare {c.verdict}, {elapsed:.2f} s")
    assert statuses == ["Verified-on-domain"] * 2
    assert all(v == (2 if x > 0 else 0) for x, v in values.items())
    assert 2 - TOL <= oracle <= 2
    assert c.verdict == SOUND
    assert elapsed < 5


def _truncated_chain(p, x0, depth):
    # V_n(x) = 1 + p V_{n-1}(x+1) + (1-p) V_{n-1}(x-1), V_n(0) = 0, V_0 = 0,
    # over positions 0 .. x0 + depth
    top = x0 + depth + 1
    v = [Fraction(0)] * (top + 1)
    for _ in range(depth):
        nxt = [Fraction(0)] * (top + 1)
        for x in range(1, top):
            nxt[x] = 1 + p * v[x + 1] + (1 - p) * v[x - 1]
        v = nxt
    return v[x0]


@pytest.mark.criterion(2, "biased walk p=1/4: bound [x>0]·2·⌈x⌉, oracle within 0.05 of 2x at depth 400, <30 s")
def test_criterion_2_biased_walk(tmp_path, detail):
    start = time.perf_counter()
    path = write(tmp_path, walk_source("1/4"))
    a = analyze(path, cfg("analyze", "x=-10..10"))
    oracle = expected_cost_vi_many(parse_program(walk_source("1/4")),
                                   [Store({"x": x}) for x in (1, 2, 3)], 400)
    elapsed = time.perf_counter() - start
    p = Fraction(1, 4)
    errs = {}
    for s, v in oracle.items():
        x = s["x"]
        closed = x / (1 - 2 * p)
        assert v == _truncated_chain(p, x, 400)
        errs[x] = closed - v
    shown = {x: f"{float(e):.2g}" for x, e in errs.items()}
    detail(f"bound {a.bound} ({a.verdict}), 2x - oracle = {shown}, {elapsed:.2f} s")
    assert a.bound == "[x > 0]·2·⌈x⌉" and a.verdict == SOUND
    assert all(0 <= e <= 0.05 for e in errs.values())
    assert elapsed < 30


@pytest.mark.criterion(3, "symmetric walk: k=1..16 all fail at x=1 (lhs 1+k, rhs k); oracle increasing over depths 100/200/400, <60 s")
def test_criterion_3_symmetric_walk(tmp_path, detail):
    start = time.perf_counter()
    bad = []
    for k in range(1, 17):
        path = write(tmp_path, walk_source("1/2", k))
        a = analyze(path, cfg("analyze", "x=-10..10"))
        cx = [sc["counterexample"] for sc in a.side_conditions if sc["counterexample"]]
        ok = (a.verdict == SIDE_FAILED and cx
              and cx[0] == {"store": {"x": 1}, "lhs": f"{k + 1}/1", "rhs": f"{k}/1"})
        if not ok:
            bad.append(k)
    prog = parse_program(walk_source("1/2", 1))
    vals = [expected_cost_vi(prog, Store({"x": 1}), d) for d in (100, 200, 400)]
    elapsed = time.perf_counter() - start
    detail(f"k failing as expected: {16 - len(bad)}/16, oracle(x=1) at 100/200/400 = "
           f"{[round(float(v), 3) for v in vals]}, {elapsed:.2f} s")
    assert not bad
    assert vals[0] < vals[1] < vals[2]
    assert elapsed < 60


@pytest.mark.criterion(4, "demonic choice {tick(1)} <> {tick(3)}: bound 3, oracle exactly 3 at depth >= 2")
def test_criterion_4_nondeterminism(tmp_path, detail):
    path = write(tmp_path, "{tick(1)} <> {tick(3)}")
    a = analyze(path, cfg("analyze", "x=0"))
    prog = parse_program("{tick(1)} <> {tick(3)}")
    vals = {(m, d): expected_cost_vi(prog, Store(), d, m) for m in ("steps", "unfoldings") for d in (2, 3, 5)}
    detail(f"bound {a.bound}, oracle values {sorted(str(v) for v in set(vals.values()))}")
    assert a.bound == "3" and a.verdict == SOUND
    assert set(vals.values()) == {3}


@pytest.mark.criterion(5, "soundness sweep over the corpus: oracle <= verified bound at every grid store, exact")
def test_criterion_5_soundness_sweep(detail):
    entries = corpus_entries()
    violations, stores, unverified = [], 0, []
    for path, dom, depth in entries:
        prog = parse_program(path.read_text(encoding="utf-8"))
        grid = cfg("analyze", dom).stores()
        bound, conds = et_sharp(True, prog, ZERO)
        if not all(v.verified for _, v in discharge(conds, grid)):
            unverified.append(path.name)
            continue
        oracle = expected_cost_vi_many(prog, grid, depth)
        for s in grid:
            stores += 1
            if oracle[s] > eval_cexp(bound, s):
                violations.append((path.name, s))
    names = {p.name for p, _, _ in entries}
    fails = {"assert_if.pwhile", "assert_while.pwhile", "halt_midway.pwhile"} <= names
    detail(f"{len(entries)} programs, {stores} stores, {len(violations)} violations, "
           f"unverified {unverified}, abort cases present: {fails}")
    assert len(entries) >= 10 and fails
    assert not unverified and not violations


def _size(c):
    from pwexpect.syntax import subcommands
    return 2 * sum(1 for _ in subcommands(c)) + 2


@pytest.mark.criterion(6, "decrease property on loop-free corpus programs, random f, budget 1e4, exact")
def test_criterion_6_decrease(detail):
    rng = random.Random(6)
    runs, failures = 0, []
    for path, dom, _ in corpus_entries():
        prog = parse_program(path.read_text(encoding="utf-8"))
        if has_loop(prog):
            continue
        for s in cfg("analyze", dom).stores():
            for _ in range(3):
                f = Expectation.of_cexp(rand_cexp(rng, 2))
                for flag in (True, False):
                    runs += 1
                    m = Multidistribution.dirac(Active(prog, s))
                    if not check_decrease(m, _size(prog), flag, f, budget=10_000):
                        failures.append((path.name, s, flag))
    detail(f"{runs} checks, {len(failures)} violations")
    assert runs > 0 and not failures


def _random_corpus(seed, n):
    rng = random.Random(seed)
    return rng, [(rand_loop_free(rng, depth=3), rand_cexp(rng, 2)) for _ in range(n)]


@pytest.mark.criterion(7, "calculus soundness: et <= et♯ on 100 programs x 100 stores, both flags; equality for assign/tick/seq")
def test_criterion_7_calculus_soundness(detail):
    rng, progs = _random_corpus(7, 100)
    violations = checks = 0
    for c, f in progs:
        for flag in (True, False):
            bound, _ = et_sharp(flag, c, f)
            t = et(flag, c, Expectation.of_cexp(f), 0)
            for _ in range(100):
                s = rand_store(rng)
                checks += 1
                violations += t(s) > eval_cexp(bound, s)
    unequal = eq_checks = 0
    for _ in range(100):
        c = rand_loop_free(rng, depth=3, nondet=False, control=False)
        f = rand_cexp(rng, 2)
        for flag in (True, False):
            bound, _ = et_sharp(flag, c, f)
            t = et(flag, c, Expectation.of_cexp(f), 0)
            for _ in range(100):
                s = rand_store(rng)
                eq_checks += 1
                unequal += t(s) != eval_cexp(bound, s)
    detail(f"{checks} inequality checks, {violations} violations; "
           f"{eq_checks} equality checks, {unequal} mismatches")
    assert violations == 0 and unequal == 0


@pytest.mark.criterion(8, "ect(f) <= ect(0) + evt(f) on the random loop-free corpus")
def test_criterion_8_modularity(detail):
    rng, progs = _random_corpus(7, 100)
    zero = Expectation.const(0)
    violations = checks = 0
    for c, f in progs:
        fe = Expectation.of_cexp(f)
        lhs, cost, value = et(True, c, fe, 0), et(True, c, zero, 0), et(False, c, fe, 0)
        for _ in range(100):
            s = rand_store(rng)
            checks += 1
            violations += lhs(s) > cost(s) + value(s)
    detail(f"{checks} checks, {violations} violations")
    assert violations == 0


def _jensen_trials(ctx, rng, n):
    for _ in range(n):
        s = rand_store(rng)
        k = rng.randint(1, 4)
        weights = [rng.randint(1, 9) for _ in range(k)]
        total = sum(weights) + rng.randint(0, 4)
        ps = [Fraction(w, total) for w in weights]
        rs = [[Fraction(rng.randint(0, 30), rng.randint(1, 5)) for _ in range(ctx.arity)] for _ in range(k)]
        mix = [sum(p * r[i] for p, r in zip(ps, rs)) for i in range(ctx.arity)]
        if sum(p * ctx.evaluate(s, r) for p, r in zip(ps, rs)) > ctx.evaluate(s, mix):
            return False
    return True


@pytest.mark.criterion(9, "concavity classifier: accepts 2·•+1, [x>0]·3·•; rejects max(•1,•2), •*•; 1e3 Jensen trials each")
def test_criterion_9_concavity(detail):
    hole = lambda i, q=1: Scaled(Fraction(q), Hole(i))
    accept = {"2·• + 1": HoleContext(CSum(hole(1, 2), const(1)), 1),
              "[x>0]·(3·•)": HoleContext(Guard(parse_bexp("x > 0"), hole(1, 3)), 1)}
    reject = {"max(•1, •2)": HoleContext(CMax(hole(1), hole(2)), 2),
              "•*•": HoleContext(Scaled(Fraction(1), NormMul(Hole(1), Hole(1))), 1)}
    rng = random.Random(9)
    accepted = {name: bool(check_concave_context(c)) for name, c in accept.items()}
    rejected = {name: not check_concave_context(c) for name, c in reject.items()}
    jensen = {name: _jensen_trials(c, rng, 1000) for name, c in accept.items()}
    detail(f"accepted {accepted}, rejected {rejected}, Jensen {jensen}")
    assert all(accepted.values()) and all(rejected.values()) and all(jensen.values())


@pytest.mark.criterion(10, "kernel invariants: mass conservation and depth monotonicity on 1e3 random programs")
def test_criterion_10_kernel(detail):
    rng = random.Random(10)
    mass_bad = mono_bad = 0
    for _ in range(1000):
        c = rand_loop_free(rng, depth=3)
        s = rand_store(rng)
        m = Multidistribution(((Fraction(1, 2), Active(c, s)), (Fraction(1, 4), Terminal(s)),
                               (Fraction(1, 4), Aborted)))
        for o in successors(Active(c, s)):
            mass_bad += o.result.mass != 1
        choice = [rng.choice([STAY] + list(range(len(successors(a))))) for _, a in m.entries]
        mass_bad += step_mdist(m, choice).result.mass != m.mass
        vals = [expected_cost_vi(c, s, d, "steps") for d in range(5)]
        f = lambda t: Fraction(abs(t["x"]))
        evs = [expected_value_vi(c, s, f, d, "steps") for d in range(5)]
        mono_bad += vals != sorted(vals) or evs != sorted(evs)
    detail(f"1000 programs, mass violations {mass_bad}, monotonicity violations {mono_bad}")
    assert mass_bad == 0 and mono_bad == 0
