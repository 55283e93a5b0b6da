"""Random walks: a bound that holds, one that cannot, and what the oracle says.

Run with ``python demos/random_walks.py``.
"""

from fractions import Fraction

from pwexpect.costexpr import discharge, eval_cexp, et_sharp, simplify
from pwexpect.lang import Store, grid
from pwexpect.mdist import expected_cost_vi
from pwexpect.parser import parse_program
from pwexpect.pretty import pretty_cexp
from pwexpect.syntax import ZERO

WALK = "while (x > 0) inv([x > 0]·{k}·⌈x⌉) {{ tick(1); {{x := x + 1}} [{p}] {{x := x - 1}} }}"
domain = grid({"x": range(-5, 11)})

# moving up with probability 1/4, the walk drifts down and hits 0 after 2x steps on average
biased = parse_program(WALK.format(k=2, p="1/4"))
bound, conds = et_sharp(True, biased, ZERO)
print("biased walk bound:", pretty_cexp(simplify(bound)))
for sc, verdict in discharge(conds, domain):
    print(f"  {sc.provenance:18s} {verdict.status}")

for x in (1, 2, 3, 5):
    s = Store({"x": x})
    v = expected_cost_vi(biased, s, 300)
    print(f"  x={x}: oracle {float(v):.6f} <= bound {eval_cexp(bound, s)}")

# the symmetric walk terminates almost surely but its expected cost is infinite,
# so every linear candidate fails, always first at x = 1
symmetric_k = [parse_program(WALK.format(k=k, p="1/2")) for k in (1, 4, 16)]
for k, prog in zip((1, 4, 16), symmetric_k):
    _, conds = et_sharp(True, prog, ZERO)
    failed = [(sc, v) for sc, v in discharge(conds, domain) if not v]
    sc, v = failed[0]
    print(f"symmetric walk, k={k}: {sc.provenance} fails at x={v.store['x']}: {v.lhs} > {v.rhs}")

# the oracle keeps growing with depth, without bound
sym = symmetric_k[0]
for depth in (25, 50, 100, 200):
    print(f"  depth {depth:3d}: {float(expected_cost_vi(sym, Store({'x': 1}), depth)):.3f}")

print("exact tail at depth 60 for the geometric loop:",
      2 - expected_cost_vi(parse_program("while (x > 0) { tick(1); {x := 0} [1/2] {skip} }"),
                           Store({"x": 1}), 60) == Fraction(1, 2 ** 59))
