"""A tour of the cost-expression calculus on a nested loop and a sequenced walk.

Run with ``python demos/calculus_tour.py``.
"""

from pwexpect.costexpr import (check_concave_context, decompose, discharge,
                               et_sharp, eval_cexp, simplify)
from pwexpect.lang import grid
from pwexpect.mdist import expected_cost_vi_many
from pwexpect.parser import parse_cexp, parse_program
from pwexpect.pretty import pretty, pretty_cexp
from pwexpect.syntax import ZERO

# a triangular nest costs x(x-1)/2; the inner loop needs a value invariant
# saying it leaves ⌈x⌉·⌈x⌉ untouched
nest = parse_program("""
while (x > 0) inv(1/2·⌈x⌉·⌈x⌉) {
  x := x - 1;
  y := x;
  while (y > 0) inv(⌈y⌉; value: ⌈x⌉·⌈x⌉) { tick(1); y := y - 1 }
}
""")
print(pretty(nest))
bound, conds = et_sharp(True, nest, ZERO)
dom = grid({"x": range(-1, 8), "y": range(-2, 4)})
for sc, v in discharge(conds, dom):
    print(f"  {sc.provenance:26s} {pretty_cexp(simplify(sc.lhs))}  ⊑  {pretty_cexp(simplify(sc.rhs))}   {v.status}")

oracle = expected_cost_vi_many(nest, dom, 40)
worst = max(eval_cexp(bound, s) - oracle[s] for s in dom)
print("bound", pretty_cexp(simplify(bound)), "| largest slack on the grid:", worst)

# holes of an invariant are its store-dependent pieces; the context around
# them must be concave before a probabilistic body may be analysed with it
for text in ("[x > 0]·2·⌈x⌉ + 1", "max(⌈x⌉, ⌈y⌉)", "⌈x⌉·⌈y⌉ + 3"):
    ctx, gs = decompose(parse_cexp(text))
    verdict = check_concave_context(ctx)
    print(f"{text:22s} holes {[pretty_cexp(g) for g in gs]}  concave: {verdict.concave} {verdict.reason}")

# sequencing a random shift before the walk runs the seq rule:
# cost of the prefix plus the walk's invariant pushed back through it
shifted = parse_program("x := {1/2: x, 1/2: x + 2}; "
                        "while (x > 0) inv([x > 0]·2·⌈x⌉) { tick(1); {x := x + 1} [1/4] {x := x - 1} }")
b, _ = et_sharp(True, shifted, ZERO)
print("shifted walk:", pretty_cexp(simplify(b)))
