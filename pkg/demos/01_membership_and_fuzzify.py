"""Membership functions and fuzzification of one DREAD score vector.

Run: python demos/01_membership_and_fuzzify.py
"""

import numpy as np

from dreadfuzz import DreadScores, MembershipFunction, dread_variables, eval_mf, fuzzify

# A triangle and a shoulder-style trapezoid evaluated on a few points.
tri = MembershipFunction.tri(2, 5, 8)
trap = MembershipFunction.trap(0, 0, 2, 4.5)
xs = np.array([0, 1, 2, 3, 5, 7, 9])
print("x    ", xs)
print("tri  ", np.round(eval_mf(tri, xs), 3))
print("trap ", np.round(eval_mf(trap, xs), 3))

# Fuzzify the blind SQL injection scores against the five DREAD variables.
inputs, output = dread_variables()
scores = DreadScores(9, 6, 8, 9, 6)
print()
for var, x in zip(inputs, scores.as_tuple()):
    nonzero = {t: round(d, 4) for t, d in fuzzify(var, x).degrees.items() if d > 0}
    print(f"{var.name:>16} = {x:<3} {nonzero}")

print()
print("output terms:", ", ".join(output.term_names))
