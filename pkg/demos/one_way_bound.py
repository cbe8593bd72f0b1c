"""
One-way guessing of the four-state ensemble
===========================================

Alice measures her qubit projectively, tells Bob the outcome, and Bob
measures in the computational basis and guesses the prepared label.
This script scans Alice's measurement angle and compares the simulated
success with the closed form.
"""

import math

import numpy as np

from prodlocc import four_state
from prodlocc.discrimination import (
    P_MAX,
    analytic_average,
    chi_basis_protocol,
    guess_probability_projective,
    optimize_projective,
    projective_basis,
    simulate_one_way,
)

e = four_state()

# scan the angle over one period of the success curve
angles = np.linspace(0, math.pi / 2, 9)
print(f"{'angle':>8} {'simulated':>10} {'analytic':>10}")
for a in angles:
    sim = guess_probability_projective(e, a).average_success
    ana = analytic_average(e, projective_basis(a))
    print(f"{a:8.4f} {sim:10.6f} {ana:10.6f}")

# the optimizer should land on pi/8 and the bound 1/2 + 1/(2 sqrt 2)
opt = optimize_projective(e)
print()
print("best angle  ", opt.best_angle, "(pi/8 =", math.pi / 8, ")")
print("best value  ", opt.result.average_success)
print("bound       ", P_MAX)
print("maximizers  ", [round(m, 6) for m in opt.maximizers])

# at the optimum every state is identified with the same probability
r = simulate_one_way(e, chi_basis_protocol())
print("per state   ", r.per_state_success)
