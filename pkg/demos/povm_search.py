"""
Searching over general measurements
===================================

Random restarts of a Nelder-Mead search over Alice's Kraus operators,
with Bob fixed to the computational basis and the max-weight guess rule.
More outcomes do not beat the projective optimum.
"""

from prodlocc import four_state
from prodlocc.discrimination import P_MAX, optimize_povm

e = four_state()
for K in (2, 3, 4, 8):
    best = max(optimize_povm(e, K, seed=s)[1].average_success for s in range(3))
    print(f"K = {K}: {best:.12f}   gap to bound {P_MAX - best:+.2e}")
