"""
Which first measurements keep every state distinguishable?
==========================================================

A first-round measurement can only be part of a perfect protocol if it
keeps orthogonal the pairs of states that the other party cannot tell
apart. Those conditions are linear in the POVM element, so the set of
admissible elements is a null space. When only multiples of the identity
survive, the first measurement learns nothing.
"""

import numpy as np

from prodlocc import computational, four_state, nine_state
from prodlocc.nogo import (
    DOMINO_CORE_PAIRS,
    feasibility_analysis,
    forced_structure,
    kraus_oracle_check,
    witness_is_valid,
)

for name, e in [("four", four_state()), ("nine", nine_state()), ("computational", computational(2, 2))]:
    for party in ("alice", "bob"):
        rep = feasibility_analysis(e, party)
        line = f"{name:>13} {party:>5}: dim {rep.nullspace_dim}  {rep.verdict.value}"
        if rep.witness is not None:
            line += f"  witness valid: {witness_is_valid(rep, e)}"
        print(line)

# structure forced on Alice's branches for the nine-state ensemble
fs = forced_structure(nine_state(), "alice")
print()
print("equal weights:", fs.equal_weight_classes)
print("orthogonal branch pairs:", fs.forced_branch_orthogonalities)

# only four of the constraint pairs leave the off-diagonal entry E02 free
sub = feasibility_analysis(nine_state(), "alice", pairs=DOMINO_CORE_PAIRS)
print("four-pair subsystem dimension:", sub.nullspace_dim)
print(np.round(sub.nullspace_basis[-1].matrix, 3))

# random Kraus sets built on admissible POVMs never split the weights
o = kraus_oracle_check(nine_state(), "alice", trials=200, seed=1)
print()
print("oracle alpha spread:", o.max_alpha_spread)
print("oracle overlap deviation:", o.max_overlap_deviation)
