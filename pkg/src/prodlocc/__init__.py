"""Local discrimination of bipartite product-state ensembles.

Simulates and optimizes one-way (Alice to Bob) estimation protocols, and
decides whether a zero-error first measurement round can make progress.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    BranchDecomposition,
    HermitianOp,
    Ket,
    KrausSet,
    Povm,
    apply_kraus,
    basis_ket,
    hermitian_nullspace,
    inner_product,
    ket,
    povm_from_kraus,
    random_kraus_set,
)
from .discrimination import (  # noqa: E402
    P_MAX,
    BobStrategy,
    EstimationParametrization,
    EstimationResult,
    OneWayProtocol,
    analytic_p,
    chi_basis_protocol,
    guess_probability_projective,
    helstrom_two_pure,
    optimize_povm,
    optimize_projective,
    simulate_one_way,
)
from .ensembles import (  # noqa: E402
    BipartiteProductState,
    EnsembleError,
    ProductEnsemble,
    bob_overlap_pairs,
    computational,
    four_state,
    four_state_general,
    load_ensemble,
    nine_state,
    nine_state_general,
    save_ensemble,
)
from .nogo import (  # noqa: E402
    Party,
    Verdict,
    check_generalized_relations,
    constraint_pairs,
    feasibility_analysis,
    forced_structure,
    kraus_oracle_check,
    verify_parallelogram,
)
