import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prodlocc.core import basis_ket, branches, ket, random_kraus_set, random_unitary
from prodlocc.ensembles import computational, four_state, four_state_general, nine_state, nine_state_general
from prodlocc.nogo import (
    DOMINO_CORE_PAIRS,
    Party,
    Verdict,
    check_generalized_relations,
    constraint_pairs,
    feasibility_analysis,
    forced_structure,
    kraus_oracle_check,
    parallelogram_residual,
    verify_parallelogram,
    witness_is_valid,
)


def _ij(pairs):
    return [(c.i, c.j) for c in pairs]


class TestConstraintPairs:
    def test_four(self):
        assert _ij(constraint_pairs(four_state(), "alice")) == [(1, 2), (3, 4)]

    def test_nine_superset(self):
        got = set(_ij(constraint_pairs(nine_state(), Party.ALICE)))
        assert set(DOMINO_CORE_PAIRS) <= got
        assert len(got) == 18

    def test_computational(self):
        assert _ij(constraint_pairs(computational(2, 2), "alice")) == [(1, 3), (2, 4)]

    def test_bob_side_uses_alice_overlaps(self):
        assert _ij(constraint_pairs(four_state(), "bob")) == [(1, 3), (1, 4), (2, 3), (2, 4)]


class TestFeasibility:
    def test_four_state_no_progress(self):
        r = feasibility_analysis(four_state(), "alice")
        assert r.nullspace_dim == 1 and r.verdict is Verdict.NO_PROGRESS
        m = r.nullspace_basis[0].matrix
        np.testing.assert_allclose(m / m[0, 0], np.eye(2), atol=1e-10)
        assert r.identity_residual < 1e-10

    @pytest.mark.parametrize("party", ["alice", "bob"])
    def test_nine_state_no_progress(self, party):
        r = feasibility_analysis(nine_state(), party)
        assert r.nullspace_dim == 1 and r.verdict is Verdict.NO_PROGRESS

    def test_computational_progress(self):
        e = computational(2, 2)
        r = feasibility_analysis(e, "alice")
        assert r.nullspace_dim == 2 and r.verdict is Verdict.PROGRESS_POSSIBLE
        w = r.witness.matrix
        np.testing.assert_allclose(w, np.diag(np.diag(w)), atol=1e-12)
        assert witness_is_valid(r, e)

    def test_four_state_bob_first_can_progress(self):
        r = feasibility_analysis(four_state(), "bob")
        assert r.verdict is Verdict.PROGRESS_POSSIBLE
        assert witness_is_valid(r, four_state())

    def test_domino_four_pair_subsystem(self):
        r = feasibility_analysis(nine_state(), "alice", pairs=DOMINO_CORE_PAIRS)
        # E00 = E11 = E22 and E01 = E12 = 0 leave the complex entry E02 free
        assert r.nullspace_dim == 3
        fs = forced_structure(nine_state(), "alice", r, require_no_progress=False)
        assert fs.equal_weight_classes == (tuple(range(1, 10)),)
        assert (1, 9) in fs.forced_branch_orthogonalities
        assert (3, 9) in fs.forced_branch_orthogonalities
        assert (1, 3) not in fs.forced_branch_orthogonalities

    def test_unknown_subsystem_pair(self):
        with pytest.raises(ValueError):
            feasibility_analysis(four_state(), "alice", pairs=[(1, 3)])

    def test_relabeling_invariance(self):
        e = nine_state()
        order = [9, 3, 1, 7, 5, 2, 8, 4, 6]
        for party in ("alice", "bob"):
            assert feasibility_analysis(e.relabeled(order), party).nullspace_dim == \
                feasibility_analysis(e, party).nullspace_dim

    @pytest.mark.parametrize("seed", range(6))
    def test_local_unitary_invariance(self, seed):
        rng = np.random.default_rng(seed)
        for e in (four_state(), nine_state(), computational(2, 3)):
            ua, ub = random_unitary(rng, e.d_A), random_unitary(rng, e.d_B)
            for party in ("alice", "bob"):
                assert feasibility_analysis(e.transformed(ua, ub), party).nullspace_dim == \
                    feasibility_analysis(e, party).nullspace_dim

    @pytest.mark.parametrize("make", [nine_state, lambda: nine_state_general(0.4, 1.1, 0.3, 0.8)])
    def test_alice_bob_symmetry(self, make):
        e = make()
        assert feasibility_analysis(e, "alice").nullspace_dim == feasibility_analysis(e, "bob").nullspace_dim

    def test_monotone_in_constraints(self):
        e = nine_state()
        pairs = _ij(constraint_pairs(e, "alice"))
        prev = 9
        for n in range(1, len(pairs) + 1):
            dim = feasibility_analysis(e, "alice", pairs=pairs[:n]).nullspace_dim
            assert dim <= prev
            prev = dim


class TestForcedStructure:
    def test_four_state(self):
        fs = forced_structure(four_state(), "alice")
        assert fs.equal_weight_classes == ((1, 2, 3, 4),)
        assert (1, 2) in fs.forced_branch_orthogonalities

    def test_nine_state(self):
        fs = forced_structure(nine_state(), "alice")
        assert fs.equal_weight_classes == (tuple(range(1, 10)),)
        for p in [(1, 3), (1, 9), (3, 9)]:
            assert p in fs.forced_branch_orthogonalities

    def test_four_general(self):
        fs = forced_structure(four_state_general(math.pi / 3), "alice")
        assert fs.equal_weight_classes == ((1, 2, 3, 4),)

    def test_rejects_progress(self):
        with pytest.raises(ValueError):
            forced_structure(computational(2, 2), "alice")


class TestOracle:
    def test_four_state(self):
        o = kraus_oracle_check(four_state(), "alice", trials=100, seed=0)
        assert o.max_alpha_spread < 1e-8
        assert o.max_completeness_residual < 1e-10

    def test_nine_state(self):
        o = kraus_oracle_check(nine_state(), "alice", trials=100, seed=0)
        assert o.max_overlap_deviation < 1e-8
        assert o.max_alpha_spread < 1e-8

    def test_computational_spread(self):
        o = kraus_oracle_check(computational(2, 2), "alice", trials=100, seed=0)
        assert o.max_alpha_spread > 0.1

    def test_deterministic(self):
        a = kraus_oracle_check(nine_state(), "bob", trials=10, seed=5)
        b = kraus_oracle_check(nine_state(), "bob", trials=10, seed=5)
        assert a == b


def test_shared_alice_parts_share_branches():
    e = nine_state()
    for seed in range(100):
        m = random_kraus_set(seed, 3, 3)
        for a, b in ((1, 2), (3, 4)):
            ba = branches(m, e.state(a).alice)
            bb = branches(m, e.state(b).alice)
            for x, y in zip(ba, bb):
                assert abs(x.amplitude - y.amplitude) <= 1e-12
                if x.branch is not None:
                    assert np.max(np.abs(x.branch.amps - y.branch.amps)) <= 1e-12


class TestGeneralizedRelations:
    def test_pi_over_4_reduces(self):
        r = check_generalized_relations(math.pi / 4, math.pi / 4, samples=200)
        assert r.max_residual < 1e-10
        assert r.forced_equalities["a1=a9"]

    def test_pi_over_6(self):
        r = check_generalized_relations(math.pi / 6, math.pi / 4, samples=1000, seed=1)
        assert r.max_residual < 1e-10

    def test_pi_over_3_forces_equality(self):
        r = check_generalized_relations(math.pi / 3, math.pi / 5)
        assert all(r.forced_equalities.values())

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            check_generalized_relations(0.0, 0.3)


class TestParallelogram:
    def test_random(self):
        assert verify_parallelogram(1000, seed=0).max_residual < 1e-10

    def test_alpha2_zero(self):
        w1 = ket(0.6, 0.8j)
        assert parallelogram_residual(0.7, w1, 0.0, basis_ket(2, 0)) < 1e-14

    def test_degenerate_branch(self):
        w = ket(1, 1j, normalize=True)
        assert parallelogram_residual(0.5, w, 0.5, w) < 1e-14


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), dim=st.integers(1, 5))
def test_parallelogram_property(seed, dim):
    assert verify_parallelogram(20, seed=seed, dim=dim).max_residual < 1e-10
