"""Zero-error feasibility of a first-round measurement.

If the first party to act has outcome ``k`` with POVM element ``E_k``, then
``alpha_ik alpha_jk <w_ik|w_jk> = <phi_i|E_k|phi_j>``. Keeping every pair whose
other-party parts overlap distinguishable forces ``<phi_i|E_k|phi_j> = 0``
for those pairs. The set of Hermitian operators meeting all such linear
constraints decides whether the first round can gain any information: if it
is only the multiples of the identity, every outcome leaves the ensemble's
structure unchanged.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .core import (
    NORM_TOL,
    RESIDUAL_TOL,
    HermitianOp,
    KrausSet,
    Ket,
    branches,
    hermitian_nullspace,
    ket,
    psd_sqrt,
    random_ket,
    random_kraus_set,
    random_unitary,
)
from .ensembles import ProductEnsemble, alice_overlap_pairs, bob_overlap_pairs

# Pairs listed explicitly for the domino ensemble when Alice goes first.
DOMINO_CORE_PAIRS = ((5, 6), (7, 8), (1, 9), (3, 9))


class Party(str, enum.Enum):
    ALICE = "alice"
    BOB = "bob"

    @property
    def other(self) -> "Party":
        return Party.BOB if self is Party.ALICE else Party.ALICE


class Verdict(str, enum.Enum):
    NO_PROGRESS = "NoProgress"
    PROGRESS_POSSIBLE = "ProgressPossible"


@dataclass(frozen=True)
class ConstraintPair:
    """Functional E -> <x_i|E|x_j> on the acting party, for a pair whose passive parts overlap."""

    i: int
    j: int
    passive_overlap: complex
    left: Ket
    right: Ket

    def __post_init__(self):
        if abs(self.passive_overlap) <= NORM_TOL:
            raise ValueError(f"pair ({self.i}, {self.j}) has orthogonal passive parts")

    def __call__(self, e: HermitianOp) -> complex:
        return e.expectation(self.left, self.right)


@dataclass(frozen=True)
class FeasibilityReport:
    party: Party
    pairs: tuple[ConstraintPair, ...]
    nullspace_dim: int
    nullspace_basis: tuple[HermitianOp, ...]
    verdict: Verdict
    witness: HermitianOp | None = None
    identity_residual: float = math.nan


@dataclass(frozen=True)
class ForcedStructure:
    equal_weight_classes: tuple[tuple[int, ...], ...]
    forced_branch_orthogonalities: tuple[tuple[int, int], ...]


def _party(party) -> Party:
    return party if isinstance(party, Party) else Party(str(party).lower())


def constraint_pairs(e: ProductEnsemble, party=Party.ALICE) -> list[ConstraintPair]:
    """Constraint functionals binding the acting ``party``."""
    party = _party(party)
    raw = bob_overlap_pairs(e) if party is Party.ALICE else alice_overlap_pairs(e)
    return [
        ConstraintPair(i, j, ov, e.state(i).part(party.value), e.state(j).part(party.value))
        for i, j, ov in raw
    ]


def _acting_kets(e: ProductEnsemble, party: Party) -> list[Ket]:
    return [s.part(party.value) for s in e.states]


def _identity_residual(b: HermitianOp) -> float:
    """Distance of a unit-norm operator from the identity direction."""
    d = b.dim
    m = b.matrix
    return float(np.linalg.norm(m - (np.trace(m).real / d) * np.eye(d)))


def _diagonal_spread(w: np.ndarray, kets: Sequence[Ket]) -> float:
    vals = [np.vdot(k.amps, w @ k.amps).real for k in kets]
    return float(max(vals) - min(vals))


def _extract_witness(basis: Sequence[HermitianOp], kets: Sequence[Ket]) -> HermitianOp | None:
    """Remove the identity direction from the basis and keep the most informative element."""
    d = basis[0].dim
    ident = np.eye(d) / math.sqrt(d)
    best, best_key = None, None
    for b in basis:
        w = b.matrix - np.trace(ident @ b.matrix).real * ident
        nrm = np.linalg.norm(w)
        if nrm <= RESIDUAL_TOL:
            continue
        w = w / nrm
        w = 0.5 * (w + w.conj().T)
        key = _diagonal_spread(w, kets)
        if best_key is None or key > best_key + 1e-12:
            best, best_key = w, key
    return None if best is None else HermitianOp(best)


def feasibility_analysis(e: ProductEnsemble, party=Party.ALICE,
                         pairs: Sequence[tuple[int, int]] | None = None) -> FeasibilityReport:
    """Hermitian operators compatible with zero-error action by ``party``.

    ``pairs`` restricts the constraint system to the listed ``(i, j)``; by
    default every pair with overlapping passive parts is used.
    """
    party = _party(party)
    cps = constraint_pairs(e, party)
    if pairs is not None:
        wanted = {tuple(sorted(p)) for p in pairs}
        cps = [c for c in cps if (c.i, c.j) in wanted]
        missing = wanted - {(c.i, c.j) for c in cps}
        if missing:
            raise ValueError(f"pairs {sorted(missing)} are not constraint pairs for {party.value}")
    dim = e.d_A if party is Party.ALICE else e.d_B
    basis = hermitian_nullspace([(c.left, c.right) for c in cps], dim)
    if len(basis) == 1:
        res = _identity_residual(basis[0])
        if res < RESIDUAL_TOL:
            return FeasibilityReport(party, tuple(cps), 1, tuple(basis), Verdict.NO_PROGRESS,
                                     None, res)
    else:
        res = math.nan
    witness = _extract_witness(basis, _acting_kets(e, party))
    return FeasibilityReport(party, tuple(cps), len(basis), tuple(basis),
                             Verdict.PROGRESS_POSSIBLE, witness, res)


def witness_is_valid(report: FeasibilityReport, e: ProductEnsemble) -> bool:
    """Witness meets every constraint and separates some states (or is off-diagonal)."""
    w = report.witness
    if w is None:
        return False
    if any(abs(c(w)) > RESIDUAL_TOL for c in report.pairs):
        return False
    kets = _acting_kets(e, report.party)
    if _diagonal_spread(w.matrix, kets) > 1e-8:
        return True
    return any(abs(w.expectation(a, b)) > 1e-8 for a, b in combinations(kets, 2))


def forced_structure(e: ProductEnsemble, party=Party.ALICE,
                     report: FeasibilityReport | None = None,
                     require_no_progress: bool = True) -> ForcedStructure:
    """What every feasible outcome operator forces on branch weights and overlaps.

    States ``i`` and ``j`` share a weight class when ``<x_i|B|x_i> = <x_j|B|x_j>``
    for every null-space element ``B``; a pair is forced orthogonal when
    ``<x_i|B|x_j> = 0`` for every ``B``. By default only a NoProgress report
    is accepted; ``require_no_progress=False`` reads off the same structure
    from any null space (useful for restricted pair subsystems).
    """
    party = _party(party)
    report = feasibility_analysis(e, party) if report is None else report
    if require_no_progress and report.verdict is not Verdict.NO_PROGRESS:
        raise ValueError("forced structure is only defined for a NoProgress report")
    kets = _acting_kets(e, party)
    n = len(kets)
    diag = np.array([[b.expectation(k).real for b in report.nullspace_basis] for k in kets])
    classes: list[list[int]] = []
    for i in range(n):
        for cls in classes:
            if np.max(np.abs(diag[i] - diag[cls[0]])) < RESIDUAL_TOL:
                cls.append(i)
                break
        else:
            classes.append([i])
    orth = [
        (i + 1, j + 1)
        for i, j in combinations(range(n), 2)
        if all(abs(b.expectation(kets[i], kets[j])) < RESIDUAL_TOL for b in report.nullspace_basis)
    ]
    return ForcedStructure(
        tuple(tuple(i + 1 for i in cls) for cls in classes),
        tuple(orth),
    )


@dataclass(frozen=True)
class OracleReport:
    trials: int
    seed: int
    verdict: Verdict
    max_alpha_spread: float
    max_overlap_deviation: float
    max_completeness_residual: float
    spread_per_trial: tuple[float, ...] = field(repr=False, default=())


def _project_outcomes(effects: np.ndarray, basis: Sequence[HermitianOp]) -> np.ndarray:
    """Project each E_k onto span(basis) and keep it positive by mixing in the identity part."""
    b = np.array([x.matrix for x in basis])
    d = effects.shape[1]
    out = []
    for e in effects:
        coeffs = np.einsum("nab,ba->n", b, e).real
        p = np.tensordot(coeffs, b, axes=1)
        p = 0.5 * (p + p.conj().T)
        lo = np.linalg.eigvalsh(p).min()
        if lo < 0:
            # identity lies in every constraint null space, so this shift stays feasible
            p = p - lo * np.eye(d)
        out.append(p)
    return np.array(out)


def kraus_oracle_check(e: ProductEnsemble, party=Party.ALICE, trials: int = 100,
                       seed: int = 0, outcomes: int = 3) -> OracleReport:
    """Random-measurement cross-check of a feasibility verdict.

    Every trial draws a random Kraus set, projects its POVM onto the
    constraint null space, restores completeness, and rebuilds Kraus
    operators as a random unitary times the square root of each element.
    It then records the spread of branch amplitudes across states for each
    outcome, and the largest deviation of ``<w_ik|w_jk>`` from the initial
    overlap ``<x_i|x_j>`` over all pairs and outcomes.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    party = _party(party)
    report = feasibility_analysis(e, party)
    kets = _acting_kets(e, party)
    dim = kets[0].dim
    K = outcomes
    rng = np.random.default_rng([seed, 1])
    spreads, max_dev, max_res = [], 0.0, 0.0
    for t in range(trials):
        m = random_kraus_set(seed * 1_000_003 + t, dim, K)
        effects = np.einsum("kji,kjl->kil", m.operators.conj(), m.operators)
        proj = _project_outcomes(effects, report.nullspace_basis)
        s = proj.sum(axis=0)
        vals, vecs = np.linalg.eigh(s)
        t_half = (vecs / np.sqrt(vals)) @ vecs.conj().T
        proj = np.array([t_half @ p @ t_half for p in proj])
        ops = np.array([random_unitary(rng, dim) @ psd_sqrt(p) for p in proj])
        kraus = KrausSet(ops)
        max_res = max(max_res, float(np.linalg.norm(
            np.einsum("kji,kjl->il", ops.conj(), ops) - np.eye(dim), 2)))
        br = [branches(kraus, x, i + 1) for i, x in enumerate(kets)]
        spread = 0.0
        for k in range(K):
            amps = [br[i][k].amplitude for i in range(len(kets))]
            if max(amps) <= NORM_TOL:
                continue
            spread = max(spread, max(amps) - min(amps))
            for i, j in combinations(range(len(kets)), 2):
                if br[i][k].branch is None or br[j][k].branch is None:
                    continue
                init = np.vdot(kets[i].amps, kets[j].amps)
                max_dev = max(max_dev, abs(br[i][k].overlap(br[j][k]) - init))
        spreads.append(spread)
    return OracleReport(trials, seed, report.verdict, max(spreads), max_dev, max_res, tuple(spreads))


def _rotated_pair(dim: int, lo: int, hi: int, angle: float) -> tuple[Ket, Ket]:
    c, s = math.cos(angle), math.sin(angle)
    a = np.zeros(dim, dtype=complex)
    b = np.zeros(dim, dtype=complex)
    a[lo], a[hi] = c, s
    b[lo], b[hi] = s, -c
    return Ket(a), Ket(b)


@dataclass(frozen=True)
class RelationsReport:
    theta: float
    gamma: float
    samples: int
    max_residual: float
    residuals: tuple[float, float, float, float]
    forced_equalities: dict
    combined_nullspace_dim: int


def _sample_feasible(rng, basis: Sequence[HermitianOp]) -> np.ndarray:
    c = rng.standard_normal(len(basis))
    return np.tensordot(c, np.array([b.matrix for b in basis]), axes=1)


def check_generalized_relations(theta: float, gamma: float, samples: int = 1000,
                                seed: int = 0) -> RelationsReport:
    """Check the weight-difference relations of the generalized domino family.

    With ``a_i = <phi_i|E|phi_i>`` on Alice's qutrit:

    * ``a1 - a9 = cos(2 theta) (a5 - a6)`` and ``a5 - a6 = cos(2 theta) (a1 - a9)``
      for every Hermitian E with ``<0|E|1> = 0`` and ``<phi_5|E|phi_6> = 0``;
    * ``a9 - a3 = cos(2 gamma) (a7 - a8)`` and ``a7 - a8 = cos(2 gamma) (a9 - a3)``
      for every E with ``<1|E|2> = 0`` and ``<phi_7|E|phi_8> = 0``.

    Samples are drawn from each null space separately. The four relations are
    then treated as a homogeneous linear system in the seven weights
    ``(a1, a9, a3, a5, a6, a7, a8)``; ``forced_equalities`` records which
    weight differences vanish on its whole solution space.
    """
    for name, v in (("theta", theta), ("gamma", gamma)):
        if not 0.0 < v < math.pi / 2:
            raise ValueError(f"{name} = {v!r} must lie strictly inside (0, pi/2)")
    k0, k1, k2 = (Ket(np.eye(3, dtype=complex)[i]) for i in range(3))
    p5, p6 = _rotated_pair(3, 0, 1, theta)
    p7, p8 = _rotated_pair(3, 1, 2, gamma)
    ct, cg = math.cos(2 * theta), math.cos(2 * gamma)
    theta_basis = hermitian_nullspace([(k0, k1), (p5, p6)], 3)
    gamma_basis = hermitian_nullspace([(k1, k2), (p7, p8)], 3)
    rng = np.random.default_rng(seed)
    w = lambda m, x: float(np.vdot(x.amps, m @ x.amps).real)  # noqa: E731
    res = np.zeros(4)
    for _ in range(samples):
        m = _sample_feasible(rng, theta_basis)
        a1, a9, a5, a6 = w(m, k0), w(m, k1), w(m, p5), w(m, p6)
        scale = max(1.0, float(np.linalg.norm(m)))
        res[0] = max(res[0], abs((a1 - a9) - ct * (a5 - a6)) / scale)
        res[1] = max(res[1], abs((a5 - a6) - ct * (a1 - a9)) / scale)
        m = _sample_feasible(rng, gamma_basis)
        a9, a3, a7, a8 = w(m, k1), w(m, k2), w(m, p7), w(m, p8)
        scale = max(1.0, float(np.linalg.norm(m)))
        res[2] = max(res[2], abs((a9 - a3) - cg * (a7 - a8)) / scale)
        res[3] = max(res[3], abs((a7 - a8) - cg * (a9 - a3)) / scale)

    # unknowns ordered (a1, a9, a3, a5, a6, a7, a8)
    system = np.array([
        [1, -1, 0, -ct, ct, 0, 0],
        [-ct, ct, 0, 1, -1, 0, 0],
        [0, 1, -1, 0, 0, -cg, cg],
        [0, -cg, cg, 0, 0, 1, -1],
    ], dtype=float)
    _, s, vh = np.linalg.svd(system)
    rank = int(np.sum(s > RESIDUAL_TOL * s[0]))
    null = vh[rank:]
    names = ("a1", "a9", "a3", "a5", "a6", "a7", "a8")
    idx = {n: i for i, n in enumerate(names)}
    forced = {}
    for x, y in (("a1", "a9"), ("a9", "a3"), ("a1", "a3"), ("a5", "a6"), ("a7", "a8")):
        diff = null[:, idx[x]] - null[:, idx[y]]
        forced[f"{x}={y}"] = bool(np.max(np.abs(diff), initial=0.0) < RESIDUAL_TOL)
    return RelationsReport(theta, gamma, samples, float(res.max()),
                           tuple(float(r) for r in res), forced, int(null.shape[0]))


@dataclass(frozen=True)
class ParallelogramReport:
    trials: int
    seed: int
    max_residual: float


def parallelogram_residual(alpha1: float, w1: Ket, alpha2: float, w2: Ket) -> float:
    """Largest residual of the four weight identities for one pair of branches.

    Builds ``alpha3 w3 = (alpha1 w1 + alpha2 w2)/sqrt 2`` and
    ``alpha4 w4 = (alpha1 w1 - alpha2 w2)/sqrt 2``, splits them into amplitude
    and unit branch, and compares each squared amplitude with the value
    predicted from the other pair using the real part of the branch overlap.
    """
    r = 1.0 / math.sqrt(2.0)
    parts = []
    for v in (r * (alpha1 * w1.amps + alpha2 * w2.amps), r * (alpha1 * w1.amps - alpha2 * w2.amps)):
        a = float(np.linalg.norm(v))
        parts.append((a, None if a <= NORM_TOL else ket(v, normalize=True)))
    (a3, w3), (a4, w4) = parts

    def cross(x, u, y, v):
        if u is None or v is None:
            return 0.0
        return x * y * np.vdot(u.amps, v.amps).real

    c34 = cross(a3, w3, a4, w4)
    c12 = cross(alpha1, w1, alpha2, w2)
    return max(
        abs(alpha1**2 - 0.5 * (a3**2 + a4**2 + 2 * c34)),
        abs(alpha2**2 - 0.5 * (a3**2 + a4**2 - 2 * c34)),
        abs(a3**2 - 0.5 * (alpha1**2 + alpha2**2 + 2 * c12)),
        abs(a4**2 - 0.5 * (alpha1**2 + alpha2**2 - 2 * c12)),
    )


def verify_parallelogram(trials: int = 1000, seed: int = 0, dim: int = 3) -> ParallelogramReport:
    """Randomized check of the branch-weight parallelogram identities."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        w1, w2 = random_ket(rng, dim), random_ket(rng, dim)
        a1, a2 = rng.uniform(0.0, 1.0, size=2)
        worst = max(worst, parallelogram_residual(float(a1), w1, float(a2), w2))
    return ParallelogramReport(trials, seed, worst)
