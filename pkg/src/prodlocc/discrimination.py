"""One-way (Alice to Bob) estimation protocols and their optimization.

Alice measures first with a Kraus set and announces the outcome ``k``; Bob
then measures in an orthonormal basis that may depend on ``k``, and the pair
``(k, bob_outcome)`` is mapped to a guessed state label. Success
probabilities are computed exactly from the Born rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .core import NORM_TOL, OPT_TOL, RESIDUAL_TOL, KrausSet, _frozen, inverse_sqrt, ket, normalize_kraus
from .ensembles import ProductEnsemble, bob_overlap_pairs

P_MAX = 0.5 + 1.0 / (2.0 * math.sqrt(2.0))

PROTOCOL_FORMAT = "prodlocc-protocol"


@dataclass(frozen=True, eq=False)
class BobStrategy:
    """Bob's measurement basis (rows are kets) and the label guessed per outcome.

    ``None`` in ``guesses`` marks a Bob outcome that never occurs.
    """

    basis: np.ndarray
    guesses: tuple[int | None, ...]

    def __post_init__(self):
        b = _frozen(self.basis)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError(f"Bob basis must be square, got shape {b.shape}")
        res = float(np.abs(b @ b.conj().T - np.eye(b.shape[0])).max())
        if res > RESIDUAL_TOL:
            raise ValueError(f"Bob basis is not orthonormal: residual {res:.3e}")
        if len(self.guesses) != b.shape[0]:
            raise ValueError("one guess entry is needed per Bob outcome")
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "guesses", tuple(self.guesses))

    @classmethod
    def computational(cls, dim: int, guesses) -> "BobStrategy":
        return cls(np.eye(dim, dtype=complex), tuple(guesses))


@dataclass(frozen=True, eq=False)
class OneWayProtocol:
    alice: KrausSet
    bob: tuple[BobStrategy, ...]

    def __post_init__(self):
        bob = tuple(self.bob)
        if len(bob) != self.alice.outcome_count:
            raise ValueError(
                f"need one Bob strategy per Alice outcome ({self.alice.outcome_count}), got {len(bob)}"
            )
        if len({s.basis.shape[0] for s in bob}) != 1:
            raise ValueError("Bob strategies act on different dimensions")
        object.__setattr__(self, "bob", bob)

    @property
    def d_A(self) -> int:
        return self.alice.dim_in

    @property
    def d_B(self) -> int:
        return self.bob[0].basis.shape[0]

    def guess(self, k: int, m: int) -> int | None:
        return self.bob[k].guesses[m]


@dataclass(frozen=True)
class EstimationParametrization:
    """Per-outcome weights of the four-state family as gamma*(1 +/- epsilon), gamma*(1 +/- delta)."""

    gamma_weight: float
    epsilon: float
    delta: float

    def __post_init__(self):
        if self.gamma_weight < 0 or abs(self.epsilon) > 1 + NORM_TOL or abs(self.delta) > 1 + NORM_TOL:
            raise ValueError(f"invalid parametrization {self}")

    def alphas_squared(self) -> tuple[float, float, float, float]:
        g, e, d = self.gamma_weight, self.epsilon, self.delta
        return g * (1 + e), g * (1 - e), g * (1 + d), g * (1 - d)

    @property
    def guess_probability(self) -> float:
        """Conditional success of the max rule for this outcome."""
        return (2.0 + abs(self.epsilon) + abs(self.delta)) / 4.0


@dataclass(frozen=True)
class EstimationResult:
    per_state_success: tuple[float, ...]
    average_success: float
    parameters: tuple[EstimationParametrization, ...] | None = None
    outcome_probabilities: tuple[tuple[float, ...], ...] = field(default=(), repr=False)


def parametrize(alpha_sq: np.ndarray) -> EstimationParametrization | None:
    """Parametrize one outcome's weights ``(a1, a2, a3, a4)``; ``None`` if it never occurs."""
    a1, a2, a3, a4 = (float(x) for x in alpha_sq)
    g = 0.5 * (a1 + a2)
    if g <= NORM_TOL:
        return None
    eps = float(np.clip((a1 - a2) / (2 * g), -1.0, 1.0))
    dlt = float(np.clip((a3 - a4) / (2 * g), -1.0, 1.0))
    return EstimationParametrization(g, eps, dlt)


def _is_four_state_layout(e: ProductEnsemble) -> bool:
    return len(e) == 4 and [(i, j) for i, j, _ in bob_overlap_pairs(e)] == [(1, 2), (3, 4)]


def branch_weights(e: ProductEnsemble, alice: KrausSet) -> np.ndarray:
    """alpha_ik^2 = ||M_k phi_i||^2, shape ``(n, K)``."""
    phis = e.alice_matrix()
    v = np.einsum("kab,ib->ika", alice.operators, phis)
    return np.sum(np.abs(v) ** 2, axis=2)


def _bob_probabilities(e: ProductEnsemble, basis: np.ndarray) -> np.ndarray:
    """|<b_m|psi_i>|^2, shape ``(n, d_B)``."""
    return np.abs(e.bob_matrix() @ basis.conj().T) ** 2


def simulate_one_way(e: ProductEnsemble, p: OneWayProtocol) -> EstimationResult:
    """Exact per-state success probabilities of a one-way protocol."""
    if p.d_A != e.d_A or p.d_B != e.d_B:
        raise ValueError(
            f"dimension mismatch: protocol acts on ({p.d_A}, {p.d_B}), ensemble is ({e.d_A}, {e.d_B})"
        )
    n = len(e)
    alpha_sq = branch_weights(e, p.alice)
    success = np.zeros(n)
    joint = np.zeros((n, p.alice.outcome_count, p.d_B))
    for k, strat in enumerate(p.bob):
        q = _bob_probabilities(e, strat.basis)
        joint[:, k, :] = alpha_sq[:, k, None] * q
        for m, g in enumerate(strat.guesses):
            if g is None:
                if joint[:, k, m].sum() >= NORM_TOL:
                    raise ValueError(f"guess map has no entry for occurring outcome ({k}, {m})")
                continue
            if not 1 <= g <= n:
                raise ValueError(f"guess {g} at ({k}, {m}) is not a state label")
            success[g - 1] += joint[g - 1, k, m]
    totals = joint.reshape(n, -1).sum(axis=1)
    if np.max(np.abs(totals - 1.0)) > RESIDUAL_TOL:
        raise ValueError("outcome probabilities do not sum to one")
    success = np.clip(success, 0.0, 1.0)
    params = None
    if _is_four_state_layout(e):
        params = tuple(x for x in (parametrize(alpha_sq[:, k]) for k in range(alpha_sq.shape[1])) if x)
    return EstimationResult(
        tuple(float(s) for s in success),
        float(success.mean()),
        params,
        tuple(tuple(float(x) for x in row) for row in joint.reshape(n, -1)),
    )


def _max_rule(weights: np.ndarray) -> int | None:
    """Index of the largest weight, ties to the lowest index; ``None`` if all vanish."""
    if weights.sum() < NORM_TOL:
        return None
    return int(np.flatnonzero(weights >= weights.max() - NORM_TOL)[0])


def max_rule_protocol(e: ProductEnsemble, alice: KrausSet, bob_basis: np.ndarray | None = None) -> OneWayProtocol:
    """Complete Alice's measurement with Bob's basis and the max-weight guess rule.

    For each ``(k, m)`` the guess is the state maximizing
    ``alpha_ik^2 |<b_m|psi_i>|^2``. Bob measures in the computational basis
    unless ``bob_basis`` is given.
    """
    if alice.dim_in != e.d_A:
        raise ValueError(f"dimension mismatch: Alice measurement on {alice.dim_in}, ensemble d_A = {e.d_A}")
    basis = np.eye(e.d_B, dtype=complex) if bob_basis is None else np.asarray(bob_basis, dtype=complex)
    alpha_sq = branch_weights(e, alice)
    q = _bob_probabilities(e, basis)
    strategies = []
    for k in range(alice.outcome_count):
        guesses = []
        for m in range(e.d_B):
            g = _max_rule(alpha_sq[:, k] * q[:, m])
            guesses.append(None if g is None else g + 1)
        strategies.append(BobStrategy(basis, tuple(guesses)))
    return OneWayProtocol(alice, tuple(strategies))


def chi_basis(angle: float = math.pi / 8):
    """The two vectors ``sin(a)|0> + cos(a)|1>`` and ``cos(a)|0> - sin(a)|1>``."""
    s, c = math.sin(angle), math.cos(angle)
    return ket(s, c), ket(c, -s)


def chi_basis_protocol() -> OneWayProtocol:
    """Projective protocol reaching the one-way optimum on :func:`four_state`.

    Outcome chi_1 announces state 2 or 3 according to Bob's |0> or |1>;
    outcome chi_2 announces state 1 or 4.
    """
    chi1, chi2 = chi_basis()
    return OneWayProtocol(
        KrausSet.projective([chi1, chi2]),
        (BobStrategy.computational(2, (2, 3)), BobStrategy.computational(2, (1, 4))),
    )


def projective_basis(angle: float) -> KrausSet:
    """Projective qubit measurement onto ``cos a|0> + sin a|1>`` and its orthogonal partner."""
    c, s = math.cos(angle), math.sin(angle)
    return KrausSet.projective([ket(c, s), ket(-s, c)])


def guess_probability_projective(e: ProductEnsemble, angle: float) -> EstimationResult:
    """Success of Alice's projective measurement at ``angle`` under the max rule.

    Bob measures in the computational basis. Requires a qubit on Alice's side.
    """
    if e.d_A != 2:
        raise ValueError("projective angle scan requires d_A == 2")
    return simulate_one_way(e, max_rule_protocol(e, projective_basis(angle)))


def analytic_p(epsilon: float, overlap: float) -> float:
    """(2 + eps + sqrt(1 - eps^2) * overlap) / 4."""
    if not -1.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon = {epsilon!r} outside [-1, 1]")
    if not -1.0 <= overlap <= 1.0:
        raise ValueError(f"overlap = {overlap!r} outside [-1, 1]")
    return (2.0 + epsilon + math.sqrt(1.0 - epsilon * epsilon) * overlap) / 4.0


def analytic_average(e: ProductEnsemble, alice: KrausSet) -> float:
    """Average success predicted by :func:`analytic_p` outcome by outcome.

    Valid for :func:`four_state`, where states 3 and 4 are the sum and
    difference of states 1 and 2 on Alice's side. Each outcome is weighted
    by ``gamma_k`` and fed its ``|epsilon_k|`` and ``|Re <w_1k|w_2k>|``.
    """
    phis = e.alice_matrix()
    total = 0.0
    for op in alice.operators:
        v1, v2 = op @ phis[0], op @ phis[1]
        a1, a2 = np.linalg.norm(v1), np.linalg.norm(v2)
        g = 0.5 * (a1 * a1 + a2 * a2)
        if g <= NORM_TOL:
            continue
        eps = abs(a1 * a1 - a2 * a2) / (2 * g)
        ov = 0.0 if min(a1, a2) <= NORM_TOL else abs(np.vdot(v1, v2).real) / (a1 * a2)
        total += g * analytic_p(min(eps, 1.0), min(ov, 1.0))
    return total


def helstrom_two_pure(q1: float, q2: float, overlap_mod: float) -> float:
    """Optimal success for telling two pure states apart with priors ``q1``, ``q2``."""
    if q1 < 0 or q2 < 0 or abs(q1 + q2 - 1.0) > NORM_TOL:
        raise ValueError(f"priors must be nonnegative and sum to one, got {q1!r}, {q2!r}")
    if not 0.0 <= overlap_mod <= 1.0:
        raise ValueError(f"overlap modulus {overlap_mod!r} outside [0, 1]")
    return 0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - 4.0 * q1 * q2 * overlap_mod**2)))


@dataclass(frozen=True)
class ProjectiveOptimum:
    best_angle: float
    result: EstimationResult
    maximizers: tuple[float, ...]


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    a, b = lo, hi
    c, d = b - _INV_PHI * (b - a), a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _canonical_angle(a: float) -> float:
    r = math.fmod(a, math.pi / 2)
    if r < 0:
        r += math.pi / 2
    if math.pi / 2 - r < 1e-6:
        r = 0.0
    return r


def optimize_projective(e: ProductEnsemble, grid_step: float = math.pi / 720,
                        tol: float = OPT_TOL) -> ProjectiveOptimum:
    """Best projective measurement for Alice over angles in [0, pi).

    A coarse grid locates candidate maxima, each of which is refined by
    golden-section search to ``tol`` in angle. Every refined maximum within
    ``tol`` of the best value is reported in ``maximizers`` (reduced modulo
    pi/2, sorted); ``best_angle`` is the smallest of them, which for the
    four-state ensemble lies in [0, pi/4].
    """
    n = int(round(math.pi / grid_step))
    grid = np.arange(n) * (math.pi / n)
    f = lambda a: guess_probability_projective(e, a).average_success  # noqa: E731
    vals = np.array([f(a) for a in grid])
    best_grid = vals.max()
    cands = [
        j for j in range(n)
        if vals[j] >= vals[j - 1] and vals[j] > vals[(j + 1) % n] - 1e-15 and vals[j] >= best_grid - 1e-4
    ]
    h = math.pi / n
    refined = []
    for j in cands:
        x, fx = _golden_max(f, grid[j] - h, grid[j] + h, tol)
        if fx <= vals[j]:
            x, fx = grid[j], vals[j]
        refined.append((x, fx))
    best_val = max(v for _, v in refined)
    maxima = []
    for x, v in refined:
        if v >= best_val - tol:
            c = _canonical_angle(x)
            if all(min(abs(c - m), math.pi / 2 - abs(c - m)) > 1e-6 for m in maxima):
                maxima.append(c)
    maxima.sort()
    best = maxima[0]
    return ProjectiveOptimum(best, guess_probability_projective(e, best), tuple(maxima))


def _povm_objective_factory(e: ProductEnsemble, K: int, bob_basis: np.ndarray):
    d, n = e.d_A, len(e)
    phis_t = e.alice_matrix().T.copy()
    q = _bob_probabilities(e, bob_basis)
    half = K * d * d

    def unpack(x):
        return (x[:half] + 1j * x[half:]).reshape(K, d, d)

    def value(x):
        # alpha_ik^2 = ||M_k S^(-1/2) phi_i||^2 with S = sum_k M_k^dagger M_k
        a = (x[:half] + 1j * x[half:]).reshape(K * d, d)
        vals, vecs = np.linalg.eigh(a.conj().T @ a)
        if vals[0] < 1e-12:
            return 0.0
        v = a @ ((vecs / np.sqrt(vals)) @ (vecs.conj().T @ phis_t))
        a2 = (v.real**2 + v.imag**2).reshape(K, d, n).sum(axis=1)
        return float((a2[:, :, None] * q[None]).max(axis=1).sum() / n)

    return unpack, value


def optimize_povm(e: ProductEnsemble, K: int, iterations: int = 60, seed: int = 0,
                  restarts: int = 1, bob_basis: np.ndarray | None = None,
                  simplex_iterations: int = 300) -> tuple[KrausSet, EstimationResult]:
    """Gradient-free search over K-outcome measurements for Alice.

    Each restart draws random complex Kraus operators, then sweeps over the
    outcomes, refining one operator at a time with Nelder-Mead on its real
    and imaginary parts while the others stay fixed. Completeness is restored
    at every evaluation by the inverse square root of the frame operator.
    Sweeps stop after ``iterations`` passes or when a pass gains less than
    1e-12. Bob measures in ``bob_basis`` (computational by default) and
    guesses by the max rule; the returned result is recomputed through
    :func:`simulate_one_way`.
    """
    if K < 2:
        raise ValueError("outcome budget K must be at least 2")
    basis = np.eye(e.d_B, dtype=complex) if bob_basis is None else np.asarray(bob_basis, dtype=complex)
    unpack, value = _povm_objective_factory(e, K, basis)
    rng = np.random.default_rng(seed)
    d2 = e.d_A * e.d_A
    half = K * d2
    opts = {"maxiter": simplex_iterations, "xatol": 1e-10, "fatol": 1e-14, "adaptive": True}
    best_x, best_v = None, -np.inf
    for _ in range(restarts):
        x = rng.standard_normal(2 * half)
        cur = value(x)
        for _sweep in range(iterations):
            start = cur
            for k in range(K):
                idx = np.r_[k * d2:(k + 1) * d2, half + k * d2:half + (k + 1) * d2]

                def block(y, idx=idx):
                    z = x.copy()
                    z[idx] = y
                    return -value(z)

                res = minimize(block, x[idx], method="Nelder-Mead", options=opts)
                if -res.fun > cur:
                    x[idx] = res.x
                    cur = -res.fun
            if cur - start < 1e-12:
                break
        if cur > best_v:
            best_x, best_v = x.copy(), cur
    kraus = KrausSet(normalize_kraus(unpack(best_x)))
    return kraus, simulate_one_way(e, max_rule_protocol(e, kraus, basis))


def protocol_to_dict(p: OneWayProtocol) -> dict:
    pair = lambda z: [float(z.real), float(z.imag)]  # noqa: E731
    return {
        "format": PROTOCOL_FORMAT,
        "version": 1,
        "alice": [[[pair(z) for z in row] for row in op] for op in p.alice.operators],
        "bob": [
            {"basis": [[pair(z) for z in row] for row in s.basis], "guesses": list(s.guesses)}
            for s in p.bob
        ],
    }


def _complex_array(raw, where: str) -> np.ndarray:
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        raise ValueError(f"{where}: expected nested [re, im] pairs") from None
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise ValueError(f"{where}: expected nested [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def protocol_from_dict(doc: dict) -> OneWayProtocol:
    if not isinstance(doc, dict) or doc.get("format") != PROTOCOL_FORMAT:
        raise ValueError(f"not a {PROTOCOL_FORMAT} document")
    alice = KrausSet(_complex_array(doc.get("alice"), "alice"))
    bob = []
    for k, s in enumerate(doc.get("bob") or []):
        guesses = tuple(None if g is None else int(g) for g in s.get("guesses", []))
        bob.append(BobStrategy(_complex_array(s.get("basis"), f"bob[{k}].basis"), guesses))
    return OneWayProtocol(alice, tuple(bob))
