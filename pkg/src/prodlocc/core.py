"""Finite-dimensional linear algebra and measurement primitives.

Everything here works on small dense complex arrays (local dimensions 2-8).
Values are immutable after construction: arrays are copied and marked
read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Tolerances shared by every module.
NORM_TOL = 1e-12
RESIDUAL_TOL = 1e-10
OPT_TOL = 1e-9
ZERO_BRANCH = 1e-12
MAX_DIM = 8


def _frozen(a, dtype=complex) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Ket:
    """Complex amplitude vector over a local basis.

    Parameters
    ----------
    amps : array_like
        Amplitudes in the computational basis.
    normalized : bool
        When true (default) the squared amplitudes must sum to one within
        ``NORM_TOL``. Branch vectors that are not unit length pass
        ``normalized=False``.
    """

    amps: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amps = _frozen(self.amps).reshape(-1)
        if amps.size < 1 or amps.size > MAX_DIM:
            raise ValueError(f"ket dimension must be in [1, {MAX_DIM}], got {amps.size}")
        object.__setattr__(self, "amps", amps)
        if self.normalized:
            norm2 = float(np.vdot(amps, amps).real)
            if abs(norm2 - 1.0) > NORM_TOL:
                raise ValueError(f"ket is not normalized: |psi|^2 = {norm2!r}")

    @property
    def dim(self) -> int:
        return self.amps.size

    def __eq__(self, other):
        if not isinstance(other, Ket):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.amps, other.amps)

    def __hash__(self):
        return hash(self.amps.tobytes())

    def __repr__(self):
        return f"Ket({np.array2string(self.amps, precision=6)})"


def ket(*amps, normalize: bool = False) -> Ket:
    """Build a ket from amplitudes, optionally rescaling to unit norm."""
    a = np.asarray(amps[0] if len(amps) == 1 and np.ndim(amps[0]) == 1 else amps, dtype=complex)
    if normalize:
        n = np.linalg.norm(a)
        if n < NORM_TOL:
            raise ValueError("cannot normalize the zero vector")
        a = a / n
    return Ket(a)


def basis_ket(dim: int, index: int) -> Ket:
    if not 0 <= index < dim:
        raise IndexError(f"basis index {index} out of range for dimension {dim}")
    a = np.zeros(dim, dtype=complex)
    a[index] = 1.0
    return Ket(a)


def inner_product(a: Ket, b: Ket) -> complex:
    """Return <a|b>, conjugating the first argument."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return complex(np.vdot(a.amps, b.amps))


@dataclass(frozen=True, eq=False)
class HermitianOp:
    """Self-adjoint operator stored as a dense matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > NORM_TOL:
            raise ValueError("matrix is not Hermitian")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expectation(self, x: Ket, y: Ket | None = None) -> complex:
        """<x|E|y>, with ``y`` defaulting to ``x``."""
        y = x if y is None else y
        return complex(np.vdot(x.amps, self.matrix @ y.amps))


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Measurement on one local system, given by Kraus operators M_k.

    ``operators`` has shape ``(K, d, d)``; completeness
    ``sum_k M_k^dagger M_k = 1`` is checked in operator norm.
    """

    operators: np.ndarray

    def __post_init__(self):
        ops = _frozen(self.operators)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2] or ops.shape[0] < 1:
            raise ValueError(f"Kraus operators must have shape (K, d, d), got {ops.shape}")
        object.__setattr__(self, "operators", ops)
        res = completeness_residual(ops)
        if res > RESIDUAL_TOL:
            raise ValueError(f"Kraus set is not complete: residual {res:.3e}")

    @property
    def dim_in(self) -> int:
        return self.operators.shape[1]

    @property
    def outcome_count(self) -> int:
        return self.operators.shape[0]

    @classmethod
    def projective(cls, basis: Sequence[Ket]) -> "KrausSet":
        """Rank-one projective measurement onto an orthonormal basis."""
        return cls(np.stack([np.outer(b.amps, b.amps.conj()) for b in basis]))


def completeness_residual(ops: np.ndarray) -> float:
    d = ops.shape[1]
    s = np.einsum("kji,kjl->il", ops.conj(), ops)
    return float(np.linalg.norm(s - np.eye(d), 2))


@dataclass(frozen=True)
class BranchDecomposition:
    """One term alpha * |w> of the expansion of M_k|phi_i>.

    ``branch`` is ``None`` when the amplitude is below ``ZERO_BRANCH``.
    """

    state_index: int
    outcome_index: int
    amplitude: float
    branch: Ket | None

    def overlap(self, other: "BranchDecomposition") -> complex:
        """<w_self|w_other>, zero when either branch vanishes."""
        if self.branch is None or other.branch is None:
            return 0.0j
        return inner_product(self.branch, other.branch)


def apply_kraus(m: KrausSet, k: int, s: Ket, state_index: int = 0) -> BranchDecomposition:
    """Split ``M_k|s>`` into a nonnegative amplitude and a unit branch state."""
    if not 0 <= k < m.outcome_count:
        raise IndexError(f"outcome {k} out of range for {m.outcome_count} outcomes")
    if s.dim != m.dim_in:
        raise ValueError(f"dimension mismatch: ket {s.dim}, Kraus set {m.dim_in}")
    v = m.operators[k] @ s.amps
    alpha = float(np.linalg.norm(v))
    if alpha <= ZERO_BRANCH:
        return BranchDecomposition(state_index, k, 0.0, None)
    w = v / alpha
    # renormalize once more so the unit-norm check holds at NORM_TOL
    w = w / np.linalg.norm(w)
    return BranchDecomposition(state_index, k, alpha, Ket(w))


def branches(m: KrausSet, s: Ket, state_index: int = 0) -> list[BranchDecomposition]:
    return [apply_kraus(m, k, s, state_index) for k in range(m.outcome_count)]


@dataclass(frozen=True, eq=False)
class Povm:
    """Positive operators E_k summing to the identity."""

    elements: tuple[HermitianOp, ...]

    def __post_init__(self):
        elems = tuple(self.elements)
        if not elems:
            raise ValueError("a POVM needs at least one element")
        d = elems[0].dim
        if any(e.dim != d for e in elems):
            raise ValueError("POVM elements have inconsistent dimensions")
        for k, e in enumerate(elems):
            lo = float(np.linalg.eigvalsh(e.matrix).min())
            if lo < -RESIDUAL_TOL:
                raise ValueError(f"POVM element {k} is not positive (min eigenvalue {lo:.3e})")
        total = sum(e.matrix for e in elems)
        res = float(np.linalg.norm(total - np.eye(d), 2))
        if res > RESIDUAL_TOL:
            raise ValueError(f"POVM elements do not sum to identity: residual {res:.3e}")
        object.__setattr__(self, "elements", elems)

    @property
    def dim(self) -> int:
        return self.elements[0].dim

    def probability(self, k: int, s: Ket) -> float:
        return float(self.elements[k].expectation(s).real)


def _hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def povm_from_kraus(m: KrausSet) -> Povm:
    """E_k = M_k^dagger M_k."""
    return Povm(tuple(HermitianOp(_hermitize(op.conj().T @ op)) for op in m.operators))


def inverse_sqrt(s: np.ndarray) -> np.ndarray:
    """Inverse square root of a positive definite Hermitian matrix."""
    vals, vecs = np.linalg.eigh(_hermitize(s))
    return (vecs / np.sqrt(vals)) @ vecs.conj().T


def normalize_kraus(ops: np.ndarray) -> np.ndarray:
    """Right-multiply every operator by (sum_k M_k^dagger M_k)^(-1/2)."""
    s = np.einsum("kji,kjl->il", ops.conj(), ops)
    return ops @ inverse_sqrt(s)


def random_kraus_set(seed: int, dim: int, K: int) -> KrausSet:
    """Random complete Kraus set, deterministic in ``seed``.

    Draws ``K`` complex Gaussian matrices and restores completeness by
    right-multiplying with the inverse square root of their frame operator.
    Near-singular draws are redrawn from a sub-seeded stream.
    """
    if dim < 1 or K < 1:
        raise ValueError("dim and K must be positive")
    for sub in range(100):
        rng = np.random.default_rng([seed, sub])
        ops = rng.standard_normal((K, dim, dim)) + 1j * rng.standard_normal((K, dim, dim))
        s = np.einsum("kji,kjl->il", ops.conj(), ops)
        if np.linalg.eigvalsh(s).min() > 1e-12:
            return KrausSet(normalize_kraus(ops))
    raise RuntimeError(f"no nonsingular Kraus draw for seed {seed} after 100 attempts")


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_ket(rng: np.random.Generator, dim: int) -> Ket:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return ket(v, normalize=True)


def psd_sqrt(e: np.ndarray) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix."""
    vals, vecs = np.linalg.eigh(_hermitize(e))
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def hermitian_basis(dim: int) -> np.ndarray:
    """Trace-orthonormal basis of Hermitian dim x dim matrices.

    Ordering: the ``dim`` diagonal units, then for each ``a < b`` the
    symmetric and antisymmetric off-diagonal pair. Shape ``(dim**2, dim, dim)``.
    """
    out = []
    for a in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[a, a] = 1.0
        out.append(e)
    r = 1.0 / np.sqrt(2.0)
    for a in range(dim):
        for b in range(a + 1, dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[a, b] = e[b, a] = r
            out.append(e)
            e = np.zeros((dim, dim), dtype=complex)
            e[a, b] = -1j * r
            e[b, a] = 1j * r
            out.append(e)
    return np.array(out)


def hermitian_nullspace(
    constraints: Sequence[tuple[Ket, Ket]], dim: int, rtol: float = RESIDUAL_TOL
) -> list[HermitianOp]:
    """Hermitian operators annihilated by every functional E -> <x|E|y>.

    Each complex functional contributes its real and imaginary parts as two
    real equations on the ``dim**2`` real coordinates of E. Singular values
    below ``rtol`` times the largest one span the null space. The returned
    operators are orthonormal under the trace inner product.
    """
    basis = hermitian_basis(dim)
    if not constraints:
        return [HermitianOp(b) for b in basis]
    rows = []
    for x, y in constraints:
        if x.dim != dim or y.dim != dim:
            raise ValueError(f"constraint kets must have dimension {dim}")
        vals = np.einsum("a,nab,b->n", x.amps.conj(), basis, y.amps)
        rows.append(vals.real)
        rows.append(vals.imag)
    a = np.array(rows)
    _, s, vh = np.linalg.svd(a)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rtol * smax)) if smax > 0 else 0
    null = vh[rank:]
    return [HermitianOp(_hermitize(np.tensordot(v, basis, axes=1))) for v in null]
