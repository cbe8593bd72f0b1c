"""Bipartite product-state ensembles: constructors, validation and file I/O."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import NORM_TOL, RESIDUAL_TOL, Ket, basis_ket, inner_product, ket

FILE_FORMAT = "prodlocc-ensemble"
FILE_VERSION = 1

_R2 = 1.0 / math.sqrt(2.0)


class EnsembleError(ValueError):
    """Raised when an ensemble violates normalization or joint orthogonality."""


def canonical_phase(amps: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the first nonzero amplitude is real positive."""
    amps = np.asarray(amps, dtype=complex)
    nz = np.flatnonzero(np.abs(amps) > NORM_TOL)
    if nz.size == 0:
        return amps.copy()
    a = amps[nz[0]]
    if a.imag == 0.0 and a.real > 0.0:
        return amps.copy()
    out = amps * (abs(a) / a)
    out[nz[0]] = abs(a)
    return out


@dataclass(frozen=True)
class BipartiteProductState:
    """|Psi_label> = |alice> (x) |bob>."""

    label: int
    alice: Ket
    bob: Ket

    @classmethod
    def from_amplitudes(cls, label: int, alice, bob) -> "BipartiteProductState":
        parts = []
        for name, a in (("alice", alice), ("bob", bob)):
            a = canonical_phase(np.asarray(a, dtype=complex))
            n2 = float(np.vdot(a, a).real)
            if abs(n2 - 1.0) > NORM_TOL:
                raise EnsembleError(
                    f"state {label}: {name} part is not normalized (|v|^2 - 1 = {n2 - 1.0:.3e})"
                )
            parts.append(Ket(a))
        return cls(label, *parts)

    def part(self, party: str) -> Ket:
        return self.alice if party == "alice" else self.bob


@dataclass(frozen=True)
class ProductEnsemble:
    """Uniformly weighted list of mutually orthogonal product states.

    Construction validates local normalization, contiguous labels starting at
    one, and joint orthogonality ``<phi_i|phi_j><psi_i|psi_j> = 0`` for all
    ``i != j`` within ``RESIDUAL_TOL``.
    """

    states: tuple[BipartiteProductState, ...]
    name: str = "custom"

    def __post_init__(self):
        states = tuple(self.states)
        object.__setattr__(self, "states", states)
        if not states:
            raise EnsembleError("ensemble is empty")
        labels = [s.label for s in states]
        if labels != list(range(1, len(states) + 1)):
            raise EnsembleError(f"labels must be 1..{len(states)} in order, got {labels}")
        da, db = states[0].alice.dim, states[0].bob.dim
        for s in states:
            if s.alice.dim != da or s.bob.dim != db:
                raise EnsembleError(f"state {s.label}: local dimensions differ from state 1")
        i, j, res = self.max_orthogonality_residual()
        if res > RESIDUAL_TOL:
            raise EnsembleError(f"states ({i}, {j}) are not orthogonal: |<Psi_i|Psi_j>| = {res:.3e}")

    @property
    def d_A(self) -> int:
        return self.states[0].alice.dim

    @property
    def d_B(self) -> int:
        return self.states[0].bob.dim

    def __len__(self):
        return len(self.states)

    @property
    def priors(self) -> np.ndarray:
        return np.full(len(self.states), 1.0 / len(self.states))

    def state(self, label: int) -> BipartiteProductState:
        return self.states[label - 1]

    def alice_matrix(self) -> np.ndarray:
        """Alice parts stacked as rows, shape ``(n, d_A)``."""
        return np.array([s.alice.amps for s in self.states])

    def bob_matrix(self) -> np.ndarray:
        return np.array([s.bob.amps for s in self.states])

    def max_orthogonality_residual(self) -> tuple[int, int, float]:
        """Worst joint overlap ``(i, j, |<Psi_i|Psi_j>|)`` over pairs."""
        a, b = self.alice_matrix(), self.bob_matrix()
        g = np.abs((a.conj() @ a.T) * (b.conj() @ b.T))
        np.fill_diagonal(g, 0.0)
        if len(self.states) < 2:
            return 1, 1, 0.0
        i, j = np.unravel_index(np.argmax(g), g.shape)
        i, j = sorted((int(i) + 1, int(j) + 1))
        return i, j, float(g.max())

    def max_normalization_residual(self) -> float:
        return max(
            max(abs(np.vdot(s.alice.amps, s.alice.amps).real - 1.0),
                abs(np.vdot(s.bob.amps, s.bob.amps).real - 1.0))
            for s in self.states
        )

    def transformed(self, u_alice: np.ndarray, u_bob: np.ndarray) -> "ProductEnsemble":
        """Apply local unitaries to every state."""
        return ProductEnsemble(
            tuple(
                BipartiteProductState.from_amplitudes(
                    s.label, u_alice @ s.alice.amps, u_bob @ s.bob.amps
                )
                for s in self.states
            ),
            name=self.name,
        )

    def relabeled(self, order: Sequence[int]) -> "ProductEnsemble":
        """New ensemble whose state ``n`` is the old state ``order[n-1]``."""
        return ProductEnsemble(
            tuple(
                BipartiteProductState(n, self.state(old).alice, self.state(old).bob)
                for n, old in enumerate(order, start=1)
            ),
            name=self.name,
        )


def _build(name: str, rows) -> ProductEnsemble:
    return ProductEnsemble(
        tuple(BipartiteProductState.from_amplitudes(i, a, b) for i, (a, b) in enumerate(rows, 1)),
        name=name,
    )


def _check_open_angle(name: str, value: float) -> None:
    if not 0.0 < value < math.pi / 2:
        raise EnsembleError(f"{name} = {value!r} must lie strictly inside (0, pi/2)")


def four_state() -> ProductEnsemble:
    """Four product states that cannot be told apart with one-way LOCC."""
    return _build("four", [
        ([1, 0], [1, 0]),
        ([0, 1], [1, 0]),
        ([_R2, _R2], [0, 1]),
        ([_R2, -_R2], [0, 1]),
    ])


def four_state_general(theta: float) -> ProductEnsemble:
    """Four-state family with Alice's second pair rotated by ``theta``."""
    _check_open_angle("theta", theta)
    c, s = math.cos(theta), math.sin(theta)
    return _build(f"four-general:{theta!r}", [
        ([1, 0], [1, 0]),
        ([0, 1], [1, 0]),
        ([c, s], [0, 1]),
        ([s, -c], [0, 1]),
    ])


def nine_state() -> ProductEnsemble:
    """The 3x3 domino basis."""
    return _build("nine", [
        ([1, 0, 0], [_R2, _R2, 0]),
        ([1, 0, 0], [_R2, -_R2, 0]),
        ([0, 0, 1], [0, _R2, _R2]),
        ([0, 0, 1], [0, _R2, -_R2]),
        ([_R2, _R2, 0], [0, 0, 1]),
        ([_R2, -_R2, 0], [0, 0, 1]),
        ([0, _R2, _R2], [1, 0, 0]),
        ([0, _R2, -_R2], [1, 0, 0]),
        ([0, 1, 0], [0, 1, 0]),
    ])


def nine_state_general(eta: float, xi: float, theta: float, gamma: float) -> ProductEnsemble:
    """Domino family with four independent rotation angles.

    State 4's Bob part is ``sin(xi)|1> - cos(xi)|2>``, the unique unit vector
    orthogonal to state 3's Bob part inside span{|1>, |2>}. All angles must lie
    strictly inside (0, pi/2).
    """
    for n, v in (("eta", eta), ("xi", xi), ("theta", theta), ("gamma", gamma)):
        _check_open_angle(n, v)
    ce, se = math.cos(eta), math.sin(eta)
    cx, sx = math.cos(xi), math.sin(xi)
    ct, st = math.cos(theta), math.sin(theta)
    cg, sg = math.cos(gamma), math.sin(gamma)
    return _build(f"nine-general:{eta!r},{xi!r},{theta!r},{gamma!r}", [
        ([1, 0, 0], [ce, se, 0]),
        ([1, 0, 0], [se, -ce, 0]),
        ([0, 0, 1], [0, cx, sx]),
        ([0, 0, 1], [0, sx, -cx]),
        ([ct, st, 0], [0, 0, 1]),
        ([st, -ct, 0], [0, 0, 1]),
        ([0, cg, sg], [1, 0, 0]),
        ([0, sg, -cg], [1, 0, 0]),
        ([0, 1, 0], [0, 1, 0]),
    ])


def computational(dA: int, dB: int) -> ProductEnsemble:
    """All |a>|b> in lexicographic order; perfectly locally distinguishable."""
    if dA < 2 or dB < 2:
        raise EnsembleError("local dimensions must be at least 2")
    rows = [(basis_ket(dA, a).amps, basis_ket(dB, b).amps) for a in range(dA) for b in range(dB)]
    return _build(f"computational:{dA},{dB}", rows)


def _overlap_pairs(e: ProductEnsemble, party: str) -> list[tuple[int, int, complex]]:
    out = []
    for s, t in combinations(e.states, 2):
        ov = inner_product(s.part(party), t.part(party))
        if abs(ov) > NORM_TOL:
            out.append((s.label, t.label, ov))
    return out


def bob_overlap_pairs(e: ProductEnsemble) -> list[tuple[int, int, complex]]:
    """Pairs ``i < j`` whose Bob parts overlap, with ``<psi_i|psi_j>``.

    These are the pairs Alice must keep distinguishable when she acts first.
    """
    return _overlap_pairs(e, "bob")


def alice_overlap_pairs(e: ProductEnsemble) -> list[tuple[int, int, complex]]:
    """Mirror of :func:`bob_overlap_pairs` for Bob acting first."""
    return _overlap_pairs(e, "alice")


def _amps_to_json(amps: np.ndarray) -> list[list[float]]:
    return [[float(a.real), float(a.imag)] for a in amps]


def ensemble_to_dict(e: ProductEnsemble) -> dict:
    return {
        "format": FILE_FORMAT,
        "version": FILE_VERSION,
        "name": e.name,
        "d_A": e.d_A,
        "d_B": e.d_B,
        "states": [
            {"label": s.label, "alice": _amps_to_json(s.alice.amps), "bob": _amps_to_json(s.bob.amps)}
            for s in e.states
        ],
    }


def _parse_amps(raw, dim: int, where: str) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != dim:
        raise EnsembleError(f"{where}: expected {dim} amplitudes")
    out = np.empty(dim, dtype=complex)
    for n, pair in enumerate(raw):
        if (not isinstance(pair, list) or len(pair) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)):
            raise EnsembleError(f"{where}: amplitude {n} must be a [re, im] pair of numbers")
        out[n] = complex(pair[0], pair[1])
    return out


def ensemble_from_dict(doc: dict) -> ProductEnsemble:
    if not isinstance(doc, dict) or doc.get("format") != FILE_FORMAT:
        raise EnsembleError(f"not a {FILE_FORMAT} document")
    if doc.get("version") != FILE_VERSION:
        raise EnsembleError(f"unsupported version {doc.get('version')!r}")
    try:
        da, db, raw_states = int(doc["d_A"]), int(doc["d_B"]), doc["states"]
    except (KeyError, TypeError, ValueError) as exc:
        raise EnsembleError(f"malformed ensemble document: {exc}") from None
    if not isinstance(raw_states, list):
        raise EnsembleError("'states' must be a list")
    states = []
    for n, st in enumerate(raw_states, start=1):
        if not isinstance(st, dict) or "label" not in st:
            raise EnsembleError(f"state entry {n} is malformed")
        label = st["label"]
        alice = _parse_amps(st.get("alice"), da, f"state {label} alice")
        bob = _parse_amps(st.get("bob"), db, f"state {label} bob")
        states.append(BipartiteProductState.from_amplitudes(label, alice, bob))
    return ProductEnsemble(tuple(states), name=str(doc.get("name", "custom")))


def save_ensemble(e: ProductEnsemble, path) -> None:
    Path(path).write_text(json.dumps(ensemble_to_dict(e), indent=2) + "\n", encoding="utf-8")


def load_ensemble(path) -> ProductEnsemble:
    """Read an ensemble file, validating every invariant."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise EnsembleError(f"{path}: invalid JSON ({exc})") from None
    return ensemble_from_dict(doc)
