"""Unitary ensembles: Haar, uniform Clifford, brick-wall circuits, explicit lists.

Random draws are addressed by ``(seed, index)``: :func:`stream` derives an
independent Philox generator for every draw, so results do not depend on the
order or the process in which draws are made.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .clifford import DEFAULT_MAX_QUBITS, clifford_group, random_clifford_matrix
from .qcore import VALIDATION_TOL, Unitary, ValidationError, max_abs


def stream(seed: int, index: int) -> np.random.Generator:
    """Generator for draw ``index`` of the run seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def _ginibre(shape, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def haar_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(_ginibre((d, d), rng))
    diag = np.diagonal(r)
    # without this phase fix the distribution is not Haar
    return q * (diag / np.abs(diag))


def haar_matrices(count: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Stack of ``count`` independent Haar unitaries, shape (count, d, d)."""
    q, r = np.linalg.qr(_ginibre((count, d, d), rng))
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]


def haar_sample(d: int, rng: np.random.Generator) -> Unitary:
    if d < 1:
        raise ValueError("dimension must be positive")
    return Unitary(haar_matrix(d, rng), f"haar(d={d})")


def haar_state_sample(d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random unit vector; same law as ``U|0>`` for Haar ``U``."""
    if d < 1:
        raise ValueError("dimension must be positive")
    v = _ginibre(d, rng)
    return v / np.linalg.norm(v)


def clifford_sample(n_qubits: int, rng: np.random.Generator,
                    max_qubits: int = DEFAULT_MAX_QUBITS) -> Unitary:
    return Unitary(random_clifford_matrix(n_qubits, rng, max_qubits), f"clifford(n={n_qubits})")


def apply_two_qubit_gate(gate: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    """(gate on qubits q, q+1) @ u, for a 2^n x m matrix ``u``."""
    m = u.shape[1]
    t = u.reshape((2 ** q, 4, 2 ** (n - q - 2), m))
    return np.einsum("ab,ibjm->iajm", gate, t).reshape(2 ** n, m)


def brickwork_matrix(n_qubits: int, depth: int, rng: np.random.Generator,
                     max_qubits: int = 10) -> np.ndarray:
    """Product of ``depth`` alternating layers of Haar two-qubit gates on a line.

    Layer 0 acts on pairs (0,1), (2,3), ...; layer 1 on (1,2), (3,4), ...
    """
    if n_qubits < 2 or depth < 0:
        raise ValueError("brickwork needs n_qubits >= 2 and depth >= 0")
    if n_qubits > max_qubits:
        raise ValueError(f"dense brickwork capped at {max_qubits} qubits; got {n_qubits}")
    d = 2 ** n_qubits
    u = np.eye(d, dtype=complex)
    for layer in range(depth):
        for q in range(layer % 2, n_qubits - 1, 2):
            u = apply_two_qubit_gate(haar_matrix(4, rng), u, q, n_qubits)
    return u


def brickwork_sample(n_qubits: int, depth: int, rng: np.random.Generator) -> Unitary:
    return Unitary(brickwork_matrix(n_qubits, depth, rng), f"brickwork(n={n_qubits}, depth={depth})")


def _qubits_of(d: int) -> int:
    n = int(round(math.log2(d))) if d > 0 else -1
    if n < 1 or 2 ** n != d:
        raise ValidationError(f"qubit ensembles need d = 2^n, got d={d}")
    return n


@dataclass(frozen=True, eq=False)
class UnitaryEnsemble:
    """A distribution over d x d unitaries.

    ``kind`` is one of ``haar``, ``clifford``, ``brickwork`` or ``explicit``.
    ``epsilon_certificate`` holds (lower, upper) bounds on the t=2 design
    error when known.
    """

    kind: str
    dimension: int
    n_qubits: Optional[int] = None
    depth: Optional[int] = None
    elements: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    epsilon_certificate: Optional[Tuple[float, float]] = None
    max_qubits: int = DEFAULT_MAX_QUBITS
    name: str = ""

    @classmethod
    def haar(cls, d: int) -> "UnitaryEnsemble":
        return cls("haar", d, epsilon_certificate=(0.0, 0.0), name="haar")

    @classmethod
    def clifford(cls, n_qubits: int, max_qubits: int = DEFAULT_MAX_QUBITS) -> "UnitaryEnsemble":
        if n_qubits > max_qubits:
            raise ValidationError(f"Clifford ensemble capped at {max_qubits} qubits; got {n_qubits}")
        # the Clifford group is an exact unitary 2-design
        return cls("clifford", 2 ** n_qubits, n_qubits=n_qubits, epsilon_certificate=(0.0, 0.0),
                   max_qubits=max_qubits, name="clifford")

    @classmethod
    def brickwork(cls, n_qubits: int, depth: int) -> "UnitaryEnsemble":
        if n_qubits < 2 or depth < 0:
            raise ValidationError("brickwork needs n_qubits >= 2 and depth >= 0")
        return cls("brickwork", 2 ** n_qubits, n_qubits=n_qubits, depth=depth, name="brickwork")

    @classmethod
    def explicit(cls, unitaries: Sequence[np.ndarray], weights: Optional[Sequence[float]] = None,
                 name: str = "explicit", epsilon_certificate=None,
                 tol: float = VALIDATION_TOL) -> "UnitaryEnsemble":
        els = np.array([np.asarray(u, dtype=complex) for u in unitaries])
        if els.ndim != 3 or els.shape[1] != els.shape[2] or len(els) == 0:
            raise ValidationError("explicit ensemble needs a nonempty list of square matrices")
        d = els.shape[1]
        for i, u in enumerate(els):
            err = max_abs(u.conj().T @ u - np.eye(d))
            if err > tol:
                raise ValidationError(f"element {i} not unitary: max |U^dag U - I| = {err:.3e}")
        if weights is None:
            w = np.full(len(els), 1.0 / len(els))
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != (len(els),):
                raise ValidationError(f"{w.size} weights for {len(els)} unitaries")
            if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
                raise ValidationError(f"weights must be nonnegative and sum to 1 (sum {w.sum():.15g})")
        els.setflags(write=False)
        w.setflags(write=False)
        n = None
        if d >= 2 and 2 ** int(round(math.log2(d))) == d:
            n = int(round(math.log2(d)))
        return cls("explicit", d, n_qubits=n, elements=els, weights=w,
                   epsilon_certificate=epsilon_certificate, name=name)

    @classmethod
    def clifford_group(cls, n_qubits: int) -> "UnitaryEnsemble":
        """Uniform distribution over the enumerated n-qubit Clifford group (n <= 2)."""
        return cls.explicit(clifford_group(n_qubits), name="clifford-group")

    @classmethod
    def for_dimension(cls, kind: str, d: int, depth: int = 0,
                      max_qubits: int = DEFAULT_MAX_QUBITS) -> "UnitaryEnsemble":
        if kind == "haar":
            return cls.haar(d)
        if kind == "clifford":
            return cls.clifford(_qubits_of(d), max_qubits)
        if kind == "clifford-group":
            return cls.clifford_group(_qubits_of(d))
        if kind == "brickwork":
            return cls.brickwork(_qubits_of(d), depth)
        raise ValidationError(f"unknown ensemble kind {kind!r}")

    def describe(self) -> str:
        if self.kind == "brickwork":
            return f"brickwork(n={self.n_qubits},depth={self.depth})"
        if self.kind in ("clifford",):
            return f"clifford(n={self.n_qubits})"
        if self.kind == "explicit":
            return f"{self.name}(size={len(self.elements)})"
        return self.kind

    def sample_matrix(self, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "haar":
            return haar_matrix(self.dimension, rng)
        if self.kind == "clifford":
            return random_clifford_matrix(self.n_qubits, rng, self.max_qubits)
        if self.kind == "brickwork":
            return brickwork_matrix(self.n_qubits, self.depth, rng)
        if self.kind == "explicit":
            i = int(rng.choice(len(self.elements), p=self.weights))
            return self.elements[i]
        raise ValidationError(f"unknown ensemble kind {self.kind!r}")

    def sample_state(self, psi: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """U|psi> for one draw; Haar draws skip forming U."""
        if self.kind == "haar":
            return haar_state_sample(self.dimension, rng)
        return self.sample_matrix(rng) @ psi

    def sample(self, seed: int, index: int) -> Unitary:
        return Unitary(self.sample_matrix(stream(seed, index)), f"{self.describe()} seed={seed} index={index}")
