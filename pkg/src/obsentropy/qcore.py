"""Dense linear-algebra substrate and validated quantum types.

Matrices are plain ``numpy`` complex128 arrays. The wrapper types below
(:class:`DensityOperator`, :class:`Effect`, :class:`Povm`, :class:`Unitary`)
validate their invariants once at construction and are read-only afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Optional, Sequence, Tuple

import numpy as np

VALIDATION_TOL = 1e-9
SPECTRAL_TOL = 1e-8


class ValidationError(ValueError):
    """An input violates a documented invariant."""


class DimensionMismatch(ValidationError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def max_abs(a: np.ndarray) -> float:
    """Max-entry norm."""
    return float(np.max(np.abs(a))) if a.size else 0.0


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def hermiticity_error(a: np.ndarray) -> float:
    return max_abs(a - dagger(a))


def _require_square(a: np.ndarray, what: str) -> int:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{what} must be a square matrix, got shape {a.shape}")
    return a.shape[0]


def _check_dims(d1: int, d2: int, what: str = "operands") -> None:
    if d1 != d2:
        raise DimensionMismatch(f"dimension mismatch between {what}: {d1} != {d2}")


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A d x d positive semidefinite, unit-trace matrix.

    ``state`` is set for rank-one states built from a vector; operations that
    only need ``U|psi>`` use it to skip O(d^3) work.
    """

    matrix: np.ndarray
    state: Optional[np.ndarray] = None

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_pure_tagged(self) -> bool:
        return self.state is not None

    @classmethod
    def from_matrix(cls, matrix, tol: float = VALIDATION_TOL) -> "DensityOperator":
        m = np.asarray(matrix, dtype=complex)
        _require_square(m, "density operator")
        herr = hermiticity_error(m)
        if herr > tol:
            raise ValidationError(f"density operator not Hermitian: max |A - A^dag| = {herr:.3e}")
        m = (m + dagger(m)) / 2
        tr = np.trace(m).real
        if abs(tr - 1) > tol:
            raise ValidationError(f"density operator trace {tr:.12g} deviates from 1 by {abs(tr - 1):.3e}")
        lo = float(np.linalg.eigvalsh(m)[0])
        if lo < -tol:
            raise ValidationError(f"density operator has negative eigenvalue {lo:.3e}")
        return cls(_frozen(m))

    @classmethod
    def pure(cls, vector, tol: float = VALIDATION_TOL) -> "DensityOperator":
        v = np.asarray(vector, dtype=complex).ravel()
        nrm = np.linalg.norm(v)
        if abs(nrm - 1) > tol:
            raise ValidationError(f"state vector norm {nrm:.12g} deviates from 1 by {abs(nrm - 1):.3e}")
        return cls(_frozen(np.outer(v, v.conj())), _frozen(v))

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityOperator":
        return cls(_frozen(np.eye(d) / d))

    @classmethod
    def diagonal(cls, values: Sequence[float], tol: float = VALIDATION_TOL) -> "DensityOperator":
        return cls.from_matrix(np.diag(np.asarray(values, dtype=float)), tol)

    @classmethod
    def basis_state(cls, d: int, k: int = 0) -> "DensityOperator":
        v = np.zeros(d, dtype=complex)
        v[k] = 1
        return cls.pure(v)

    def purity(self) -> float:
        if self.state is not None:
            return 1.0
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        if self.state is not None:
            ev = np.zeros(self.dimension)
            ev[-1] = 1.0
            return ev
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True, eq=False)
class Effect:
    matrix: np.ndarray
    label: Hashable = None

    @property
    def volume(self) -> float:
        return float(np.trace(self.matrix).real)


class Povm:
    """Finite POVM with cached volumes, coarseness and projectivity flag.

    Build with :meth:`from_matrices` (validated) or one of the builtin
    families. Diagonal POVMs keep only their diagonal weights; the dense
    ``stack`` of shape (N, d, d) is materialized on first access.
    """

    def __init__(self, labels, volumes, is_pvm, stack=None, diag_weights=None):
        self._labels = tuple(labels)
        self.volumes = volumes
        self.is_pvm = bool(is_pvm)
        self._stack = stack
        self.diag_weights = diag_weights
        ref = stack if stack is not None else diag_weights
        self.n_outcomes, self.dimension = ref.shape[0], ref.shape[1]

    def __repr__(self) -> str:
        return (f"Povm(d={self.dimension}, n_outcomes={self.n_outcomes}, "
                f"kappa={self.kappa:.6g}, pvm={self.is_pvm})")

    @property
    def stack(self) -> np.ndarray:
        if self._stack is None:
            st = np.zeros((self.n_outcomes, self.dimension, self.dimension), dtype=complex)
            idx = np.arange(self.dimension)
            st[:, idx, idx] = self.diag_weights
            st.setflags(write=False)
            self._stack = st
        return self._stack

    @property
    def effects(self) -> Tuple[Effect, ...]:
        return tuple(Effect(self.stack[i], lab) for i, lab in enumerate(self._labels))

    @property
    def labels(self) -> list:
        return list(self._labels)

    @property
    def kappa(self) -> float:
        """min_x Tr[P_x] / d."""
        return float(self.volumes.min() / self.dimension)

    @classmethod
    def from_matrices(cls, matrices, labels: Optional[Sequence[Hashable]] = None,
                      tol: float = VALIDATION_TOL) -> "Povm":
        mats = [np.asarray(m, dtype=complex) for m in matrices]
        if not mats:
            raise ValidationError("POVM needs at least one effect")
        d = _require_square(mats[0], "effect 0")
        if labels is None:
            labels = list(range(len(mats)))
        if len(labels) != len(mats):
            raise ValidationError(f"{len(labels)} labels for {len(mats)} effects")
        if len(set(labels)) != len(labels):
            raise ValidationError("effect labels must be distinct")
        cleaned = []
        for i, m in enumerate(mats):
            _check_dims(_require_square(m, f"effect {i}"), d, f"effect {i} and effect 0")
            herr = hermiticity_error(m)
            if herr > tol:
                raise ValidationError(f"effect {labels[i]!r} not Hermitian: max |A - A^dag| = {herr:.3e}")
            m = (m + dagger(m)) / 2
            ev = np.linalg.eigvalsh(m)
            if ev[0] < -tol:
                raise ValidationError(f"effect {labels[i]!r} has eigenvalue {ev[0]:.3e} < 0")
            if ev[-1] > 1 + tol:
                raise ValidationError(f"effect {labels[i]!r} has eigenvalue {ev[-1]:.12g} > 1")
            vol = np.trace(m).real
            if vol <= tol:
                raise ValidationError(f"effect {labels[i]!r} has zero volume (trace {vol:.3e})")
            cleaned.append(m)
        stack = np.stack(cleaned)
        dev = max_abs(stack.sum(axis=0) - np.eye(d))
        if dev > tol:
            raise ValidationError(f"effects do not sum to identity: max deviation {dev:.3e}")
        return cls._build(stack, labels, tol)

    @classmethod
    def _build(cls, stack: np.ndarray, labels, tol: float = VALIDATION_TOL) -> "Povm":
        stack = np.array(stack, dtype=complex)
        d = stack.shape[1]
        if max_abs(stack * (1 - np.eye(d))) == 0.0:
            return cls._from_diagonal(np.einsum("xii->xi", stack).real, labels, tol)
        stack.setflags(write=False)
        volumes = np.trace(stack, axis1=1, axis2=2).real.copy()
        volumes.setflags(write=False)
        is_pvm = all(max_abs(p @ p - p) <= tol for p in stack)
        if is_pvm and stack.shape[0] <= 64:
            prods = np.einsum("xij,yjk->xyik", stack, stack)
            idx = np.arange(stack.shape[0])
            prods[idx, idx] -= stack
            is_pvm = max_abs(prods) <= tol
        # idempotents summing to identity are mutually orthogonal, so large
        # families skip the O(N^2 d^3) pairwise check
        return cls(labels, volumes, is_pvm, stack=stack)

    @classmethod
    def _from_diagonal(cls, weights: np.ndarray, labels, tol: float = VALIDATION_TOL) -> "Povm":
        w = np.array(weights, dtype=float)
        w.setflags(write=False)
        volumes = w.sum(axis=1)
        volumes.setflags(write=False)
        is_pvm = max_abs(w * w - w) <= tol
        if is_pvm:
            # sum over x != y of w_x[i] w_y[i], per diagonal entry
            cross = np.sum(w, axis=0) ** 2 - np.sum(w ** 2, axis=0)
            is_pvm = float(np.max(cross)) <= tol
        return cls(labels, volumes, is_pvm, diag_weights=w)

    # builtin families

    @classmethod
    def computational(cls, d: int) -> "Povm":
        return cls.rank_list([1] * d)

    @classmethod
    def rank_list(cls, ranks: Sequence[int]) -> "Povm":
        """Diagonal projectors onto consecutive blocks of the given ranks."""
        ranks = [int(r) for r in ranks]
        if any(r < 1 for r in ranks):
            raise ValidationError(f"ranks must be positive, got {ranks}")
        d = sum(ranks)
        w = np.zeros((len(ranks), d))
        start = 0
        for i, r in enumerate(ranks):
            w[i, start:start + r] = 1
            start += r
        return cls._from_diagonal(w, list(range(len(ranks))))

    @classmethod
    def balanced(cls, d: int, k: int) -> "Povm":
        """k diagonal projectors with ranks as equal as possible."""
        if not 1 <= k <= d:
            raise ValidationError(f"balanced family needs 1 <= k <= d, got k={k}, d={d}")
        q, r = divmod(d, k)
        return cls.rank_list([q + 1] * r + [q] * (k - r))

    @classmethod
    def pm_basis(cls) -> "Povm":
        plus = np.array([1, 1]) / np.sqrt(2)
        minus = np.array([1, -1]) / np.sqrt(2)
        return cls.from_matrices([np.outer(plus, plus), np.outer(minus, minus)], ["+", "-"])


@dataclass(frozen=True, eq=False)
class Unitary:
    matrix: np.ndarray
    provenance: str = ""

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(cls, matrix, provenance: str = "", tol: float = VALIDATION_TOL) -> "Unitary":
        u = np.asarray(matrix, dtype=complex)
        d = _require_square(u, "unitary")
        err = max_abs(dagger(u) @ u - np.eye(d))
        if err > tol:
            raise ValidationError(f"matrix not unitary: max |U^dag U - I| = {err:.3e}")
        return cls(_frozen(u), provenance)

    @classmethod
    def identity(cls, d: int) -> "Unitary":
        return cls(_frozen(np.eye(d)), "identity")


def outcome_distribution(rho: DensityOperator, povm: Povm, tol: float = VALIDATION_TOL) -> np.ndarray:
    """p_x = Tr[P_x rho], range-checked then clamped to [0, 1]."""
    _check_dims(rho.dimension, povm.dimension, "state and POVM")
    if rho.state is not None:
        raw = probabilities_pure(rho.state, povm)
    else:
        raw = probabilities_mixed(rho.matrix, povm)
    return _clamp_probabilities(raw, tol)


def probabilities_pure(psi: np.ndarray, povm: Povm) -> np.ndarray:
    if povm.diag_weights is not None:
        return povm.diag_weights @ (np.abs(psi) ** 2)
    return np.einsum("i,xij,j->x", psi.conj(), povm.stack, psi).real


def probabilities_mixed(rho: np.ndarray, povm: Povm) -> np.ndarray:
    if povm.diag_weights is not None:
        return povm.diag_weights @ np.diagonal(rho).real
    return np.einsum("xij,ji->x", povm.stack, rho).real


def _clamp_probabilities(raw: np.ndarray, tol: float) -> np.ndarray:
    lo, hi = raw.min(), raw.max()
    if lo < -tol or hi > 1 + tol:
        raise ValidationError(f"outcome probability out of range: min {lo:.3e}, max {hi:.12g}")
    s = raw.sum()
    if abs(s - 1) > tol:
        raise ValidationError(f"outcome probabilities sum to {s:.12g}")
    return np.clip(raw, 0.0, 1.0)


def conjugate(u: Unitary, rho: DensityOperator) -> DensityOperator:
    """U rho U^dag; pure-tagged inputs only form U|psi>."""
    _check_dims(u.dimension, rho.dimension, "unitary and state")
    U = u.matrix
    if rho.state is not None:
        v = U @ rho.state
        return DensityOperator(_frozen(np.outer(v, v.conj())), _frozen(v))
    m = U @ rho.matrix @ dagger(U)
    return DensityOperator(_frozen((m + dagger(m)) / 2))


def heisenberg_povm(u: Unitary, povm: Povm) -> Povm:
    """{U^dag P_x U}."""
    _check_dims(u.dimension, povm.dimension, "unitary and POVM")
    U = u.matrix
    stack = dagger(U) @ povm.stack @ U
    stack = (stack + np.conj(np.swapaxes(stack, 1, 2))) / 2
    return Povm._build(stack, povm.labels)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns
    cluster_values: np.ndarray  # one representative eigenvalue per projection
    projections: Tuple[np.ndarray, ...]

    def reconstruct(self) -> np.ndarray:
        return sum(lam * q for lam, q in zip(self.cluster_values, self.projections))


def spectral_decomposition(a, cluster_tol: float = SPECTRAL_TOL,
                           tol: float = VALIDATION_TOL) -> SpectralDecomposition:
    """Eigen-decomposition with near-degenerate eigenvalues merged into one projection.

    Consecutive (sorted) eigenvalues whose gap is at most ``cluster_tol`` share a
    spectral projection.
    """
    a = np.asarray(a, dtype=complex)
    _require_square(a, "matrix")
    herr = hermiticity_error(a)
    if herr > tol:
        raise ValidationError(f"matrix not Hermitian: max |A - A^dag| = {herr:.3e}")
    w, v = np.linalg.eigh((a + dagger(a)) / 2)
    w, v = w[::-1], v[:, ::-1]
    groups = [[0]]
    for k in range(1, len(w)):
        if w[groups[-1][-1]] - w[k] <= cluster_tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    projections, values = [], []
    for g in groups:
        vg = v[:, g]
        projections.append(vg @ dagger(vg))
        values.append(float(np.mean(w[g])))
    return SpectralDecomposition(w, v, np.array(values), tuple(projections))


def von_neumann_nats(eigenvalues: np.ndarray) -> float:
    lam = np.asarray(eigenvalues, dtype=float)
    lam = lam[lam > 1e-15]
    return float(-np.sum(lam * np.log(lam)))
