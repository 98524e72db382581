"""Second-moment operators of unitary ensembles and design-error bounds.

Superoperators on d^2 x d^2 matrices are stored as D^2 x D^2 matrices
(D = d^2) acting on row-major vectorizations: ``vec(X)[a*D + b] = X[a, b]``.
The two-fold Haar twirl is analytic (a combination of identity and swap).
The design error is never computed exactly; it is bracketed through the
trace norm of the Choi matrix of the difference map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Tuple

import numpy as np

from .ensembles import UnitaryEnsemble, stream
from .qcore import ValidationError

DEFAULT_SUPEROP_CAP = 4096  # d^4 limit, i.e. d <= 8


def swap_operator(d: int) -> np.ndarray:
    s = np.zeros((d * d, d * d))
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    s[(i * d + j).ravel(), (j * d + i).ravel()] = 1
    return s


def _twirl_coefficients(tr_x, tr_sx, d: int):
    den = d * (d * d - 1)
    return (d * tr_x - tr_sx) / den, (d * tr_sx - tr_x) / den


def haar_twirl2(X: np.ndarray, d: int = None) -> np.ndarray:
    """E_U[(U x U) X (U x U)^dag] for Haar U, in closed form a I + b S."""
    X = np.asarray(X)
    if d is None:
        d = int(round(math.sqrt(X.shape[0])))
    if d < 2:
        raise ValidationError("two-fold twirl needs d >= 2")
    if X.shape != (d * d, d * d):
        raise ValidationError(f"expected a {d * d}x{d * d} matrix, got {X.shape}")
    tr_x = np.trace(X)
    tr_sx = np.einsum("jiij->", X.reshape(d, d, d, d))
    a, b = _twirl_coefficients(tr_x, tr_sx, d)
    return a * np.eye(d * d) + b * swap_operator(d)


def haar_twirl2_superop(d: int) -> np.ndarray:
    """Matrix of the Haar two-fold twirl; real, shape (d^4, d^4)."""
    if d < 2:
        raise ValidationError("two-fold twirl needs d >= 2")
    vi = np.eye(d * d).ravel()
    vs = swap_operator(d).ravel()
    den = d * (d * d - 1)
    return (np.outer(vi, d * vi - vs) + np.outer(vs, d * vs - vi)) / den


def _doubled(elements: np.ndarray) -> np.ndarray:
    return np.einsum("nab,ncd->nacbd", elements, elements).reshape(
        len(elements), elements.shape[1] ** 2, elements.shape[1] ** 2)


def _require_explicit(ensemble: UnitaryEnsemble) -> None:
    if ensemble.kind != "explicit":
        raise ValidationError(f"exact moments need an explicit ensemble, got {ensemble.kind!r}")


def ensemble_moment2(ensemble: UnitaryEnsemble, X: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """sum_i p_i (U_i x U_i) X (U_i x U_i)^dag over an explicit ensemble."""
    _require_explicit(ensemble)
    X = np.asarray(X, dtype=complex)
    out = np.zeros_like(X)
    for s in range(0, len(ensemble.elements), chunk):
        V = _doubled(ensemble.elements[s:s + chunk])
        w = ensemble.weights[s:s + chunk]
        out += np.einsum("n,nab,nbc->ac", w, V @ X, V.conj().transpose(0, 2, 1))
    return out


def ensemble_moment2_empirical(ensemble: UnitaryEnsemble, X: np.ndarray, n_samples: int,
                               seed: int) -> Tuple[np.ndarray, float]:
    """Sample mean of (U x U) X (U x U)^dag and its largest entrywise standard error."""
    X = np.asarray(X, dtype=complex)
    acc = np.zeros_like(X)
    acc2 = np.zeros(X.shape)
    for i in range(n_samples):
        u = ensemble.sample_matrix(stream(seed, i))
        V = np.kron(u, u)
        Y = V @ X @ V.conj().T
        acc += Y
        acc2 += np.abs(Y) ** 2
    mean = acc / n_samples
    var = np.maximum(acc2 / n_samples - np.abs(mean) ** 2, 0.0)
    stderr = float(np.sqrt(var.max() / max(n_samples - 1, 1)))
    return mean, stderr


def ensemble_superop(ensemble: UnitaryEnsemble, chunk: int = 2048) -> np.ndarray:
    """Matrix of the two-fold moment operator of an explicit ensemble."""
    _require_explicit(ensemble)
    D = ensemble.dimension ** 2
    acc = np.zeros((D * D, D * D), dtype=complex)
    for s in range(0, len(ensemble.elements), chunk):
        V = _doubled(ensemble.elements[s:s + chunk]).reshape(-1, D * D)
        w = ensemble.weights[s:s + chunk]
        acc += (V * w[:, None]).T @ V.conj()
    # acc[(a,b),(c,d)] = sum p V_ab conj(V_cd); the superop wants [(a,c),(b,d)]
    return acc.reshape(D, D, D, D).transpose(0, 2, 1, 3).reshape(D * D, D * D)


def choi_matrix(superop: np.ndarray) -> np.ndarray:
    """sum_ij L(|i><j|) (x) |i><j| for a superop on D x D matrices."""
    D = int(round(math.sqrt(superop.shape[0])))
    return superop.reshape(D, D, D, D).transpose(0, 2, 1, 3).reshape(D * D, D * D)


def trace_norm_hermitian(a: np.ndarray) -> float:
    a = (a + a.conj().T) / 2
    return float(np.sum(np.abs(np.linalg.eigvalsh(a))))


@dataclass(frozen=True)
class DesignBounds:
    eps_lower: float
    eps_upper: float
    diamond_lower: float
    diamond_upper: float
    choi_trace_norm: float
    dimension: int


def bounds_from_difference(delta_superop: np.ndarray, d: int, t: int = 2) -> DesignBounds:
    """Bracket the design error of a difference of t-fold moment maps.

    For a Hermiticity-preserving map on D x D matrices,
    ||J||_1 / D <= ||.||_diamond <= ||J||_1; the design error rescales the
    diamond distance by d^(2t) / t!.
    """
    D = d ** t
    tn = trace_norm_hermitian(choi_matrix(delta_superop))
    scale = d ** (2 * t) / math.factorial(t)
    return DesignBounds(tn / D * scale, tn * scale, tn / D, tn, tn, d)


def design_epsilon_bounds(ensemble: UnitaryEnsemble, cap: int = DEFAULT_SUPEROP_CAP) -> DesignBounds:
    """(eps_lower, eps_upper) for an explicit ensemble viewed as a 2-design.

    Memory: the superoperator and its Choi matrix each take 16 d^8 bytes.
    """
    _require_explicit(ensemble)
    d = ensemble.dimension
    if d ** 4 > cap:
        raise ValidationError(f"d^4 = {d ** 4} exceeds the superoperator cap {cap}")
    if d < 2:
        raise ValidationError("design bounds need d >= 2")
    delta = ensemble_superop(ensemble) - haar_twirl2_superop(d)
    return bounds_from_difference(delta, d)


# brick-wall circuits: exact moment operator by composing local twirls

def _gate_axes(q: int, n: int) -> List[int]:
    return [q, q + 1, n + q, n + q + 1, 2 * n + q, 2 * n + q + 1, 3 * n + q, 3 * n + q + 1]


def _apply_local_twirl(M: np.ndarray, local: np.ndarray, q: int, n: int) -> np.ndarray:
    """Left-compose the two-qubit twirl on qubits (q, q+1) with superop ``M``."""
    cols = M.shape[1]
    t = M.reshape((2,) * (4 * n) + (cols,))
    axes = _gate_axes(q, n)
    out = np.tensordot(local.reshape((2,) * 16), t, axes=(list(range(8, 16)), axes))
    out = np.moveaxis(out, list(range(8)), axes)
    return np.ascontiguousarray(out).reshape(M.shape)


def brickwork_superops(n_qubits: int, depths: Iterable[int],
                       cap: int = DEFAULT_SUPEROP_CAP) -> Iterable[Tuple[int, np.ndarray]]:
    """Yield (depth, exact two-fold moment superop) for the brick-wall ensemble.

    Each gate is an independent Haar two-qubit unitary, so the circuit average
    factorizes into local Haar twirls composed layer by layer.
    """
    d = 2 ** n_qubits
    if d ** 4 > cap:
        raise ValidationError(f"d^4 = {d ** 4} exceeds the superoperator cap {cap}")
    depths = sorted(set(int(x) for x in depths))
    local = haar_twirl2_superop(4)
    M = np.eye(d ** 4)
    done = 0
    for target in depths:
        while done < target:
            for q in range(done % 2, n_qubits - 1, 2):
                M = _apply_local_twirl(M, local, q, n_qubits)
            done += 1
        yield target, M


def brickwork_epsilon_bounds(n_qubits: int, depths: Iterable[int],
                             cap: int = DEFAULT_SUPEROP_CAP) -> List[Tuple[int, DesignBounds]]:
    d = 2 ** n_qubits
    haar = haar_twirl2_superop(d)
    return [(depth, bounds_from_difference(M - haar, d))
            for depth, M in brickwork_superops(n_qubits, depths, cap)]
