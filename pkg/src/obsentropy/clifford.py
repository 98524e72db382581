"""Uniform Clifford sampling via symplectic matrices, expanded to dense unitaries.

Binary vectors use the interleaved layout ``(x_0, z_0, x_1, z_1, ...)``.
Row ``2q`` of a tableau is the image of ``X_q`` and row ``2q + 1`` the image of
``Z_q``; each row carries a sign bit. Qubit 0 is the most significant bit of
a computational basis index (Kronecker order).
"""

from __future__ import annotations

from functools import lru_cache
from typing import List, Tuple

import numpy as np

DEFAULT_MAX_QUBITS = 5


def symplectic_form(n: int) -> np.ndarray:
    return np.kron(np.eye(n, dtype=np.int64), np.array([[0, 1], [1, 0]], dtype=np.int64))


def is_symplectic(s: np.ndarray) -> bool:
    lam = symplectic_form(s.shape[0] // 2)
    return bool(np.array_equal((s @ lam @ s.T) % 2, lam))


def _inner(rows: np.ndarray, h: np.ndarray) -> np.ndarray:
    return (rows[..., 0::2] @ h[1::2] + rows[..., 1::2] @ h[0::2]) % 2


def _transvect(h: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Z_h(v) = v + <h, v> h, applied to a vector or to each row."""
    c = _inner(rows, h)
    return (rows + np.multiply.outer(c, h)) % 2


_PAIRS = [np.array(p) for p in ((1, 0), (0, 1), (1, 1))]


def _pair_inner(u, z) -> int:
    return int(u[0] * z[1] + u[1] * z[0]) % 2


def _transvection_pair(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(h1, h2) with y = Z_h2 Z_h1 x, for nonzero x, y."""
    zero = np.zeros_like(x)
    if np.array_equal(x, y):
        return zero, zero
    if _inner(x, y) == 1:
        return (x + y) % 2, zero
    n = x.size // 2
    z = np.zeros_like(x)
    xp = [x[2 * j:2 * j + 2] for j in range(n)]
    yp = [y[2 * j:2 * j + 2] for j in range(n)]
    both = [j for j in range(n) if xp[j].any() and yp[j].any()]
    if both:
        j = both[0]
        for cand in _PAIRS:
            if _pair_inner(xp[j], cand) == 1 and _pair_inner(yp[j], cand) == 1:
                z[2 * j:2 * j + 2] = cand
                break
    else:
        j = next(k for k in range(n) if xp[k].any())
        k = next(k for k in range(n) if yp[k].any())
        z[2 * j:2 * j + 2] = next(c for c in _PAIRS if _pair_inner(xp[j], c) == 1)
        z[2 * k:2 * k + 2] = next(c for c in _PAIRS if _pair_inner(yp[k], c) == 1)
    return (x + z) % 2, (y + z) % 2


def random_symplectic(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random element of Sp(2n, F_2) (Koenig-Smolin construction)."""
    nn = 2 * n
    k = int(rng.integers(1, 2 ** nn))
    f1 = np.array([(k >> j) & 1 for j in range(nn)], dtype=np.int64)
    e1 = np.zeros(nn, dtype=np.int64)
    e1[0] = 1
    h1, h2 = _transvection_pair(e1, f1)
    bits = rng.integers(0, 2, size=nn - 1)
    eprime = e1.copy()
    eprime[2:] = bits[1:]
    h0 = _transvect(h2, _transvect(h1, eprime))
    if bits[0] == 1:
        f1 = np.zeros(nn, dtype=np.int64)
    g = np.eye(nn, dtype=np.int64)
    if n > 1:
        g[2:, 2:] = random_symplectic(n - 1, rng)
    for h in (h1, h2, h0, f1):
        g = _transvect(h, g)
    return g


def random_tableau(n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Symplectic matrix plus uniformly random sign bits: a uniform Clifford mod phase."""
    return random_symplectic(n, rng), rng.integers(0, 2, size=2 * n)


@lru_cache(maxsize=16)
def _parity_table(n: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    par = np.zeros(2 ** n, dtype=np.int64)
    for b in range(n):
        par ^= (idx >> b) & 1
    return par


def _row_to_pauli(row: np.ndarray, sign: int, n: int) -> Tuple[int, int, complex]:
    xm = zm = 0
    ny = 0
    for q in range(n):
        bit = 1 << (n - 1 - q)
        xq, zq = int(row[2 * q]), int(row[2 * q + 1])
        xm |= bit * xq
        zm |= bit * zq
        ny += xq & zq
    return xm, zm, (-1) ** int(sign) * 1j ** ny


def pauli_apply(pauli: Tuple[int, int, complex], v: np.ndarray, n: int) -> np.ndarray:
    """Apply a Hermitian Pauli (x-mask, z-mask, phase) to the rows of ``v``."""
    xm, zm, phase = pauli
    idx = np.arange(2 ** n)
    signs = phase * (1 - 2 * _parity_table(n)[idx & zm])
    out = np.empty_like(v)
    out[idx ^ xm] = signs.reshape((-1,) + (1,) * (v.ndim - 1)) * v
    return out


def pauli_matrix(row: np.ndarray, sign: int, n: int) -> np.ndarray:
    return pauli_apply(_row_to_pauli(row, sign, n), np.eye(2 ** n, dtype=complex), n)


def tableau_to_unitary(symp: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Dense unitary (up to global phase) realizing the tableau.

    ``U|0>`` is the common +1 eigenvector of the Z images; ``U|x>`` follows by
    applying the X images selected by the bits of x.
    """
    n = symp.shape[0] // 2
    d = 2 ** n
    paulis = [_row_to_pauli(symp[r], signs[r], n) for r in range(2 * n)]
    proj = np.eye(d, dtype=complex)
    for q in range(n):
        proj = (proj + pauli_apply(paulis[2 * q + 1], proj, n)) / 2
    norms = np.linalg.norm(proj, axis=0)
    v0 = proj[:, int(np.argmax(norms))]
    v0 = v0 / np.linalg.norm(v0)
    u = np.zeros((d, d), dtype=complex)
    u[:, 0] = v0
    filled = np.array([0])
    for q in range(n):
        m = 1 << (n - 1 - q)
        u[:, filled | m] = pauli_apply(paulis[2 * q], u[:, filled], n)
        filled = np.concatenate([filled, filled | m])
    return u


def random_clifford_matrix(n: int, rng: np.random.Generator,
                           max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    if n < 1:
        raise ValueError("need at least one qubit")
    if n > max_qubits:
        raise ValueError(f"dense Clifford expansion capped at {max_qubits} qubits "
                         f"(memory 16 * 4^n bytes); got n={n}")
    return tableau_to_unitary(*random_tableau(n, rng))


# exhaustive enumeration (small n)

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.diag([1, 1j])
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def phase_key(u: np.ndarray, decimals: int = 6) -> bytes:
    """Hashable fingerprint of a matrix modulo global phase."""
    flat = u.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-6))
    w = flat * (abs(flat[k]) / flat[k])
    return (np.round(np.concatenate([w.real, w.imag]), decimals) + 0.0).tobytes()


def _generators(n: int) -> List[np.ndarray]:
    eye = np.eye(2)
    if n == 1:
        return [H, S]
    if n == 2:
        return [np.kron(H, eye), np.kron(eye, H), np.kron(S, eye), np.kron(eye, S), CNOT]
    raise ValueError("exhaustive Clifford enumeration supports n <= 2")


@lru_cache(maxsize=2)
def clifford_group(n: int) -> Tuple[np.ndarray, ...]:
    """All n-qubit Cliffords modulo phase (24 for n=1, 11520 for n=2), by closure."""
    gens = _generators(n)
    start = np.eye(2 ** n, dtype=complex)
    seen = {phase_key(start): start}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                w = g @ u
                key = phase_key(w)
                if key not in seen:
                    seen[key] = w
                    nxt.append(w)
        frontier = nxt
    out = tuple(seen.values())
    for u in out:
        u.setflags(write=False)
    return out
