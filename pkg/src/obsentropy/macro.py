"""Coarse-graining channel and macroscopic-state analysis.

A state is macroscopic for a POVM when it is a fixed point of the
coarse-graining map ``rho -> sum_x Tr[P_x rho] P_x / V_x``. Such states are
nonnegative combinations of the projections of a PVM obtained by merging
outcomes of the POVM; :func:`macrostate_decomposition` recovers that PVM.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.csgraph import connected_components

from .entropy import observational_entropy
from .qcore import (
    SPECTRAL_TOL,
    VALIDATION_TOL,
    DensityOperator,
    Povm,
    Unitary,
    ValidationError,
    _check_dims,
    _frozen,
    conjugate,
    max_abs,
    outcome_distribution,
    spectral_decomposition,
)

EDGE_TOL = 1e-8


class NotMacroscopic(ValueError):
    def __init__(self, residual: float, tol: float):
        super().__init__(f"NotMacroscopic, residual={residual:.6e} (tol {tol:.1e})")
        self.residual = residual


class ProjectionCheckFailed(ArithmeticError):
    pass


class NoDeterministicAssignment(ValueError):
    pass


@dataclass(frozen=True)
class MacroDecomposition:
    partition: Tuple[Tuple[Hashable, ...], ...]
    pvm: Povm
    coefficients: np.ndarray
    residual: float

    def reconstruct(self) -> np.ndarray:
        return np.einsum("y,yij->ij", self.coefficients, self.pvm.stack)


@dataclass(frozen=True)
class PostProcessingWitness:
    assignment: Dict[Hashable, Hashable]
    deterministic: bool = True


def coarse_grain(rho: DensityOperator, povm: Povm) -> DensityOperator:
    """sum_x Tr[P_x rho] P_x / V_x."""
    _check_dims(rho.dimension, povm.dimension, "state and POVM")
    p = outcome_distribution(rho, povm)
    w = p / povm.volumes
    if povm.diag_weights is not None:
        m = np.diag(w @ povm.diag_weights).astype(complex)
    else:
        m = np.einsum("x,xij->ij", w, povm.stack)
        m = (m + m.conj().T) / 2
    return DensityOperator(_frozen(m))


def macro_residual(rho: DensityOperator, povm: Povm) -> float:
    return max_abs(rho.matrix - coarse_grain(rho, povm).matrix)


def is_macroscopic(rho: DensityOperator, povm: Povm, tol: float = SPECTRAL_TOL) -> Tuple[bool, float]:
    """Fixed-point test; returns (verdict, max-entry residual)."""
    r = macro_residual(rho, povm)
    return r <= tol, r


def commutes_with_all(m: DensityOperator, povm: Povm, tol: float = SPECTRAL_TOL) -> Tuple[bool, float]:
    _check_dims(m.dimension, povm.dimension, "state and POVM")
    M = m.matrix
    worst = 0.0
    for P in povm.stack:
        worst = max(worst, max_abs(M @ P - P @ M))
    return worst <= tol, worst


def _pvm_from_blocks(povm: Povm, blocks: Sequence[Sequence[int]], labels,
                     tol: float) -> Povm:
    stack = np.stack([povm.stack[list(b)].sum(axis=0) for b in blocks])
    for y, pi in enumerate(stack):
        err = max_abs(pi @ pi - pi)
        if err > tol:
            raise ProjectionCheckFailed(
                f"block {labels[y]!r} does not sum to a projection: max |Pi^2 - Pi| = {err:.3e}")
    pvm = Povm._build(stack, labels, tol)
    if not pvm.is_pvm:
        raise ProjectionCheckFailed("merged blocks are not mutually orthogonal")
    return pvm


def macrostate_decomposition(m: DensityOperator, povm: Povm,
                             tol: float = SPECTRAL_TOL,
                             cluster_tol: float = SPECTRAL_TOL) -> MacroDecomposition:
    """Write a macroscopic state as sum_y c_y Pi_y with Pi_y = sum_{x in X_y} P_x.

    Effects are pinched onto the spectral projections of ``m``; outcomes whose
    pinched effects overlap are joined, and the connected components form the
    finest admissible partition.
    """
    ok, res = is_macroscopic(m, povm, tol)
    if not ok:
        raise NotMacroscopic(res, tol)
    spec = spectral_decomposition(m.matrix, cluster_tol)
    Q = np.stack(spec.projections)
    pinched = np.einsum("kab,xbc,kcd->xad", Q, povm.stack, Q)
    n = povm.n_outcomes
    adj = np.zeros((n, n), dtype=bool)
    for x in range(n):
        prods = np.abs(np.einsum("ab,ybc->yac", pinched[x], pinched[x + 1:]))
        if prods.size:
            adj[x, x + 1:] = prods.reshape(prods.shape[0], -1).max(axis=1) > EDGE_TOL
    n_comp, comp = connected_components(adj, directed=False)
    # order blocks by their smallest outcome index
    first = {}
    for x, c in enumerate(comp):
        first.setdefault(c, len(first))
    blocks: List[List[int]] = [[] for _ in range(n_comp)]
    for x, c in enumerate(comp):
        blocks[first[c]].append(x)
    pvm = _pvm_from_blocks(povm, blocks, list(range(n_comp)), tol)
    coeffs = np.einsum("ij,yji->y", m.matrix, pvm.stack).real / pvm.volumes
    if np.any(coeffs < -tol):
        raise ProjectionCheckFailed(f"negative coefficient {coeffs.min():.3e}")
    coeffs = np.clip(coeffs, 0.0, None)
    recon = np.einsum("y,yij->ij", coeffs, pvm.stack)
    residual = max_abs(m.matrix - recon)
    if residual > tol:
        raise ProjectionCheckFailed(f"reconstruction residual {residual:.3e} exceeds {tol:.1e}")
    labels = povm.labels
    partition = tuple(tuple(labels[x] for x in b) for b in blocks)
    return MacroDecomposition(partition, pvm, coeffs, residual)


def pvm_postprocessing_witness(q: Povm, p: Povm, tol: float = VALIDATION_TOL,
                               support_tol: float = SPECTRAL_TOL) -> PostProcessingWitness:
    """Deterministic map x -> y with Q_y = sum_{x -> y} P_x, when one exists.

    Outcome x goes to the y whose projection contains the support of P_x.
    """
    if not q.is_pvm:
        raise ValidationError("target POVM must be projective")
    _check_dims(q.dimension, p.dimension, "the two POVMs")
    eye = np.eye(q.dimension)
    comps = [eye - Qy for Qy in q.stack]
    assignment: Dict[Hashable, Hashable] = {}
    for x, Px in enumerate(p.stack):
        hits = [y for y, C in enumerate(comps) if max_abs(C @ Px @ C) <= support_tol]
        if len(hits) != 1:
            raise NoDeterministicAssignment(
                f"outcome {p.labels[x]!r} fits inside {len(hits)} target projections")
        assignment[p.labels[x]] = q.labels[hits[0]]
    for y, Qy in enumerate(q.stack):
        members = [i for i, lab in enumerate(p.labels) if assignment[lab] == q.labels[y]]
        total = p.stack[members].sum(axis=0) if members else np.zeros_like(Qy)
        err = max_abs(total - Qy)
        if err > tol:
            raise NoDeterministicAssignment(
                f"target {q.labels[y]!r} differs from its merged effects by {err:.3e}")
    return PostProcessingWitness(assignment, True)


def macro_sample(povm: Povm, partition: Sequence[Sequence[Hashable]],
                 coefficients: Optional[Sequence[float]] = None,
                 rng: Optional[np.random.Generator] = None,
                 tol: float = SPECTRAL_TOL) -> DensityOperator:
    """sum_y c_y Pi_y for a partition of the outcome labels.

    Without explicit coefficients, block weights c_y Tr[Pi_y] are drawn from
    the flat Dirichlet distribution.
    """
    index = {lab: i for i, lab in enumerate(povm.labels)}
    seen = [index[lab] for block in partition for lab in block]
    if sorted(seen) != list(range(povm.n_outcomes)):
        raise ValidationError("partition must cover every outcome exactly once")
    blocks = [[index[lab] for lab in block] for block in partition]
    pvm = _pvm_from_blocks(povm, blocks, list(range(len(blocks))), tol)
    if coefficients is None:
        rng = rng if rng is not None else np.random.default_rng()
        weights = rng.dirichlet(np.ones(len(blocks)))
        c = weights / pvm.volumes
    else:
        c = np.asarray(coefficients, dtype=float)
        if c.shape != (len(blocks),) or np.any(c < 0):
            raise ValidationError("need one nonnegative coefficient per block")
        norm = float(c @ pvm.volumes)
        if abs(norm - 1) > VALIDATION_TOL:
            raise ValidationError(f"sum_y c_y Tr[Pi_y] = {norm:.12g}, not 1")
    m = np.einsum("y,yij->ij", c, pvm.stack)
    return DensityOperator(_frozen((m + m.conj().T) / 2))


@dataclass(frozen=True)
class MonotonicityTrial:
    s_before: float
    s_after: float
    strict_increase: bool
    after_macroscopic: bool


def oe_monotonicity_trial(m: DensityOperator, povm: Povm, u: Unitary,
                          tol: float = SPECTRAL_TOL, strict_gap: float = 1e-6) -> MonotonicityTrial:
    """OE before and after evolving a macroscopic state (nats)."""
    ok, res = is_macroscopic(m, povm, tol)
    if not ok:
        raise NotMacroscopic(res, tol)
    before = observational_entropy(m, povm).nats
    evolved = conjugate(u, m)
    after = observational_entropy(evolved, povm).nats
    after_macro, _ = is_macroscopic(evolved, povm, tol)
    return MonotonicityTrial(before, after, after - before > strict_gap, after_macro)
