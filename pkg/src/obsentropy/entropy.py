"""Entropy and divergence functionals, plus coarseness diagnostics.

Everything is computed in nats; :class:`EntropyValue` converts to bits on
request. Probabilities below ``ZERO_CUTOFF`` are treated as exact zeros.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .qcore import (
    VALIDATION_TOL,
    DensityOperator,
    Povm,
    ValidationError,
    outcome_distribution,
    von_neumann_nats,
)

ZERO_CUTOFF = 1e-15
LN2 = math.log(2.0)


class LogBase(str, enum.Enum):
    NAT = "nat"
    TWO = "two"

    @classmethod
    def parse(cls, value) -> "LogBase":
        if isinstance(value, LogBase):
            return value
        aliases = {"nat": cls.NAT, "natural": cls.NAT, "e": cls.NAT, "ln": cls.NAT,
                   "two": cls.TWO, "2": cls.TWO, "bits": cls.TWO, "bit": cls.TWO}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown log base {value!r}") from None

    def from_nats(self, x: float) -> float:
        return x / LN2 if self is LogBase.TWO else x

    def log(self, x: float) -> float:
        return math.log2(x) if self is LogBase.TWO else math.log(x)


@dataclass(frozen=True)
class EntropyValue:
    nats: float
    base: LogBase = LogBase.NAT
    context: str = ""

    def __post_init__(self):
        if self.nats < -1e-12:
            raise ValidationError(f"negative entropy {self.nats:.3e} for {self.context}")

    @property
    def value(self) -> float:
        return self.base.from_nats(self.nats)

    @property
    def bits(self) -> float:
        return self.nats / LN2

    def to(self, base) -> "EntropyValue":
        return EntropyValue(self.nats, LogBase.parse(base), self.context)

    def __float__(self) -> float:
        return self.value


def _check_distribution(p: np.ndarray, name: str) -> None:
    if np.any(p < -VALIDATION_TOL):
        raise ValidationError(f"{name} has negative entry {p.min():.3e}")
    s = p.sum()
    if abs(s - 1) > VALIDATION_TOL:
        raise ValidationError(f"{name} sums to {s:.12g}, not 1")


def _kl_terms(p: np.ndarray, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValidationError(f"distribution shapes differ: {p.shape} vs {q.shape}")
    _check_distribution(p, "p")
    bad = (p > 1e-12) & (q <= 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ValidationError(f"support violation at outcome {i}: p={p[i]:.3e} but q={q[i]:.3e}")
    return p, q


def kl_nats(p: np.ndarray, q: np.ndarray) -> float:
    """Unchecked KL divergence in nats (0 log 0 = 0)."""
    mask = p > ZERO_CUTOFF
    pm = p[mask]
    return float(np.sum(pm * np.log(pm / q[mask])))


def kl_divergence(p, q, base=LogBase.NAT) -> EntropyValue:
    p, q = _kl_terms(p, q)
    return EntropyValue(max(kl_nats(p, q), 0.0), LogBase.parse(base), "D_KL(p||q)")


def chi_squared_upper_bound(p, q) -> float:
    """sum_x (p_x - q_x)^2 / q_x, which dominates D_KL(p||q) in nats."""
    p, q = _kl_terms(p, q)
    mask = q > 0
    return float(np.sum((p[mask] - q[mask]) ** 2 / q[mask]))


def von_neumann_entropy(rho: DensityOperator, base=LogBase.NAT) -> EntropyValue:
    s = 0.0 if rho.state is not None else von_neumann_nats(rho.eigenvalues())
    return EntropyValue(max(s, 0.0), LogBase.parse(base), "S(rho)")


def oe_from_probabilities(p: np.ndarray, volumes: np.ndarray) -> float:
    """-sum_x p_x log(p_x / V_x) in nats, no checks."""
    mask = p > ZERO_CUTOFF
    pm = p[mask]
    return float(-np.sum(pm * np.log(pm / volumes[mask])))


def observational_entropy(rho: DensityOperator, povm: Povm, base=LogBase.NAT,
                          tol: float = VALIDATION_TOL) -> EntropyValue:
    """Observational entropy of ``rho`` seen through ``povm``.

    Evaluated twice, as the direct sum and as ``log d - D(P(rho)||P(u))``;
    the two must agree to ``tol``.
    """
    p = outcome_distribution(rho, povm, tol)
    d = povm.dimension
    direct = oe_from_probabilities(p, povm.volumes)
    via_kl = math.log(d) - kl_nats(p, povm.volumes / d)
    if abs(direct - via_kl) > tol:
        raise ArithmeticError(
            f"OE evaluations disagree: direct {direct!r} vs log d - D {via_kl!r}")
    return EntropyValue(max(direct, 0.0), LogBase.parse(base), "S_P(rho)")


@dataclass(frozen=True)
class CoarsenessReport:
    kappa: float
    n_outcomes: int
    min_volume: float
    sqrt_d: float
    vn_ratio: float  # N(P) / (d kappa)
    vn_satisfied: bool  # min volume > sqrt(d)
    dimension: float


def coarseness_from_counts(d: float, min_volume: float, n_outcomes: int) -> CoarsenessReport:
    """Coarseness numbers from scalar data; works for d far beyond dense range."""
    if d <= 0 or min_volume <= 0 or n_outcomes < 1:
        raise ValidationError("d, min_volume and n_outcomes must be positive")
    kappa = min_volume / d
    if n_outcomes * kappa > 1 + 1e-9:
        raise ValidationError(f"N(P) kappa = {n_outcomes * kappa:.6g} exceeds 1")
    sqrt_d = math.sqrt(d)
    return CoarsenessReport(kappa, int(n_outcomes), min_volume, sqrt_d,
                            n_outcomes / min_volume, min_volume > sqrt_d, d)


def coarseness_report(povm: Povm) -> CoarsenessReport:
    return coarseness_from_counts(float(povm.dimension), float(povm.volumes.min()), povm.n_outcomes)


def asymptotic_coarseness_check(kappa_values: Sequence[Tuple[float, float]], tau: float,
                                M: float, d0: float) -> List[Optional[bool]]:
    """Per point, whether kappa(d) >= M d^(-1/2 + tau); ``None`` where d <= d0."""
    if tau <= 0 or M <= 0:
        raise ValidationError(f"tau and M must be positive, got tau={tau}, M={M}")
    out: List[Optional[bool]] = []
    for d, kappa in kappa_values:
        if d <= d0:
            out.append(None)
        else:
            out.append(bool(kappa >= M * d ** (-0.5 + tau)))
    return out
