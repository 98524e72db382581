"""Tail bounds for observational entropy under random unitaries, and Monte Carlo checks.

Bound arithmetic happens in log space with the dimension given as ``log2_d``,
so parameters like d = 2^128 are handled exactly. The ``log d`` factor inside
the bounds is natural by default; :class:`LogBase.TWO` reproduces bit-valued
worked examples.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import binomtest

from .entropy import LogBase, asymptotic_coarseness_check, oe_from_probabilities, von_neumann_entropy
from .ensembles import UnitaryEnsemble, haar_matrices, stream
from .qcore import (
    DensityOperator,
    Povm,
    ValidationError,
    _check_dims,
    probabilities_mixed,
    probabilities_pure,
)

LEVY_CONSTANT = 1.0 / (18.0 * math.pi ** 3)
LN2 = math.log(2.0)
CONFIDENCE = 0.99


@dataclass(frozen=True)
class BoundParams:
    kappa: float
    log2_d: float
    delta: float
    epsilon: float = 0.0
    t: int = 2
    base: LogBase = LogBase.NAT
    constant: float = LEVY_CONSTANT

    def __post_init__(self):
        object.__setattr__(self, "base", LogBase.parse(self.base))
        if not 0 < self.kappa <= 1:
            raise ValidationError(f"kappa must lie in (0, 1], got {self.kappa}")
        if self.log2_d <= 0:
            raise ValidationError(f"need d > 1, got log2_d={self.log2_d}")
        if not 0 < self.delta < 1:
            raise ValidationError(f"delta must lie in (0, 1), got {self.delta}")
        if self.epsilon < 0:
            raise ValidationError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.t < 1:
            raise ValidationError(f"t must be at least 1, got {self.t}")
        if self.constant <= 0:
            raise ValidationError("constant must be positive")
        if self.min_volume_below_one:
            warnings.warn(f"kappa * d < 1 (log2 = {math.log2(self.kappa) + self.log2_d:.3g})", stacklevel=3)

    @property
    def min_volume_below_one(self) -> bool:
        return math.log2(self.kappa) + self.log2_d < 0

    def ln_d(self) -> float:
        return self.log2_d * LN2

    def log_d(self) -> float:
        """log d in the configured base."""
        return self.log2_d if self.base is LogBase.TWO else self.ln_d()


@dataclass(frozen=True)
class TailBound:
    ln_value: float  # natural log of the unclamped bound
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def raw(self) -> float:
        return math.exp(self.ln_value) if self.ln_value < 700 else math.inf

    @property
    def clamped(self) -> float:
        return min(1.0, self.raw)

    @property
    def log2_value(self) -> float:
        return self.ln_value / LN2


def haar_tail_bound(params: BoundParams) -> TailBound:
    """(4 / kappa) exp(-C delta kappa^2 d log d), evaluated in log space.

    ``extra`` carries log2 of the exponent and of the prefactor.
    """
    log2_exponent = (math.log2(params.constant) + math.log2(params.delta)
                     + 2 * math.log2(params.kappa) + params.log2_d + math.log2(params.log_d()))
    exponent = 2.0 ** log2_exponent if log2_exponent < 1000 else math.inf
    ln_pref = math.log(4.0) - math.log(params.kappa)
    return TailBound(ln_pref - exponent,
                     {"log2_exponent": log2_exponent, "log2_prefactor": ln_pref / LN2})


def design_tail_bound(params: BoundParams) -> TailBound:
    """((1 + eps) / kappa) (t^2 / (kappa^2 delta d log d))^(t/2), in log space."""
    t = params.t
    ln_inner = (2 * math.log(t) - 2 * math.log(params.kappa) - math.log(params.delta)
                - params.ln_d() - math.log(params.log_d()))
    ln_val = math.log1p(params.epsilon) - math.log(params.kappa) + 0.5 * t * ln_inner
    return TailBound(ln_val)


# non-increasing deviation bounds g(xi) for |Tr[U rho U^dag P] - Tr[u P]| >= xi

@dataclass(frozen=True)
class LevyG:
    """4 exp(-2 d xi^2 / (9 pi^3 eta^2)); eta is a Lipschitz constant."""
    log2_d: float
    eta: float = 2.0

    def log_g(self, xi: float) -> float:
        d = 2.0 ** self.log2_d
        return math.log(4.0) - 2 * d * xi * xi / (9 * math.pi ** 3 * self.eta ** 2)


@dataclass(frozen=True)
class MomentG:
    """Markov bound from the t-th moment: (1 + eps) (t^2 / d)^(t/2) / xi^t."""
    log2_d: float
    t: int = 2
    epsilon: float = 0.0

    def log_g(self, xi: float) -> float:
        t = self.t
        return (math.log1p(self.epsilon) + 0.5 * t * (2 * math.log(t) - self.log2_d * LN2)
                - t * math.log(xi))


@dataclass(frozen=True)
class ConstantG:
    value: float = 1.0

    def log_g(self, xi: float) -> float:
        return math.log(self.value)


@dataclass(frozen=True)
class CallableG:
    fn: Callable[[float], float]
    declared_nonincreasing: bool = False

    def log_g(self, xi: float) -> float:
        v = self.fn(xi)
        return math.log(v) if v > 0 else -math.inf


def generic_tail_from_g(kappa: float, log2_d: float, delta: float, g,
                        base=LogBase.NAT) -> TailBound:
    """(1 / kappa) g(kappa sqrt(delta log d))."""
    if not isinstance(g, (LevyG, MomentG, ConstantG, CallableG)):
        if callable(g):
            raise ValidationError("wrap user functions in CallableG(fn, declared_nonincreasing=True)")
        raise ValidationError(f"unsupported deviation bound {g!r}")
    if isinstance(g, CallableG) and not g.declared_nonincreasing:
        raise ValidationError("user-supplied g must be declared non-increasing")
    p = BoundParams(kappa, log2_d, delta, base=base)
    xi = kappa * math.sqrt(delta * p.log_d())
    return TailBound(-math.log(kappa) + g.log_g(xi))


def clopper_pearson(k: int, n: int, confidence: float = CONFIDENCE) -> Tuple[float, float]:
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=confidence, method="exact")
    return float(ci.low), float(ci.high)


# Monte Carlo

def _oe_chunk(args) -> np.ndarray:
    rho_matrix, psi, povm, ensemble, seed, start, stop = args
    out = np.empty(stop - start)
    for k, i in enumerate(range(start, stop)):
        rng = stream(seed, i)
        if psi is not None:
            p = probabilities_pure(ensemble.sample_state(psi, rng), povm)
        else:
            u = ensemble.sample_matrix(rng)
            p = probabilities_mixed(u @ rho_matrix @ u.conj().T, povm)
        out[k] = oe_from_probabilities(p, povm.volumes)
    return out


def sample_oe_values(rho: DensityOperator, povm: Povm, ensemble: UnitaryEnsemble,
                     n_samples: int, seed: int, workers: int = 1) -> np.ndarray:
    """S_P(U rho U^dag) in nats for draws 0..n_samples-1 of ``(seed, index)``."""
    _check_dims(rho.dimension, povm.dimension, "state and POVM")
    _check_dims(ensemble.dimension, povm.dimension, "ensemble and POVM")
    if n_samples < 1:
        raise ValidationError("n_samples must be at least 1")
    psi = None if rho.state is None else np.asarray(rho.state)
    workers = max(1, int(workers))
    if workers == 1:
        return _oe_chunk((rho.matrix, psi, povm, ensemble, seed, 0, n_samples))
    size = max(1, math.ceil(n_samples / (4 * workers)))
    jobs = [(rho.matrix, psi, povm, ensemble, seed, s, min(s + size, n_samples))
            for s in range(0, n_samples, size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_oe_chunk, jobs))
    return np.concatenate(parts)


@dataclass
class TailExperimentResult:
    ensemble: str
    d: int
    n_qubits: Optional[int]
    depth: Optional[int]
    delta: float
    kappa: float
    n_samples: int
    n_hits: int
    estimate: float
    ci_low: float
    ci_high: float
    haar_bound_raw: float
    haar_bound_clamped: float
    design_bound_raw: float
    design_bound_clamped: float
    eps_lower: float
    eps_upper: float
    log_base: str
    seed: int
    wall_time_ms: float
    oe_min: float = math.nan
    oe_max: float = math.nan

    CSV_COLUMNS = ("ensemble", "d", "n_qubits", "depth", "delta", "kappa", "n_samples", "n_hits",
                   "estimate", "ci_low", "ci_high", "haar_bound_raw", "haar_bound_clamped",
                   "design_bound_raw", "design_bound_clamped", "eps_lower", "eps_upper",
                   "log_base", "seed", "wall_time_ms")

    def governing_bound(self) -> Optional[float]:
        """Raw bound the experiment is held to (Haar for Haar runs, else design)."""
        b = self.haar_bound_raw if self.ensemble == "haar" else self.design_bound_raw
        return None if math.isnan(b) else b

    def sound(self, bound_scale: float = 1.0) -> bool:
        b = self.governing_bound()
        if b is None:
            return True
        return self.ci_high <= min(1.0, bound_scale * b)

    def csv_row(self) -> List[str]:
        row = asdict(self)
        return ["" if row[c] is None else repr(row[c]) if isinstance(row[c], float) else str(row[c])
                for c in self.CSV_COLUMNS]


def _bounds_for(kappa: float, d: int, delta: float, base: LogBase, eps_upper: float):
    if delta >= 1:
        # the event needs S_P <= 0; no bound is tabulated
        return None, None
    log2_d = math.log2(d)
    p = BoundParams(kappa, log2_d, delta, epsilon=0.0 if math.isnan(eps_upper) else eps_upper, base=base)
    hb = haar_tail_bound(p)
    if math.isnan(eps_upper):
        return hb, None
    return hb, design_tail_bound(p)


def tail_result(values: np.ndarray, d: int, kappa: float, delta: float,
                ensemble: UnitaryEnsemble, base, seed: int, wall_ms: float) -> TailExperimentResult:
    """Summarize sampled OE values (nats) for one delta."""
    base = LogBase.parse(base)
    n = int(values.size)
    # same base on both sides, so the comparison can be made in nats
    hits = int(np.count_nonzero(values <= (1 - delta) * math.log(d)))
    lo, hi = clopper_pearson(hits, n)
    eps = ensemble.epsilon_certificate
    eps_lo, eps_hi = (math.nan, math.nan) if eps is None else (float(eps[0]), float(eps[1]))
    hb, db = _bounds_for(kappa, d, delta, base, eps_hi)
    return TailExperimentResult(
        ensemble=ensemble.kind if ensemble.kind != "explicit" else ensemble.name,
        d=d, n_qubits=ensemble.n_qubits, depth=ensemble.depth, delta=float(delta), kappa=float(kappa),
        n_samples=n, n_hits=hits, estimate=hits / n, ci_low=lo, ci_high=hi,
        haar_bound_raw=math.nan if hb is None else hb.raw,
        haar_bound_clamped=math.nan if hb is None else hb.clamped,
        design_bound_raw=math.nan if db is None else db.raw,
        design_bound_clamped=math.nan if db is None else db.clamped,
        eps_lower=eps_lo, eps_upper=eps_hi, log_base=base.value, seed=int(seed),
        wall_time_ms=wall_ms, oe_min=float(values.min()), oe_max=float(values.max()))


def empirical_tail(rho: DensityOperator, povm: Povm, ensemble: UnitaryEnsemble, delta: float,
                   n_samples: int, seed: int, base=LogBase.NAT, workers: int = 1) -> TailExperimentResult:
    """Estimate P{S_P(U rho U^dag) <= (1 - delta) log d} with a 99% exact interval."""
    if delta <= 0:
        raise ValidationError("delta must be positive")
    t0 = time.perf_counter()
    values = sample_oe_values(rho, povm, ensemble, n_samples, seed, workers)
    wall = (time.perf_counter() - t0) * 1e3
    return tail_result(values, povm.dimension, povm.kappa, delta, ensemble, base, seed, wall)


# supporting checks: Lipschitz constant and t-th moments

@dataclass(frozen=True)
class LipschitzResult:
    max_ratio: float
    purity_bound: float  # 2 sqrt(Tr rho^2)
    n_pairs: int
    n_skipped: int


def _expectations(us: np.ndarray, rho: DensityOperator, P: np.ndarray) -> np.ndarray:
    """Tr[U rho U^dag P] for a stack of unitaries."""
    if rho.state is not None:
        phi = us @ rho.state
        return np.einsum("ni,ij,nj->n", phi.conj(), P, phi).real
    sig = us @ rho.matrix @ us.conj().transpose(0, 2, 1)
    return np.einsum("nij,ji->n", sig, P).real


def lipschitz_check(rho: DensityOperator, P: np.ndarray, n_pairs: int, seed: int,
                    local_scale: Optional[float] = None, chunk: int = 1000) -> LipschitzResult:
    """Largest |f(U1) - f(U2)| / ||U1 - U2||_F over random pairs, f(U) = Tr[U rho U^dag P].

    Pairs are independent Haar draws, or, with ``local_scale``, a Haar draw and
    a nearby unitary ``U1 exp(i s H)`` to probe the local slope.
    """
    P = np.asarray(P, dtype=complex)
    d = rho.dimension
    _check_dims(d, P.shape[0], "state and effect")
    rng = np.random.default_rng(seed)
    best, skipped, done = 0.0, 0, 0
    while done < n_pairs:
        m = min(chunk, n_pairs - done)
        u1 = haar_matrices(m, d, rng)
        if local_scale is None:
            u2 = haar_matrices(m, d, rng)
        else:
            g = rng.standard_normal((m, d, d)) + 1j * rng.standard_normal((m, d, d))
            h = (g + g.conj().transpose(0, 2, 1)) / 2
            w, v = np.linalg.eigh(h)
            step = np.einsum("nij,nj,nkj->nik", v, np.exp(1j * local_scale * w), v.conj())
            u2 = u1 @ step
        dist = np.linalg.norm(u1 - u2, axis=(1, 2))
        keep = dist > 1e-12
        skipped += int(np.count_nonzero(~keep))
        diff = np.abs(_expectations(u1, rho, P) - _expectations(u2, rho, P))
        if np.any(keep):
            best = max(best, float(np.max(diff[keep] / dist[keep])))
        done += m
    return LipschitzResult(best, 2 * math.sqrt(rho.purity()), n_pairs, skipped)


@dataclass(frozen=True)
class MomentResult:
    value: float
    stderr: float  # zero for exact evaluation
    bound: float  # (1 + eps) (t^2 / d)^(t/2)
    exact: bool


def moment_check(ensemble: UnitaryEnsemble, rho: DensityOperator, P: np.ndarray, t: int,
                 n_samples: Optional[int] = None, seed: int = 0, exact: bool = False) -> MomentResult:
    """E|Tr[U rho U^dag P] - Tr[u P]|^t, exactly (explicit ensembles) or by sampling."""
    if t < 1:
        raise ValidationError("t must be at least 1")
    P = np.asarray(P, dtype=complex)
    d = rho.dimension
    _check_dims(d, ensemble.dimension, "state and ensemble")
    centre = float(np.trace(P).real) / d
    eps = 0.0 if ensemble.epsilon_certificate is None else float(ensemble.epsilon_certificate[1])
    bound = (1 + eps) * (t * t / d) ** (t / 2)
    if exact:
        if ensemble.kind != "explicit":
            raise ValidationError("exact moments need an explicit ensemble")
        dev = np.abs(_expectations(ensemble.elements, rho, P) - centre) ** t
        return MomentResult(float(ensemble.weights @ dev), 0.0, bound, True)
    if not n_samples:
        raise ValidationError("sampled moments need n_samples")
    if ensemble.kind == "haar":
        rng = np.random.default_rng(seed)
        vals = np.concatenate([
            np.abs(_expectations(haar_matrices(min(2000, n_samples - s), d, rng), rho, P) - centre) ** t
            for s in range(0, n_samples, 2000)])
    else:
        vals = np.array([
            abs(float(_expectations(ensemble.sample_matrix(stream(seed, i))[None], rho, P)[0]) - centre) ** t
            for i in range(n_samples)])
    return MomentResult(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples)), bound, False)


# sweeps

def povm_family(rule: str, d: int) -> Povm:
    """Builtin POVM families: ``balanced:k``, ``computational``, ``ranks:r1,r2,...``."""
    name, _, arg = rule.partition(":")
    if name == "balanced":
        return Povm.balanced(d, int(arg or 2))
    if name == "computational":
        return Povm.computational(d)
    if name == "ranks":
        ranks = [int(r) for r in arg.split(",")]
        if sum(ranks) != d:
            raise ValidationError(f"rank list {ranks} does not sum to d={d}")
        return Povm.rank_list(ranks)
    if name == "pm-basis":
        if d != 2:
            raise ValidationError("pm-basis exists only for d=2")
        return Povm.pm_basis()
    raise ValidationError(f"unknown POVM family {rule!r}")


def state_family(rule: str, d: int) -> DensityOperator:
    """Builtin states: ``pure0``, ``uniform``, ``plus``, ``rank:r``, ``diag:v1,v2,...``."""
    name, _, arg = rule.partition(":")
    if name == "pure0":
        return DensityOperator.basis_state(d, 0)
    if name == "uniform":
        return DensityOperator.maximally_mixed(d)
    if name == "plus":
        return DensityOperator.pure(np.ones(d) / math.sqrt(d))
    if name == "rank":
        r = int(arg)
        if not 1 <= r <= d:
            raise ValidationError(f"rank {r} out of range for d={d}")
        return DensityOperator.diagonal([1.0 / r] * r + [0.0] * (d - r))
    if name == "diag":
        vals = [float(v) for v in arg.split(",")]
        if len(vals) != d:
            raise ValidationError(f"diagonal has {len(vals)} entries, expected d={d}")
        return DensityOperator.diagonal(vals)
    raise ValidationError(f"unknown state {rule!r}")


@dataclass
class SweepSpec:
    dims: Sequence[int] = (8, 16, 32, 64)
    ensembles: Sequence[str] = ("haar",)
    deltas: Sequence[float] = (0.1, 0.3)
    povm: str = "balanced:2"
    state: str = "pure0"
    samples: int = 10_000
    seed: int = 0
    base: str = "nat"
    workers: int = 1
    depth: int = 4
    clifford_max_qubits: int = 6
    tau: float = 0.25
    M: float = 1.0
    d0: int = 1
    tolerance: float = 1e-9


@dataclass
class SweepResult:
    rows: List[TailExperimentResult]
    coarseness: List[Dict[str, object]]


def point_seed(master: int, d: int, kind: str) -> int:
    key = [ord(c) for c in kind]
    return int(np.random.SeedSequence(int(master), spawn_key=(int(d), *key)).generate_state(1, np.uint32)[0])


def ensemble_for(kind: str, d: int, spec: SweepSpec) -> UnitaryEnsemble:
    ens = UnitaryEnsemble.for_dimension(kind, d, spec.depth, spec.clifford_max_qubits)
    if ens.kind == "explicit" or ens.kind == "brickwork":
        from .moments import DEFAULT_SUPEROP_CAP, brickwork_epsilon_bounds, design_epsilon_bounds
        if d ** 4 <= DEFAULT_SUPEROP_CAP:
            if ens.kind == "explicit":
                b = design_epsilon_bounds(ens)
            else:
                b = brickwork_epsilon_bounds(ens.n_qubits, [ens.depth])[0][1]
            ens = UnitaryEnsemble(**{**ens.__dict__, "epsilon_certificate": (b.eps_lower, b.eps_upper)})
    return ens


def concentration_sweep(spec: SweepSpec) -> SweepResult:
    """One tail estimate per (d, ensemble, delta); draws are shared across deltas."""
    rows: List[TailExperimentResult] = []
    kappas = []
    for d in spec.dims:
        povm = povm_family(spec.povm, d)
        rho = state_family(spec.state, d)
        kappas.append((d, povm.kappa))
        s_rho = von_neumann_entropy(rho).nats
        for kind in spec.ensembles:
            ens = ensemble_for(kind, d, spec)
            seed = point_seed(spec.seed, d, kind)
            t0 = time.perf_counter()
            values = sample_oe_values(rho, povm, ens, spec.samples, seed, spec.workers)
            wall = (time.perf_counter() - t0) * 1e3
            tol = spec.tolerance
            if values.min() < s_rho - tol or values.max() > math.log(d) + tol:
                raise ArithmeticError(f"sampled OE outside [S(rho), log d] at d={d}, {kind}")
            for delta in spec.deltas:
                rows.append(tail_result(values, d, povm.kappa, delta, ens, spec.base, seed, wall))
    verdicts = asymptotic_coarseness_check(kappas, spec.tau, spec.M, spec.d0)
    coarse = [{"d": d, "kappa": k, "threshold": spec.M * d ** (-0.5 + spec.tau), "coarse": v}
              for (d, k), v in zip(kappas, verdicts)]
    return SweepResult(rows, coarse)
