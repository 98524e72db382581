import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from obsentropy.entropy import (
    EntropyValue,
    LogBase,
    asymptotic_coarseness_check,
    chi_squared_upper_bound,
    coarseness_from_counts,
    coarseness_report,
    kl_divergence,
    observational_entropy,
    von_neumann_entropy,
)
from obsentropy.qcore import DensityOperator, Povm, ValidationError
from oracles import oe, random_density, random_povm, von_neumann_logm


def test_von_neumann_examples():
    assert von_neumann_entropy(DensityOperator.basis_state(3)).nats == 0.0
    assert von_neumann_entropy(DensityOperator.maximally_mixed(4)).nats == pytest.approx(math.log(4), abs=1e-12)
    assert von_neumann_entropy(DensityOperator.diagonal([0.75, 0.25])).nats == pytest.approx(0.562335, abs=1e-6)


@given(st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_von_neumann_against_matrix_log(d, seed):
    rho = random_density(d, np.random.default_rng(seed))
    assert von_neumann_entropy(DensityOperator.from_matrix(rho)).nats == pytest.approx(
        von_neumann_logm(rho), abs=1e-9)


def test_kl_examples():
    assert kl_divergence([0.3, 0.7], [0.3, 0.7]).nats == 0.0
    assert kl_divergence([1, 0], [0.5, 0.5]).nats == pytest.approx(math.log(2), abs=1e-15)
    # hand evaluation: 0.9 ln 1.8 + 0.1 ln 0.2 = 0.368064...
    assert kl_divergence([0.9, 0.1], [0.5, 0.5]).nats == pytest.approx(0.368064207, abs=1e-9)
    assert kl_divergence([1, 0], [0.5, 0.5], base="two").value == pytest.approx(1.0)


def test_kl_support_violation():
    with pytest.raises(ValidationError, match="support"):
        kl_divergence([0.5, 0.5], [1.0, 0.0])


def test_chi_squared_examples():
    assert chi_squared_upper_bound([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert chi_squared_upper_bound([1, 0], [0.5, 0.5]) == pytest.approx(1.0)


def test_chi_squared_dominates_kl():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        n = int(rng.integers(1, 17))
        p = rng.dirichlet(np.full(n, 0.5))
        q = rng.dirichlet(np.ones(n)) + 1e-12
        q /= q.sum()
        assert kl_divergence(p, q).nats <= chi_squared_upper_bound(p, q) + 1e-12


def test_entropy_value_rejects_negative_and_converts():
    with pytest.raises(ValidationError):
        EntropyValue(-1e-6)
    v = EntropyValue(math.log(8))
    assert v.bits == pytest.approx(3.0)
    assert v.to("two").value == pytest.approx(3.0)
    assert LogBase.parse("bits") is LogBase.TWO


def test_oe_examples():
    u4 = DensityOperator.maximally_mixed(4)
    assert observational_entropy(u4, Povm.rank_list([1, 3])).nats == pytest.approx(1.386294, abs=1e-6)
    rho = DensityOperator.from_matrix(random_density(3, np.random.default_rng(2)))
    assert observational_entropy(rho, Povm.rank_list([3])).nats == pytest.approx(math.log(3), abs=1e-12)
    gibbs = observational_entropy(DensityOperator.diagonal([0.75, 0.25]), Povm.computational(2))
    assert gibbs.nats == pytest.approx(0.562335, abs=1e-6)
    boltz = observational_entropy(DensityOperator.diagonal([1 / 3, 1 / 3, 1 / 3, 0]), Povm.rank_list([3, 1]))
    assert boltz.nats == pytest.approx(1.098612, abs=1e-6)


@given(st.integers(2, 7), st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_oe_matches_oracle_and_sandwich(d, n, seed):
    rng = np.random.default_rng(seed)
    effects = random_povm(d, n, rng)
    rho_m = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
    rho = DensityOperator.from_matrix(rho_m)
    povm = Povm.from_matrices(effects)
    s_p = observational_entropy(rho, povm).nats
    assert s_p == pytest.approx(oe(rho_m, effects), abs=1e-10)
    assert von_neumann_entropy(rho).nats - 1e-9 <= s_p <= math.log(d) + 1e-9


def test_coarseness_examples():
    r = coarseness_report(Povm.computational(4))
    assert (r.kappa, r.n_outcomes, r.sqrt_d, r.vn_satisfied) == (0.25, 4, 2.0, False)
    r = coarseness_report(Povm.balanced(16, 2))
    assert r.kappa == 0.5 and r.vn_satisfied
    r = coarseness_from_counts(2.0 ** 128, 2.0 ** 90, 2 ** 38)
    assert r.kappa == 2.0 ** -38 and r.vn_satisfied


def test_asymptotic_coarseness_examples():
    ds = [2, 4, 16, 256, 4096]
    # constant kappa = 1/2 clears M d^(-0.1) for every d once M <= 1/2
    assert all(asymptotic_coarseness_check([(d, 0.5) for d in ds], 0.4, 0.5, 1))
    # with M = 1 it takes d >= 2^10 (2^10 itself sits on the boundary)
    assert asymptotic_coarseness_check([(512, 0.5), (2048, 0.5), (2 ** 20, 0.5)], 0.4, 1.0, 1) == [
        False, True, True]
    large = [2.0 ** k for k in range(20, 40)]
    assert not any(asymptotic_coarseness_check([(d, d ** -0.5) for d in large], 0.01, 1.0, 1))
    assert all(asymptotic_coarseness_check([(d, d ** (-1 / 3)) for d in ds], 0.1, 1.0, 0))
    assert asymptotic_coarseness_check([(4, 0.5)], 0.2, 1.0, 8) == [None]
