import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ellipticlab.atoms import (
    FAMILIES,
    AtomPairSpec,
    atom_moments,
    sample_atom_pair,
    sample_diagonal,
    sample_pairs,
    truncate_atoms,
)
from ellipticlab.errors import ConfigurationError, TruncationLevelError

N_MC = 1_000_000

# truncated bivariate normal correlation, rho=0.5; oracle: scipy dblquad of
# E[xy 1{|x|,|y|<=L}] / E[x^2 1{|x|<=L}]
GAUSS_TRUNC_RHO_HAT = {2.0: 0.3906562823794965, 4.0: 0.499450496900606}


def test_unknown_family_rejected():
    with pytest.raises(ConfigurationError):
        AtomPairSpec("cauchy", 0.0)
    with pytest.raises(ConfigurationError):
        AtomPairSpec("gaussian", 1.5)
    with pytest.raises(ConfigurationError):
        AtomPairSpec("gaussian", 0.0, diag_family="laplace")


def test_gaussian_rho0_correlation(rng):
    x, y = sample_pairs(AtomPairSpec("gaussian", 0.0), rng, N_MC)
    assert abs(np.mean(x * y)) < 0.01


def test_rademacher_rho1_is_identical(rng):
    x, y = sample_pairs(AtomPairSpec("rademacher_mixture", 1.0), rng, 10_000)
    assert np.array_equal(x, y)
    assert set(np.unique(x)) == {-1.0, 1.0}


def test_rademacher_half_correlation(rng):
    x, y = sample_pairs(AtomPairSpec("rademacher_mixture", 0.5), rng, N_MC)
    assert abs(np.mean(x * y) - 0.5) < 0.01


@pytest.mark.parametrize("family", ["gaussian", "rademacher_mixture", "uniform_pair"])
@pytest.mark.parametrize("rho", [-0.9, -0.5, 0.0, 0.3, 0.9])
def test_moments_within_three_se(family, rho):
    rng = np.random.default_rng([FAMILIES.index(family), int(1000 * (rho + 1))])
    x, y = sample_pairs(AtomPairSpec(family, rho), rng, N_MC)
    se = 1 / math.sqrt(N_MC)
    m4 = atom_moments(AtomPairSpec(family, rho)).m4
    assert abs(x.mean()) < 3 * se
    # mean^2 bias is O(1/N); rademacher has Var(x^2) = 0
    assert abs(x.var() - 1) < 3 * math.sqrt(m4 - 1) * se + 9 / N_MC
    # Var(xy) <= sqrt(E x^4 E y^4) = m4
    assert abs(np.mean(x * y) - rho) < 3 * math.sqrt(m4) * se


def test_closed_form_moments():
    assert atom_moments(AtomPairSpec("gaussian", 0.2)) == (0.0, 1.0, 0.2, 3.0)
    assert atom_moments(AtomPairSpec("rademacher_mixture", -0.4)) == (0.0, 1.0, -0.4, 1.0)
    # oracle: sympy integral of x^4 over uniform on [-sqrt3, sqrt3]
    assert atom_moments(AtomPairSpec("uniform_pair", 0.0)).m4 == pytest.approx(9 / 5, abs=1e-15)


def test_uniform_m4_monte_carlo(rng):
    x, _ = sample_pairs(AtomPairSpec("uniform_pair", 0.0), rng, N_MC)
    assert np.mean(x**4) == pytest.approx(1.8, abs=0.01)


def test_custom_table_validation():
    table = [(1.0, 1.0, 0.25), (-1.0, -1.0, 0.25), (1.0, -1.0, 0.25), (-1.0, 1.0, 0.25)]
    spec = AtomPairSpec("custom_table", 0.0, table=table)
    assert atom_moments(spec).m4 == pytest.approx(1.0)
    with pytest.raises(ConfigurationError):
        AtomPairSpec("custom_table", 0.5, table=table)
    with pytest.raises(ConfigurationError):
        AtomPairSpec("custom_table", 0.0, table=[(2.0, 2.0, 1.0)])


def test_spec_json_round_trip():
    spec = AtomPairSpec("uniform_pair", -0.25, diag_family="zero")
    assert AtomPairSpec.from_json(spec.to_json()) == spec


def test_single_pair_and_diagonal(rng):
    x, y = sample_atom_pair(AtomPairSpec("rademacher_mixture", 1.0), rng)
    assert x == y
    assert np.all(sample_diagonal(AtomPairSpec("gaussian", 0.0, diag_family="zero"), rng, 5) == 0)


def test_truncation_noop_on_bounded_atoms():
    t = truncate_atoms(AtomPairSpec("rademacher_mixture", 0.5), 2.0)
    assert (t.center_1, t.center_2, t.scale_1, t.scale_2, t.rho_hat) == (0.0, 0.0, 1.0, 1.0, 0.5)


def test_truncation_gaussian_large_L():
    assert abs(truncate_atoms(AtomPairSpec("gaussian", 0.5), 10.0).rho_hat - 0.5) <= 1e-3


def test_truncation_preserves_independence():
    assert truncate_atoms(AtomPairSpec("gaussian", 0.0), 3.0).rho_hat == 0.0


@pytest.mark.parametrize("L", sorted(GAUSS_TRUNC_RHO_HAT))
def test_truncated_gaussian_against_quadrature(L):
    assert truncate_atoms(AtomPairSpec("gaussian", 0.5), L).rho_hat == pytest.approx(GAUSS_TRUNC_RHO_HAT[L], abs=1e-9)


def test_truncation_level_error():
    with pytest.raises(TruncationLevelError):
        truncate_atoms(AtomPairSpec("gaussian", 0.5), 0.5)


@pytest.mark.parametrize("family", ["gaussian", "uniform_pair"])
def test_truncated_draws_bounded_and_correlated(family):
    L = 2.0
    t = truncate_atoms(AtomPairSpec(family, 0.6), L)
    x, y = t.sample_pairs(np.random.default_rng(3), N_MC)
    assert np.max(np.abs(x)) <= 4 * L and np.max(np.abs(y)) <= 4 * L
    assert abs(x.mean()) < 3e-3 and abs(x.var() - 1) < 5e-3
    assert abs(np.mean(x * y) - t.rho_hat) < 3 * math.sqrt(3) / math.sqrt(N_MC)


def test_truncation_error_decays_in_L():
    L = [2.0, 4.0, 8.0, 16.0]
    err = [abs(truncate_atoms(AtomPairSpec("gaussian", 0.5), l).rho_hat - 0.5) for l in L]
    assert all(a >= b for a, b in zip(err, err[1:]))
    # fitted C in |rho_hat - rho| <= C / L is reported, not asserted against a value
    C = max(e * l for e, l in zip(err, L))
    assert all(e <= C / l + 1e-15 for e, l in zip(err, L))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(FAMILIES[:3]), st.floats(-1, 1), st.integers(0, 2**32 - 1))
def test_samples_are_finite_and_deterministic(family, rho, seed):
    spec = AtomPairSpec(family, rho)
    a = sample_pairs(spec, np.random.default_rng(seed), 64)
    b = sample_pairs(spec, np.random.default_rng(seed), 64)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert np.all(np.isfinite(a[0])) and np.all(np.isfinite(a[1]))
