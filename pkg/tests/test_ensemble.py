import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ellipticlab.atoms import AtomPairSpec, truncate_atoms
from ellipticlab.ensemble import (
    EllipticMatrix,
    PerturbationSpec,
    build_perturbation,
    factor_low_rank,
    hermitize,
    sample_elliptic,
)
from ellipticlab.errors import DimensionError, RankError

FIG1 = (2j, -1.5, 1 + 1j)


def test_n1_zero_diagonal():
    m = sample_elliptic(1, AtomPairSpec("gaussian", 0.3, diag_family="zero"), 5)
    assert m.entries.tolist() == [[0.0]]


def test_pair_correlation_n2000():
    Y = sample_elliptic(2000, AtomPairSpec("gaussian", 0.5), 11).entries
    iu = np.triu_indices(2000, 1)
    x, y = Y[iu], Y.T[iu]
    assert abs(np.corrcoef(x, y)[0, 1] - 0.5) < 0.02


def test_determinism_and_immutability():
    spec = AtomPairSpec("uniform_pair", -0.2)
    a, b = sample_elliptic(30, spec, 9), sample_elliptic(30, spec, 9)
    assert np.array_equal(a.entries, b.entries)
    assert not np.array_equal(a.entries, sample_elliptic(30, spec, 10).entries)
    with pytest.raises(ValueError):
        a.entries[0, 0] = 1.0
    np.testing.assert_array_equal(a.X, a.entries / np.sqrt(30))


def test_prefix_rows_independent_of_n():
    # row streams are keyed by (seed, row); the upper triangle of row 0 is a prefix
    spec = AtomPairSpec("gaussian", 0.0)
    small, big = sample_elliptic(5, spec, 1).entries, sample_elliptic(8, spec, 1).entries
    np.testing.assert_array_equal(small[0, 1:], big[0, 1:5])


def test_rho_one_is_symmetric():
    Y = sample_elliptic(60, AtomPairSpec("gaussian", 1.0), 2).entries
    np.testing.assert_array_equal(Y, Y.T)


def test_truncated_spec_zero_diagonal():
    t = truncate_atoms(AtomPairSpec("gaussian", 0.5), 3.0)
    Y = sample_elliptic(40, t, 3).entries
    assert np.all(np.diag(Y) == 0) and np.max(np.abs(Y)) <= 12.0


def test_norm_bound_bounded_atoms():
    spec = AtomPairSpec("rademacher_mixture", 0.5)
    norms = [np.linalg.norm(sample_elliptic(2000, spec, s).X, 2) for s in range(3)]
    assert max(norms) <= 4.5


def test_binary_and_csv_round_trip(tmp_path):
    m = sample_elliptic(4, AtomPairSpec("gaussian", 0.1), 3)
    m.to_binary(tmp_path / "y.bin")
    np.testing.assert_array_equal(EllipticMatrix.read_binary(tmp_path / "y.bin"), m.entries)
    m.to_csv(tmp_path / "y.csv")
    np.testing.assert_array_equal(np.loadtxt(tmp_path / "y.csv", delimiter=","), m.entries)


def test_diagonal_perturbation():
    C = build_perturbation(1000, PerturbationSpec("diagonal_eigs", eigs=FIG1))
    assert np.count_nonzero(C) == 3 and np.count_nonzero(np.diag(C)) == 3


def test_mean_shift_entries():
    C = build_perturbation(4, PerturbationSpec("mean_shift", mu=1))
    assert np.all(C == 0.5)


def test_mean_shift_expectation():
    # E[X + C] = mu/sqrt(n) entrywise; its only nonzero eigenvalue is mu sqrt(n)
    n, mu = 100, 1.0
    p = PerturbationSpec("mean_shift", mu=mu)
    mean = np.mean([sample_elliptic(n, AtomPairSpec("gaussian", 0.5), s).X for s in range(200)], axis=0)
    mean = mean + build_perturbation(n, p)
    assert abs(mean.mean() - mu / np.sqrt(n)) < 5e-3
    assert p.nonzero_eigenvalues(n) == [pytest.approx(mu * np.sqrt(n))]


def test_rank_one():
    u, v = np.eye(4)[0], np.eye(4)[1]
    C = build_perturbation(4, PerturbationSpec("rank_one", u=tuple(u), v=tuple(v)))
    assert np.count_nonzero(C) == 1 and C[0, 1] == 1


def test_dimension_error():
    with pytest.raises(DimensionError):
        build_perturbation(2, PerturbationSpec("diagonal_eigs", eigs=FIG1))


def test_perturbation_json_round_trip():
    for p in (
        PerturbationSpec("diagonal_eigs", eigs=FIG1),
        PerturbationSpec("mean_shift", mu=2j),
        PerturbationSpec("rank_one", u=(1, 1j), v=(0.5, -1)),
    ):
        assert PerturbationSpec.from_json(p.to_json()) == p


def test_exact_factors_match_dense():
    for p in (PerturbationSpec("diagonal_eigs", eigs=FIG1), PerturbationSpec("mean_shift", mu=1 - 1j)):
        np.testing.assert_allclose(p.factors(7).product(), build_perturbation(7, p), atol=1e-14)


def test_factor_diagonal():
    C = build_perturbation(50, PerturbationSpec("diagonal_eigs", eigs=FIG1))
    f = factor_low_rank(C)
    assert f.k == 3
    assert np.linalg.norm(f.product() - C) <= 1e-12 * np.linalg.norm(C)


def test_factor_zero_and_rank_one(rng):
    assert factor_low_rank(np.zeros((5, 5))).k == 0
    u, v = rng.standard_normal(6), rng.standard_normal(6)
    f = factor_low_rank(np.outer(u, v))
    assert f.k == 1
    assert np.linalg.norm(f.A) * np.linalg.norm(f.B) == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v))


def test_factor_rank_error(rng):
    with pytest.raises(RankError):
        factor_low_rank(rng.standard_normal((5, 5)), k=3)


def test_hermitize_scalar():
    ev = np.linalg.eigvalsh(hermitize(np.zeros((1, 1)), 1.0))
    np.testing.assert_allclose(ev, [-1, 1])


def test_hermitize_matches_svd(rng):
    X = rng.standard_normal((50, 50)) / np.sqrt(50)
    z = 0.3 - 0.7j
    ev = np.linalg.eigvalsh(hermitize(X, z))
    s = np.linalg.svd(X - z * np.eye(50), compute_uv=False)
    np.testing.assert_allclose(np.sort(ev[ev > 0]), np.sort(s), atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), st.integers(0, 10**6))
def test_hermitize_symmetric_spectrum(n, z, seed):
    X = np.random.default_rng(seed).standard_normal((n, n))
    ev = np.sort(np.linalg.eigvalsh(hermitize(X, z)))
    np.testing.assert_allclose(ev, -ev[::-1], atol=1e-8)
