import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from ellipticlab import blockstieltjes as bs
from ellipticlab.ensemble import sample_elliptic
from ellipticlab.atoms import AtomPairSpec
from ellipticlab.errors import DomainError, SolverError
from ellipticlab.limitlaw import m_of_z

GOLDEN = (math.sqrt(5) - 1) / 2
# lower edge of the squared singular values for rho=0, |z|=2: critical value of
# zeta(s) = |z|^2/(1+s)^2 - 1/(s(1+s)), computed with sympy nroots
GAP_RHO0_Z2 = 0.738017459656381


def semicircle(eta):
    r = cmath.sqrt(eta * eta - 4)
    a = (-eta + r) / 2
    return a if a.imag > 0 else (-eta - r) / 2


def test_block_point_validation():
    with pytest.raises(DomainError):
        bs.BlockPoint(1.0, 0, 0.0)
    p = bs.BlockPoint(1j, 2 + 1j, 0.5)
    np.testing.assert_array_equal(p.q, [[1j, 2 + 1j], [2 - 1j, 1j]])


def test_sigma_op():
    np.testing.assert_array_equal(bs.sigma_op(np.eye(2), 0.5), np.eye(2))
    np.testing.assert_array_equal(bs.sigma_op(np.array([[0, 1], [0, 0]]), 0.5), [[0, 0], [0.5, 0]])
    M = np.array([[1, 2], [3, 4]], complex)
    np.testing.assert_array_equal(bs.sigma_op(bs.sigma_op(M, 1.0), 1.0), M)


def test_golden_ratio_point():
    g = bs.solve_gamma(bs.BlockPoint(1j, 0, 0.0))
    assert g.a == pytest.approx(GOLDEN * 1j, abs=1e-12)
    assert abs(g.b) < 1e-14 and abs(g.c) < 1e-14


@pytest.mark.parametrize("rho", [-0.7, 0.0, 0.5])
@pytest.mark.parametrize("z", [0, 1 + 1j, 5])
def test_large_eta(rho, z):
    eta = 1e6j
    assert abs(eta * bs.solve_gamma(bs.BlockPoint(eta, z, rho)).a + 1) <= 1e-5


def test_semicircle_half():
    eta = 0.5j
    assert bs.solve_gamma(bs.BlockPoint(eta, 0, 0.0)).a == pytest.approx(semicircle(eta), abs=1e-10)


def test_semicircle_100_points():
    etas = np.linspace(-3, 3, 10)[:, None] + 1j * np.geomspace(1e-2, 10, 10)[None, :]
    for eta in etas.ravel():
        assert abs(bs.solve_gamma(bs.BlockPoint(eta, 0, 0.0)).a - semicircle(eta)) <= 1e-10


def test_residual_grid():
    rhos = np.linspace(-0.9, 0.9, 10)
    zs = np.array([0, 0.5, 1.2 + 0.3j, -2j, 3 + 3j, 0.9, 1.6, 2.25, -1 + 0.2j, 4])
    etas = np.array([1j, 0.1j, 0.01j, 1e-3j, 0.5 + 0.05j, -1 + 0.2j, 2j, 10j, 0.3 + 1e-4j, 0.02j])
    worst = 0.0
    for rho in rhos:
        a, b, c, res = bs.solve_gamma_batch(rho, zs[:, None], etas[None, :])
        worst = max(worst, float(np.max(bs.matrix_residual(a, b, c, etas[None, :], zs[:, None], rho))))
        assert np.all(a.imag > 0)
    assert worst <= 1e-12


def test_scalar_residual_values():
    assert bs.scalar_residual(1j, bs.BlockPoint(1j, 0, 0.0)) == pytest.approx(0.5)
    g = bs.solve_gamma(bs.BlockPoint(0.3j, 1.1 - 0.4j, 0.3))
    assert abs(bs.scalar_residual(g.a, bs.BlockPoint(0.3j, 1.1 - 0.4j, 0.3))) <= 1e-10
    with pytest.raises(DomainError):
        bs.scalar_residual(-1j, bs.BlockPoint(1j, 0, 0.0))


def test_z0_reduces_to_semicircle_equation():
    p = bs.BlockPoint(0.7j, 0, 0.4)
    a = 0.2 + 0.9j
    assert bs.scalar_residual(a, p) == pytest.approx(1 / ((a + p.eta) * a) + 1)


def test_polynomial_roots_satisfy_scalar_equation():
    p = bs.BlockPoint(0.2 + 0.4j, 1.3 + 0.7j, -0.3)
    coef = bs.scalar_polynomial(p)
    assert coef.size == 7
    g = bs.solve_gamma(p)
    assert abs(np.polynomial.polynomial.polyval(g.a, coef)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(
    st.floats(-0.95, 0.95),
    st.complex_numbers(max_magnitude=4, allow_nan=False, allow_infinity=False),
    st.floats(-3, 3),
    st.floats(1e-2, 5),
)
def test_picard_equals_polynomial(rho, z, E, t):
    p = bs.BlockPoint(complex(E, t), z, rho)
    g1 = bs.solve_gamma(p)
    g2 = bs._solve_polynomial(p, bs.TOL)
    assert g1.a.imag > 0
    assert max(abs(g1.a - g2.a), abs(g1.b - g2.b), abs(g1.c - g2.c)) <= 1e-8
    # b, c from the closed form reproduce the matrix equation
    b, c = bs.bc_from_a(g1.a, p.eta, p.z, rho)
    assert bs.matrix_residual(g1.a, b, c, p.eta, p.z, rho) <= 1e-10
    assert abs(g1.a) <= 1 / t


def test_real_z_symmetry():
    g = bs.solve_gamma(bs.BlockPoint(0.3j, 1.7, 0.4))
    assert g.b == pytest.approx(g.c, abs=1e-13)
    assert g.b == pytest.approx(g.c.conjugate(), abs=1e-13)


@pytest.mark.parametrize("z", [3.0, 1 + 2j, -2.5j])
def test_off_diagonal_tends_to_m_outside_ellipse(z):
    # with a = 0 the off-diagonal equations reduce to rho m^2 + z m + 1 = 0
    g = bs.solve_gamma(bs.BlockPoint(1e-8j, z, 0.5))
    assert abs(g.a) < 1e-6
    assert g.c == pytest.approx(m_of_z(0.5, z), abs=1e-7)
    assert g.b == pytest.approx(np.conj(m_of_z(0.5, z)), abs=1e-7)


def test_solver_error_has_diagnostics():
    err = SolverError("boom", {"eta": 1j})
    assert err.diagnostics == {"eta": 1j}


def test_density_semicircle():
    prof = bs.density_nu(0.0, 0.0, np.array([0.0, 2.5, -2.5]), with_gap=False)
    assert prof.p[0] == pytest.approx(1 / math.pi, abs=1e-4)
    assert prof.p[1] <= 1e-4 and prof.p[2] <= 1e-4


def test_density_gap_point():
    assert bs.density_nu(0.0, 2.0, [0.0], with_gap=False).p[0] <= 1e-4


def test_density_t_range():
    with pytest.raises(DomainError):
        bs.density_nu(0.0, 0.0, [0.0], t_small=0.1)


@pytest.mark.parametrize("rho, z", [(0.0, 0.0), (0.5, 1.0), (-0.3, 2 + 1j)])
def test_density_normalised_and_symmetric(rho, z):
    R = 1 + abs(rho) + abs(z) + 2
    x = np.linspace(-R, R, 4001)
    prof = bs.density_nu(rho, z, x, with_gap=False)
    assert prof.mass() == pytest.approx(1.0, abs=1e-3)
    np.testing.assert_allclose(prof.p, prof.p[::-1], atol=1e-8)
    assert np.all(np.isfinite(prof.p)) and not prof.flagged


def test_density_csv(tmp_path):
    prof = bs.density_nu(0.0, 0.0, [0.0, 1.0], with_gap=False)
    prof.to_csv(tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == "x,p"
    assert prof.grid[0][0] == 0.0


def test_support_gap_values():
    assert bs.support_gap(0.0, 0.0) == 0.0
    assert bs.support_gap(0.0, 2.0) == pytest.approx(GAP_RHO0_Z2, abs=1e-4)
    g = bs.support_gap(0.5, 1.6)
    assert 0 < g < 0.2


def test_support_gap_matches_finite_n():
    X = sample_elliptic(2000, AtomPairSpec("gaussian", 0.5), 3).X
    for z in (3j, 2.25):
        s = np.linalg.svd(X - z * np.eye(2000), compute_uv=False)[-1]
        assert s == pytest.approx(bs.support_gap(0.5, z), abs=0.03)


def test_gap_report_origin():
    rep = bs.support_gap_report(0.5, 3j)
    assert rep.z_outside and rep.origin_ok and rep.gap > 2
    rep = bs.support_gap_report(0.5, 0.2)
    assert not rep.z_outside and rep.gap == 0.0


def test_vectorised_gaps_match_scalar():
    zs = [0.0, 2.0, 3j]
    np.testing.assert_allclose(bs.support_gaps(0.5, zs), [bs.support_gap(0.5, z) for z in zs])


def test_squared_sv_transform():
    zeta = 1j
    s = bs.squared_sv_transform(0.0, 0.0, zeta)
    eta = cmath.exp(1j * math.pi / 4)
    assert s == pytest.approx(bs.solve_gamma(bs.BlockPoint(eta, 0, 0.0)).a / eta)
    assert abs(bs.squared_sv_residual(s, 0.0, 0.0, zeta)) <= 1e-8
    # Marchenko-Pastur(1): 1/(s(1+s)) + zeta = 0; root with Im s > 0 from numpy.roots
    assert s == pytest.approx(0.30024259 + 0.62481053j, abs=1e-7)
    z = 1e6j
    assert abs(z * bs.squared_sv_transform(0.3, 1.0, z) + 1) < 1e-5
    with pytest.raises(DomainError):
        bs.squared_sv_transform(0.0, 0.0, -1.0)


def test_batch_nonstrict_returns_arrays():
    a, b, c, res = bs.solve_gamma_batch(0.5, np.array([0, 1, 2]), 0.1j, strict=False)
    assert a.shape == (3,) and np.all(res <= 1e-12)
