"""Dense spectral computations on sampled matrices.

Eigenvalues and singular values are delegated to LAPACK through numpy/scipy;
this module adds residual checks, resolvent evaluations, the empirical block
transform of the Hermitization, ESD statistics and epsilon-nets.

Sweeps over many ``z`` reuse one factorization per matrix:

* :class:`SchurSweep` keeps a complex Schur form ``X = Z T Z^*``; extreme
  singular values of ``T - z`` (equal to those of ``X - z``) come from
  Lanczos iterations with triangular solves, ``O(n^2)`` per step.
* :class:`ResolventSweep` keeps an eigendecomposition ``X = V diag(l) V^{-1}``
  so that ``u^* (X - z)^{-1} v`` is an ``O(n)`` sum per ``z``.
* :class:`BlockResolventSweep` keeps the SVD of ``X - z`` so that the
  empirical block transform costs ``O(n)`` per ``eta``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sl
from scipy.linalg import blas

from .blockstieltjes import BlockPoint
from .errors import ConditioningError, DimensionError, SolverError
from .limitlaw import dist_to_ellipse, in_ellipse

__all__ = [
    "SpectrumSummary",
    "EmpiricalBlockTransform",
    "eigenvalues",
    "singular_values",
    "least_singular",
    "resolvent_bilinear",
    "empirical_block_stieltjes",
    "BlockResolventSweep",
    "ResolventSweep",
    "SchurSweep",
    "esd_stats",
    "Disk",
    "Interval",
    "EllipseBand",
    "epsilon_net",
    "criterion_determinant",
    "write_spectrum_csv",
]

_RESIDUAL_LIMIT = 1e-8


@dataclass(frozen=True)
class SpectrumSummary:
    eigenvalues: np.ndarray
    spectral_radius: float
    residual_bound: float

    def __len__(self):
        return self.eigenvalues.size


def _norm_lower(M: np.ndarray) -> float:
    # largest column norm bounds ||M||_2 from below, so residual ratios are conservative
    return float(np.max(np.linalg.norm(M, axis=0))) if M.size else 0.0


def eigenvalues(M: np.ndarray, checks: int = 10, seed: int = 0) -> SpectrumSummary:
    """All eigenvalues of ``M`` with ``checks`` randomly chosen eigenpairs residual-checked.

    ``residual_bound`` is ``max ||M v - l v|| / (||M|| ||v||)`` over the
    checked pairs (``nan`` when ``checks == 0``).  A bound above ``1e-8``
    raises :class:`SolverError`.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionError(f"expected a nonempty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DimensionError("matrix has non-finite entries")
    n = M.shape[0]
    hermitian = np.array_equal(M, M.conj().T)
    try:
        if checks <= 0:
            ev = np.linalg.eigvalsh(M).astype(complex) if hermitian else np.linalg.eigvals(M)
            return SpectrumSummary(ev, float(np.max(np.abs(ev))), float("nan"))
        if hermitian:
            w, V = np.linalg.eigh(M)
            ev = w.astype(complex)
        else:
            ev, V = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"eigensolver did not converge: {exc}") from exc
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=min(checks, n), replace=False)
    scale = max(_norm_lower(M), np.finfo(float).tiny)
    r = np.linalg.norm(M @ V[:, idx] - V[:, idx] * ev[idx], axis=0)
    r = r / (scale * np.linalg.norm(V[:, idx], axis=0))
    bound = float(np.max(r))
    if bound > _RESIDUAL_LIMIT:
        raise SolverError(f"eigenpair residual {bound:.2e} exceeds {_RESIDUAL_LIMIT}", {"residual": bound})
    return SpectrumSummary(ev, float(np.max(np.abs(ev))), bound)


def singular_values(X: np.ndarray, z: complex = 0.0) -> np.ndarray:
    """Singular values of ``X - z I`` in descending order."""
    X = np.asarray(X)
    n = X.shape[0]
    M = X - z * np.eye(n) if z != 0 else X
    return np.linalg.svd(M, compute_uv=False)


def least_singular(X: np.ndarray, z: complex = 0.0) -> float:
    return float(singular_values(X, z)[-1])


def _solve_checked(lu, M, v, tol):
    x = sl.lu_solve(lu, v)
    r = np.linalg.norm(M @ x - v) / (np.linalg.norm(M) * np.linalg.norm(x) + np.linalg.norm(v))
    if not r <= tol:
        raise ConditioningError(f"linear solve backward error {r:.2e} exceeds {tol}")
    return x


def resolvent_bilinear(X: np.ndarray, z: complex, u: np.ndarray, v: np.ndarray, sigma_floor: float = 1e-10, tol: float = 1e-10) -> complex:
    """``u^* (X - z I)^{-1} v`` from one LU factorization.

    Raises :class:`ConditioningError` when ``sigma_min(X - z) <= sigma_floor``
    or the solve's backward error exceeds ``tol``.
    """
    X = np.asarray(X)
    n = X.shape[0]
    M = X.astype(complex) - z * np.eye(n)
    with warnings.catch_warnings():
        # exact singularity is reported below as a ConditioningError
        warnings.simplefilter("ignore", sl.LinAlgWarning)
        lu = sl.lu_factor(M, check_finite=False)
    if np.min(np.abs(np.diag(lu[0]))) == 0.0 or _sigma_min_lu(lu, n) <= sigma_floor:
        raise ConditioningError(f"X - zI is numerically singular at z={z}")
    x = _solve_checked(lu, M, np.asarray(v, complex), tol)
    return complex(np.vdot(np.asarray(u, complex), x))


def _sigma_min_lu(lu, n: int, iters: int = 8) -> float:
    """Inverse-iteration estimate of ``sigma_min`` from an LU factorization."""
    x = np.ones(n, complex) / math.sqrt(n)
    est = np.inf
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(iters):
            y = sl.lu_solve(lu, x, trans=2)
            y = sl.lu_solve(lu, y)
            ny = np.linalg.norm(y)
            if not np.isfinite(ny) or ny == 0:
                return 0.0
            est = 1.0 / math.sqrt(ny)
            x = y / ny
    return est


@dataclass(frozen=True)
class EmpiricalBlockTransform:
    a_N: complex
    b_N: complex
    c_N: complex

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a_N, self.b_N], [self.c_N, self.a_N]])


class BlockResolventSweep:
    """Empirical block transform of ``X`` at a fixed ``z`` for many ``eta``.

    With ``X - z = U diag(s) V^*`` the normalized traces of the four blocks
    of ``(H - I (x) q)^{-1}`` are

    ``a_N = mean(eta / (s^2 - eta^2))``,
    ``b_N = mean(s w / (s^2 - eta^2))``, ``c_N = mean(s conj(w) / (s^2 - eta^2))``

    with ``w_i = (V^* U)_ii``.
    """

    def __init__(self, X: np.ndarray, z: complex):
        X = np.asarray(X)
        n = X.shape[0]
        self.z = complex(z)
        U, s, Vh = np.linalg.svd(X.astype(complex) - self.z * np.eye(n))
        self.s = s
        self.w = np.einsum("ik,ki->i", Vh, U)

    def at(self, eta: complex) -> EmpiricalBlockTransform:
        eta = complex(eta)
        d = self.s**2 - eta**2
        g = self.s / d
        return EmpiricalBlockTransform(
            complex(np.mean(eta / d)), complex(np.mean(g * self.w)), complex(np.mean(g * self.w.conj()))
        )


def empirical_block_stieltjes(X: np.ndarray, p: BlockPoint) -> EmpiricalBlockTransform:
    return BlockResolventSweep(X, p.z).at(p.eta)


class ResolventSweep:
    """``u^* (X - z)^{-1} v`` for many ``z`` from one eigendecomposition."""

    def __init__(self, X: np.ndarray, pairs: Sequence[tuple[np.ndarray, np.ndarray]]):
        self.X = np.asarray(X)
        lam, V = np.linalg.eig(self.X)
        lu = sl.lu_factor(V)
        U = np.stack([np.asarray(u, complex) for u, _ in pairs], axis=1)
        W = np.stack([np.asarray(v, complex) for _, v in pairs], axis=1)
        self.lam = lam
        self.left = U.conj().T @ V            # rows u^* V
        self.right = sl.lu_solve(lu, W).T     # rows (V^{-1} v)^T
        self.pairs = pairs

    def values(self, zs: Iterable[complex]) -> np.ndarray:
        """Array of shape ``(len(zs), len(pairs))``."""
        zs = np.asarray(list(zs), complex)
        coef = self.left * self.right
        out = np.empty((zs.size, coef.shape[0]), complex)
        for i, z in enumerate(zs):
            out[i] = coef @ (1.0 / (self.lam - z))
        return out

    def spot_check(self, zs: Iterable[complex]) -> float:
        """Max deviation from direct LU solves at ``zs``."""
        zs = list(zs)
        fast = self.values(zs)
        err = 0.0
        for i, z in enumerate(zs):
            for j, (u, v) in enumerate(self.pairs):
                err = max(err, abs(fast[i, j] - resolvent_bilinear(self.X, z, u, v)))
        return err


class SchurSweep:
    """Extreme singular values of ``X - z`` for many ``z`` from one Schur form."""

    def __init__(self, X: np.ndarray, seed: int = 0):
        X = np.asarray(X)
        self.n = X.shape[0]
        if np.iscomplexobj(X):
            T, _ = sl.schur(X, output="complex")
        else:
            Tr, Zr = sl.schur(X)
            T, _ = sl.rsf2csf(Tr, Zr)
        self.T = np.asfortranarray(T)
        self._start = np.random.default_rng(seed).standard_normal(self.n).astype(complex)
        self._start /= np.linalg.norm(self._start)
        self._warm = None
        self.last_iterations = 0

    def _shifted(self, z):
        S = self.T.copy(order="F")
        S[np.diag_indices(self.n)] -= z
        return S

    def _lanczos_max(self, apply, tol, kmax, start=None):
        """Largest eigenvalue of a Hermitian positive operator and its Ritz vector."""
        n = self.n
        kmax = min(kmax, n)
        Q = np.zeros((kmax + 1, n), complex)
        Q[0] = self._start if start is None else start / np.linalg.norm(start)
        alpha, beta = [], []
        prev = None
        ev = 0.0
        k = 0
        for k in range(kmax):
            w = apply(Q[k])
            a = np.vdot(Q[k], w).real
            w = w - a * Q[k] - (beta[-1] * Q[k - 1] if k > 0 else 0)
            w -= (Q[: k + 1].conj() @ w) @ Q[: k + 1]
            b = float(np.linalg.norm(w))
            alpha.append(a)
            beta.append(b)
            ev = sl.eigh_tridiagonal(
                np.array(alpha), np.array(beta[:-1]), eigvals_only=True, select="i", select_range=(k, k)
            )[0]
            if (prev is not None and abs(ev - prev) <= tol * abs(ev)) or b <= 1e-14 * abs(ev):
                break
            prev = ev
            Q[k + 1] = w / b
        m = len(alpha)
        if m == 1:
            return ev, 1, Q[0].copy()
        _, y = sl.eigh_tridiagonal(
            np.array(alpha), np.array(beta[:-1]), select="i", select_range=(m - 1, m - 1)
        )
        return ev, m, y[:, 0] @ Q[:m]

    def least(self, z: complex, tol: float = 1e-10, kmax: int = 150, warm: bool = False) -> float:
        """``sigma_min(X - z)`` as ``lambda_max((S^* S)^{-1})^{-1/2}``.

        With ``warm`` the Ritz vector of the previous ``warm`` call seeds the
        iteration, which pays off when consecutive ``z`` are close.
        """
        S = self._shifted(z)
        if np.min(np.abs(np.diag(S))) == 0.0:
            return 0.0
        start = self._warm if warm else None
        with np.errstate(over="ignore", invalid="ignore"):
            ev, k, vec = self._lanczos_max(lambda q: blas.ztrsv(S, blas.ztrsv(S, q, trans=2)), tol, kmax, start)
        self.last_iterations = k
        if not np.isfinite(ev) or ev <= 0:
            return 0.0
        if warm and np.all(np.isfinite(vec)):
            # blend in the fixed start so an unlucky Ritz vector cannot stall later calls
            self._warm = vec + 1e-3 * self._start
        return float(1.0 / math.sqrt(ev))

    def largest(self, z: complex, tol: float = 1e-10, kmax: int = 150) -> float:
        """``sigma_max(X - z)``."""
        S = self._shifted(z)
        ev, _, _ = self._lanczos_max(lambda q: blas.ztrmv(S, blas.ztrmv(S, q), trans=2), tol, kmax)
        return float(math.sqrt(max(ev, 0.0)))


def esd_stats(eigs: Iterable[complex], rho: float, delta: float, t_scale: float) -> dict:
    """Fraction of ``eigs`` in ``E_{rho,delta}`` and in the ellipse scaled by ``t_scale``."""
    if not 0 < t_scale <= 1:
        raise ValueError(f"t_scale must lie in (0, 1], got {t_scale}")
    ev = np.asarray(list(eigs), complex)
    if ev.size == 0:
        return {"frac_in_Edelta": float("nan"), "frac_in_scaled": float("nan")}
    return {
        "frac_in_Edelta": float(np.mean(dist_to_ellipse(rho, ev) <= delta)),
        "frac_in_scaled": float(np.mean(in_ellipse(rho, ev / t_scale))),
    }


# -- epsilon nets ---------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    M: float
    center: complex = 0j

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) <= self.M

    def bbox(self):
        c = complex(self.center)
        return c.real - self.M, c.real + self.M, c.imag - self.M, c.imag + self.M

    def size_bound(self, eps: float) -> float:
        return (1 + 2 * self.M / eps) ** 2


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def contains(self, z):
        z = np.asarray(z)
        return (np.imag(z) == 0) & (np.real(z) >= self.a) & (np.real(z) <= self.b)

    def size_bound(self, eps: float) -> float:
        return 1 + (self.b - self.a) / eps


@dataclass(frozen=True)
class EllipseBand:
    """``{z : dmin <= dist(z, E_rho) <= dmax, |z| <= rmax}``."""

    rho: float
    dmin: float
    dmax: float
    rmax: float

    def contains(self, z):
        d = dist_to_ellipse(self.rho, np.asarray(z))
        return (d >= self.dmin) & (d <= self.dmax) & (np.abs(z) <= self.rmax)

    def bbox(self):
        r = self.rmax
        return -r, r, -r, r


def epsilon_net(region, eps: float, resolution: int = 10) -> np.ndarray:
    """Subset of ``region`` covering it to distance ``eps``.

    An interval gets the exact greedy net ``a, a + eps, ...``.  For a disk the
    smaller of the greedy net and a projected square lattice is returned; the
    lattice keeps the size within ``(1 + 2M/eps)^2``.  Planar regions
    are discretized by a square lattice of spacing ``h = eps / resolution``;
    lattice points inside the region are visited in order of distance from
    the region's centre and kept when at least ``eps - 1.5 h`` from every
    kept point.  The margin ``1.5 h`` absorbs the lattice discretization so
    the covering radius stays within ``eps``.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if isinstance(region, Interval):
        k = int(math.floor((region.b - region.a) / eps + 1e-12))
        return (region.a + eps * np.arange(k + 1)).astype(complex)
    net = _greedy_net(region, eps, resolution)
    if isinstance(region, Disk):
        alt = _projected_lattice_net(region, eps)
        if alt.size < net.size:
            return alt
    return net


def _projected_lattice_net(disk: Disk, eps: float) -> np.ndarray:
    # square lattice of spacing eps*sqrt(2) covers the plane to radius eps; radial
    # projection onto the convex disk is 1-Lipschitz, so covering is preserved
    s = eps * math.sqrt(2)
    c = complex(disk.center)
    K = int(math.ceil((disk.M + eps) / s))
    k = np.arange(-K, K + 1) * s
    pts = (k[None, :] + 1j * k[:, None]).ravel()
    pts = pts[np.abs(pts) <= disk.M + eps]
    r = np.abs(pts)
    pts = np.where(r > disk.M, pts * (disk.M / np.maximum(r, 1e-300)), pts)
    _, keep = np.unique(np.round(pts, 12), return_index=True)
    return pts[np.sort(keep)] + c


def _greedy_net(region, eps: float, resolution: int) -> np.ndarray:
    h = eps / resolution
    x0, x1, y0, y1 = region.bbox()
    xs = np.arange(x0, x1 + h / 2, h)
    ys = np.arange(y0, y1 + h / 2, h)
    cand = (xs[None, :] + 1j * ys[:, None]).ravel()
    cand = cand[region.contains(cand)]
    if cand.size == 0:
        return cand
    centre = complex(getattr(region, "center", 0j))
    cand = cand[np.lexsort((cand.imag, cand.real, np.round(np.abs(cand - centre), 12)))]
    sep = eps - 1.5 * h
    cell = sep
    grid: dict[tuple[int, int], list[complex]] = {}
    net = []
    for z in cand.tolist():
        i, j = int(math.floor(z.real / cell)), int(math.floor(z.imag / cell))
        ok = True
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for w in grid.get((i + di, j + dj), ()):
                    if abs(z - w) < sep:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            net.append(z)
            grid.setdefault((i, j), []).append(z)
    return np.asarray(net, complex)


# -- eigenvalue criterion -------------------------------------------------

def criterion_determinant(X: np.ndarray, A: np.ndarray, B: np.ndarray, z: complex) -> complex:
    """``det(I_k + B (X - z)^{-1} A)``; zero exactly when ``z`` is an eigenvalue of ``X + A B``.

    ``z`` must not be an eigenvalue of ``X``.
    """
    X = np.asarray(X)
    n = X.shape[0]
    k = A.shape[1]
    if k == 0:
        return 1.0 + 0j
    G_A = sl.solve(X.astype(complex) - z * np.eye(n), A)
    return complex(np.linalg.det(np.eye(k) + B @ G_A))


def write_spectrum_csv(eigs: Iterable[complex], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im"])
        for e in eigs:
            e = complex(e)
            w.writerow([repr(e.real), repr(e.imag)])
