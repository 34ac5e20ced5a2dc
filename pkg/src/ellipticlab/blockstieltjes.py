"""Limiting 2x2 block Stieltjes transform of the Hermitized elliptic matrix.

At ``q = [[eta, z], [conj(z), eta]]`` with ``Im eta > 0`` the limit
``Gamma = [[a, b], [c, a]]`` solves ``Gamma = -(q + Sigma(Gamma))^{-1}`` where
``Sigma([[a, b], [c, d]]) = [[d, rho c], [rho b, a]]``.  The diagonal entry
``a(eta, z)`` is the Stieltjes transform of the symmetrized limiting
singular-value law ``nu_z`` of ``X - z``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DomainError, SolverError
from .limitlaw import in_ellipse

__all__ = [
    "BlockPoint",
    "BlockTransform",
    "DensityProfile",
    "GapReport",
    "sigma_op",
    "gamma_map",
    "matrix_residual",
    "solve_gamma",
    "solve_gamma_batch",
    "scalar_polynomial",
    "scalar_residual",
    "bc_from_a",
    "density_nu",
    "support_gap",
    "support_gap_report",
    "support_gaps",
    "squared_sv_transform",
    "squared_sv_residual",
]

DAMPING = 0.5
MAX_ITER = 10_000
TOL = 1e-12
# Newton polish may not move a slowly converging Picard iterate further than this
NEWTON_MAX_MOVE = 0.1
# Picard budget for density scans, where Newton polish picks up the slow points
SCAN_MAX_ITER = 500
_ROOT_ACCEPT = 1e-6
_LADDER_PER_DECADE = 6


@dataclass(frozen=True)
class BlockPoint:
    eta: complex
    z: complex
    rho: float

    def __post_init__(self):
        eta = complex(self.eta)
        if not eta.imag > 0:
            raise DomainError(f"Im(eta) must be positive, got eta={eta}")
        rho = float(self.rho)
        if not -1.0 <= rho <= 1.0:
            raise DomainError(f"rho must lie in [-1, 1], got {rho}")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "z", complex(self.z))
        object.__setattr__(self, "rho", rho)

    @property
    def q(self) -> np.ndarray:
        return np.array([[self.eta, self.z], [self.z.conjugate(), self.eta]])


@dataclass(frozen=True)
class BlockTransform:
    a: complex
    b: complex
    c: complex
    residual: float
    iterations: int
    method: str = "picard"
    ambiguous: bool = False

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.a]])


def sigma_op(M: np.ndarray, rho: float) -> np.ndarray:
    """``[[a, b], [c, d]] -> [[d, rho c], [rho b, a]]``."""
    M = np.asarray(M)
    return np.array([[M[1, 1], rho * M[1, 0]], [rho * M[0, 1], M[0, 0]]])


def gamma_map(a, b, c, eta, z, rho):
    """One application of ``Gamma -> -(q + Sigma(Gamma))^{-1}``, returned as ``(a', b', c')``."""
    u = eta + a
    v = z + rho * c
    w = np.conj(z) + rho * b
    det = u * u - v * w
    return -u / det, v / det, w / det


def matrix_residual(a, b, c, eta, z, rho):
    """``max |Gamma + (q + Sigma(Gamma))^{-1}|`` over the four entries."""
    with np.errstate(divide="ignore", invalid="ignore"):
        na, nb, nc = gamma_map(a, b, c, eta, z, rho)
        r = np.maximum(np.abs(a - na), np.maximum(np.abs(b - nb), np.abs(c - nc)))
    return np.where(np.isfinite(r), r, np.inf)


def _newton(a, b, c, eta, z, rho, tol=TOL, max_iter=50):
    """Complex Newton on ``G - Phi(G) = 0``; ``Phi`` is holomorphic in ``(a, b, c)``."""
    zc = np.conj(z)
    G = np.array([a, b, c], dtype=complex)
    res = float(matrix_residual(*G, eta, z, rho))
    for _ in range(max_iter):
        if res <= tol or not np.isfinite(res):
            break
        u, v, w = eta + G[0], z + rho * G[2], zc + rho * G[1]
        D = u * u - v * w
        dD = np.array([2 * u, -rho * v, -rho * w])
        J = np.empty((3, 3), dtype=complex)
        J[0] = -np.array([1, 0, 0]) / D + u * dD / D**2
        J[1] = np.array([0, 0, rho]) / D - v * dD / D**2
        J[2] = np.array([0, rho, 0]) / D - w * dD / D**2
        F = G - np.array([-u / D, v / D, w / D])
        try:
            step = np.linalg.solve(np.eye(3) - J, F)
        except np.linalg.LinAlgError:
            break
        G = G - step
        res = float(matrix_residual(*G, eta, z, rho))
    return G, res


def _newton_batch(a, b, c, eta, z, rho, tol=TOL, max_iter=30):
    """Vectorized :func:`_newton`; returns ``(a, b, c, residual)``."""
    a, b, c = (np.array(v, dtype=complex) for v in (a, b, c))
    zc = np.conj(z)
    one = np.ones_like(a)
    zero = np.zeros_like(a)
    for _ in range(max_iter):
        res = matrix_residual(a, b, c, eta, z, rho)
        todo = res > tol
        if not todo.any():
            break
        u, v, w = eta + a, z + rho * c, zc + rho * b
        with np.errstate(divide="ignore", invalid="ignore"):
            D = u * u - v * w
            dD = np.stack([2 * u, -rho * v, -rho * w], axis=-1)
            J = np.empty(a.shape + (3, 3), dtype=complex)
            J[..., 0, :] = -np.stack([one, zero, zero], -1) / D[..., None] + (u / D**2)[..., None] * dD
            J[..., 1, :] = np.stack([zero, zero, rho * one], -1) / D[..., None] - (v / D**2)[..., None] * dD
            J[..., 2, :] = np.stack([zero, rho * one, zero], -1) / D[..., None] - (w / D**2)[..., None] * dD
            F = np.stack([a + u / D, b - v / D, c - w / D], axis=-1)
            M = np.eye(3) - J
        good = todo & np.isfinite(M).all(axis=(-2, -1)) & np.isfinite(F).all(axis=-1)
        if not good.any():
            break
        try:
            step = np.linalg.solve(M[good], F[good][..., None])[..., 0]
        except np.linalg.LinAlgError:
            break
        a[good] -= step[:, 0]
        b[good] -= step[:, 1]
        c[good] -= step[:, 2]
    return a, b, c, matrix_residual(a, b, c, eta, z, rho)


def _picard_batch(rho, z, eta, tol, damping, max_iter):
    z = z.astype(complex)
    eta = eta.astype(complex)
    npts = z.size
    a = -1.0 / eta
    b = np.zeros(npts, complex)
    c = np.zeros(npts, complex)
    out_a, out_b, out_c = a.copy(), b.copy(), c.copy()
    out_res = np.full(npts, np.inf)
    out_it = np.full(npts, max_iter)
    idx = np.arange(npts)
    zz, ee = z, eta
    for it in range(max_iter):
        with np.errstate(divide="ignore", invalid="ignore"):
            na, nb, nc = gamma_map(a, b, c, ee, zz, rho)
            res = np.maximum(np.abs(a - na), np.maximum(np.abs(b - nb), np.abs(c - nc)))
        conv = res <= tol
        if conv.any():
            k = idx[conv]
            out_a[k], out_b[k], out_c[k] = a[conv], b[conv], c[conv]
            out_res[k], out_it[k] = res[conv], it
            keep = ~conv
            idx, a, b, c, na, nb, nc, zz, ee = (
                arr[keep] for arr in (idx, a, b, c, na, nb, nc, zz, ee)
            )
            if idx.size == 0:
                break
        a = (1 - damping) * a + damping * na
        b = (1 - damping) * b + damping * nb
        c = (1 - damping) * c + damping * nc
    if idx.size:
        out_a[idx], out_b[idx], out_c[idx] = a, b, c
        out_res[idx] = matrix_residual(a, b, c, ee, zz, rho)
    return out_a, out_b, out_c, out_res, out_it, out_res <= tol


def scalar_polynomial(p: BlockPoint) -> np.ndarray:
    """Coefficients (lowest degree first) of the cleared scalar equation in ``a``.

    With ``D = a (a + eta)``, ``P = eta + (1 + rho) a``, ``Q = eta + (1 - rho) a``
    the equation is ``P^2 Q^2 (1 + D) - Re(z)^2 D Q^2 - Im(z)^2 D P^2 = 0``,
    of degree six.  Roots with ``P = 0``, ``Q = 0`` or ``D = 0`` are spurious.
    """
    eta, rho = p.eta, p.rho
    X, Y = p.z.real, p.z.imag
    D = np.array([0.0, eta, 1.0], complex)
    P2 = npoly.polypow(np.array([eta, 1.0 + rho], complex), 2)
    Q2 = npoly.polypow(np.array([eta, 1.0 - rho], complex), 2)
    P2Q2 = npoly.polymul(P2, Q2)
    coef = npoly.polyadd(P2Q2, npoly.polymul(D, P2Q2))
    coef = npoly.polysub(coef, X * X * npoly.polymul(D, Q2))
    coef = npoly.polysub(coef, Y * Y * npoly.polymul(D, P2))
    return coef


def scalar_residual(a: complex, p: BlockPoint) -> complex:
    """LHS minus RHS of ``1/((a+eta) a) + 1 = Re(z)^2/(eta+(1+rho)a)^2 + Im(z)^2/(eta+(1-rho)a)^2``."""
    a = complex(a)
    eta, rho = p.eta, p.rho
    X, Y = p.z.real, p.z.imag
    D = (a + eta) * a
    P = eta + (1 + rho) * a
    Q = eta + (1 - rho) * a
    if D == 0 or P == 0 or Q == 0:
        raise DomainError(f"scalar equation has a pole at a={a}")
    return 1.0 / D + 1.0 - X * X / P**2 - Y * Y / Q**2


def bc_from_a(a, eta, z, rho):
    """Off-diagonal entries implied by the diagonal entry ``a``."""
    X, Y = np.real(z), np.imag(z)
    P = eta + a * (1 + rho)
    Q = eta + a * (1 - rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = -a * (X / P + 1j * Y / Q)
        c = -a * (X / P - 1j * Y / Q)
    return b, c


def _admissible_roots(p: BlockPoint) -> list[np.ndarray]:
    """Roots with ``Im a > 0`` that solve the matrix equation, as ``[a, b, c]`` rows."""
    roots = np.roots(scalar_polynomial(p)[::-1])
    roots = roots[roots.imag > 0]
    b, c = bc_from_a(roots, p.eta, p.z, p.rho)
    res = matrix_residual(roots, b, c, p.eta, p.z, p.rho)
    return [np.array([r, bb, cc]) for r, bb, cc, e in zip(roots, b, c, res) if e <= _ROOT_ACCEPT]


def _solve_polynomial(p: BlockPoint, tol: float) -> BlockTransform:
    t_target = p.eta.imag
    t_start = max(1.0, t_target)
    E = p.eta.real
    nsteps = max(1, int(math.ceil(_LADDER_PER_DECADE * math.log10(t_start / t_target))))
    ladder = np.geomspace(t_start, t_target, nsteps + 1)
    prev = None
    ambiguous = False
    for k, t in enumerate(ladder):
        q = BlockPoint(complex(E, t), p.z, p.rho)
        cands = _admissible_roots(q)
        if not cands:
            raise SolverError(
                "no admissible root of the scalar equation",
                {"eta": q.eta, "z": p.z, "rho": p.rho, "step": k, "roots": np.roots(scalar_polynomial(q)[::-1]).tolist()},
            )
        if prev is None:
            # large-t start: the Stieltjes branch is the one closest to -1/eta
            dist = [abs(g[0] + 1.0 / q.eta) for g in cands]
        else:
            dist = [abs(g[0] - prev) for g in cands]
        order = np.argsort(dist)
        if len(cands) > 1 and k == len(ladder) - 1:
            ambiguous = dist[order[1]] < 2.0 * dist[order[0]] + 1e-12
        prev = cands[order[0]][0]
    for i in order:
        G, res = _newton(*cands[i], p.eta, p.z, p.rho, tol=tol)
        if res <= max(tol, 1e-10) and G[0].imag > 0:
            return BlockTransform(complex(G[0]), complex(G[1]), complex(G[2]), float(res), nsteps, "polynomial", ambiguous)
    raise SolverError("root polishing failed", {"eta": p.eta, "z": p.z, "rho": p.rho})


def solve_gamma(p: BlockPoint, tol: float = TOL, damping: float = DAMPING, max_iter: int = MAX_ITER) -> BlockTransform:
    """Solve for ``Gamma(q)``.

    Damped Picard iteration from ``a = -1/eta``, ``b = c = 0``.  If it does
    not reach ``tol`` within ``max_iter`` steps, Newton's method is tried
    from the last iterate (accepted only for a small move); failing that,
    the cleared scalar equation
    is solved by root finding, tracking the Stieltjes branch by continuation
    in ``Im eta`` from ``max(1, Im eta)`` down to the target, and ``b, c`` are
    recovered in closed form.  A :class:`SolverError` is raised when no
    admissible root exists.
    """
    a, b, c, res, it, ok = _picard_batch(
        p.rho, np.array([p.z]), np.array([p.eta]), tol, damping, max_iter
    )
    if ok[0] and a[0].imag > 0:
        return BlockTransform(complex(a[0]), complex(b[0]), complex(c[0]), float(res[0]), int(it[0]))
    G, nres = _newton(a[0], b[0], c[0], p.eta, p.z, p.rho, tol=tol)
    move = np.max(np.abs(G - np.array([a[0], b[0], c[0]])))
    if nres <= tol and G[0].imag > 0 and move <= NEWTON_MAX_MOVE:
        return BlockTransform(complex(G[0]), complex(G[1]), complex(G[2]), float(nres), int(it[0]), "picard+newton")
    return _solve_polynomial(p, tol)


def solve_gamma_batch(rho: float, z, eta, tol: float = TOL, damping: float = DAMPING, max_iter: int = MAX_ITER, strict: bool = True):
    """Vectorized :func:`solve_gamma` over broadcast arrays of ``z`` and ``eta``.

    Returns ``(a, b, c, residual)`` arrays.  Points where both solvers fail
    raise when ``strict`` and are set to NaN otherwise.
    """
    zb, eb = np.broadcast_arrays(np.asarray(z, complex), np.asarray(eta, complex))
    shape = zb.shape
    zf, ef = zb.ravel(), eb.ravel()
    if np.any(ef.imag <= 0):
        raise DomainError("Im(eta) must be positive")
    a, b, c, res, _, ok = _picard_batch(float(rho), zf, ef, tol, damping, max_iter)
    ok &= a.imag > 0
    bad = np.flatnonzero(~ok)
    if bad.size:
        # slow Picard convergence: polish with Newton, accept only small moves
        na, nb, nc, nres = _newton_batch(a[bad], b[bad], c[bad], ef[bad], zf[bad], float(rho), tol)
        move = np.maximum(np.abs(na - a[bad]), np.maximum(np.abs(nb - b[bad]), np.abs(nc - c[bad])))
        acc = (nres <= tol) & (na.imag > 0) & (move <= NEWTON_MAX_MOVE)
        k = bad[acc]
        a[k], b[k], c[k], res[k] = na[acc], nb[acc], nc[acc], nres[acc]
        ok[k] = True
    for k in np.flatnonzero(~ok):
        try:
            bt = _solve_polynomial(BlockPoint(ef[k], zf[k], rho), tol)
            a[k], b[k], c[k], res[k] = bt.a, bt.b, bt.c, bt.residual
        except SolverError:
            if strict:
                raise
            a[k] = b[k] = c[k] = np.nan
            res[k] = np.inf
    return a.reshape(shape), b.reshape(shape), c.reshape(shape), res.reshape(shape)


@dataclass(frozen=True)
class DensityProfile:
    z: complex
    x: np.ndarray
    p: np.ndarray
    support_gap: float
    flagged: list[float] = field(default_factory=list)

    @property
    def grid(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.p.tolist()))

    def mass(self) -> float:
        return float(np.trapezoid(self.p, self.x))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "p"])
            for x, p in zip(self.x, self.p):
                w.writerow([repr(float(x)), repr(float(p))])


def _density_values(rho, z, x, t, tol=TOL, max_iter=SCAN_MAX_ITER):
    """Richardson-extrapolated ``Im a(x + i t) / pi`` with NaN at failed points."""
    x = np.asarray(x, float)
    zb = np.broadcast_to(np.asarray(z, complex), x.shape)
    ex = np.concatenate([x + 1j * t, x + 0.5j * t])
    a, _, _, _ = solve_gamma_batch(rho, np.concatenate([zb, zb]), ex, tol=tol, max_iter=max_iter, strict=False)
    f1, f2 = a[: x.size].imag / np.pi, a[x.size :].imag / np.pi
    return np.maximum(2.0 * f2 - f1, 0.0)


def density_nu(rho: float, z: complex, x_grid, t_small: float = 1e-4, with_gap: bool = True) -> DensityProfile:
    """Density of ``nu_z`` on ``x_grid`` from ``Im a`` at ``t_small`` and ``t_small/2``,
    extrapolated linearly to ``t = 0`` and clipped at zero."""
    if not 1e-8 <= t_small <= 1e-3:
        raise DomainError(f"t_small must lie in [1e-8, 1e-3], got {t_small}")
    x = np.asarray(x_grid, float)
    p = _density_values(rho, z, x, t_small)
    flagged = x[~np.isfinite(p)].tolist()
    gap = support_gap(rho, z) if with_gap else float("nan")
    return DensityProfile(complex(z), x, p, gap, flagged)


@dataclass(frozen=True)
class GapReport:
    gap: float
    a_origin: complex
    origin_ok: bool
    z_outside: bool


def support_gaps(
    rho: float,
    zs,
    t_small: float = 1e-6,
    threshold: float = 1e-6,
    step: float = 0.01,
    x_max: float | None = None,
    rounds: int = 2,
    points: int = 16,
) -> np.ndarray:
    """Vectorized support gap for many ``z`` at once.

    For every ``z`` the density is scanned on ``0, step, 2 step, ...`` until
    it first exceeds ``threshold``; the crossing is then refined by
    ``rounds`` multisection passes of ``points`` each, so the returned gap
    is accurate to ``step / points**rounds``.
    """
    zs = np.atleast_1d(np.asarray(zs, complex))
    if x_max is None:
        x_max = 3.0 + float(np.max(np.abs(zs), initial=0.0)) + abs(rho)
    xs = np.arange(0.0, x_max + step, step)
    gap = np.full(zs.size, float(xs[-1]))
    hit_x = np.full(zs.size, np.nan)
    active = np.ones(zs.size, dtype=bool)
    pos = 0
    chunk = 8
    while pos < xs.size and active.any():
        blk = xs[pos : pos + chunk]
        ia = np.flatnonzero(active)
        zz = np.repeat(zs[ia], blk.size)
        xx = np.tile(blk, ia.size)
        pv = _density_values(rho, zz, xx, t_small).reshape(ia.size, blk.size)
        over = ~(pv <= threshold)
        for r in np.flatnonzero(over.any(axis=1)):
            k = ia[r]
            hit_x[k] = blk[np.argmax(over[r])]
            active[k] = False
        pos += chunk
        chunk = min(2 * chunk, 64)
    ih = np.flatnonzero(np.isfinite(hit_x))
    at_origin = ih[hit_x[ih] == 0.0]
    gap[at_origin] = 0.0
    ih = ih[hit_x[ih] > 0.0]
    lo, hi = hit_x[ih] - step, hit_x[ih]
    for _ in range(rounds):
        if ih.size == 0:
            break
        frac = np.arange(1, points) / points
        grid = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
        pv = _density_values(rho, np.repeat(zs[ih], frac.size), grid.ravel(), t_small)
        ok = (pv <= threshold).reshape(ih.size, frac.size)
        # first grid point above threshold (or hi if none)
        first_bad = np.where(ok.all(axis=1), frac.size, np.argmin(ok, axis=1))
        new_lo = np.where(first_bad > 0, grid[np.arange(ih.size), np.maximum(first_bad - 1, 0)], lo)
        new_hi = np.where(first_bad < frac.size, grid[np.arange(ih.size), np.minimum(first_bad, frac.size - 1)], hi)
        lo, hi = new_lo, new_hi
    gap[ih] = lo
    return gap


def support_gap_report(rho: float, z: complex, **kwargs) -> GapReport:
    """Largest ``c`` with density ``<= threshold`` on ``[0, c]``, plus a check at the origin.

    ``a_origin`` is ``a(1e-8 i, z)``; for ``z`` outside the ellipse the
    density vanishes near 0 and ``|a_origin|`` should not exceed ``1e-3``.
    """
    z = complex(z)
    gap = float(support_gaps(rho, [z], **kwargs)[0])
    outside = not bool(in_ellipse(rho, z))
    a0 = solve_gamma(BlockPoint(1e-8j, z, rho)).a if outside else complex("nan")
    return GapReport(gap, a0, (not outside) or abs(a0) <= 1e-3, outside)


def support_gap(rho: float, z: complex, **kwargs) -> float:
    return support_gap_report(rho, z, **kwargs).gap


def squared_sv_transform(rho: float, z: complex, zeta: complex) -> complex:
    """``s(zeta, z) = a(sqrt(zeta), z) / sqrt(zeta)``, the transform of the squared singular values."""
    zeta = complex(zeta)
    if not zeta.imag > 0:
        raise DomainError(f"Im(zeta) must be positive, got {zeta}")
    eta = np.sqrt(zeta)
    return solve_gamma(BlockPoint(eta, z, rho)).a / eta


def squared_sv_residual(s: complex, rho: float, z: complex, zeta: complex) -> complex:
    """LHS minus RHS of ``1/(s(1+s)) + zeta = Re(z)^2/(1+(1+rho)s)^2 + Im(z)^2/(1+(1-rho)s)^2``."""
    z = complex(z)
    X, Y = z.real, z.imag
    return 1.0 / (s * (1 + s)) + zeta - X * X / (1 + (1 + rho) * s) ** 2 - Y * Y / (1 + (1 - rho) * s) ** 2
