"""Closed-form limit objects of the elliptic ensemble.

``E_rho`` is the filled ellipse with semi-axes ``1 + rho`` (real direction)
and ``1 - rho`` (imaginary direction); ``E_{rho,delta}`` is its closed
``delta``-neighbourhood.  Outside ``E_rho`` the limiting resolvent trace
``m(z)`` is the solution of ``rho m^2 + z m + 1 = 0`` that vanishes at
infinity.

Branch note: ``branch_sqrt`` evaluates ``z * sqrt(1 - 4 rho / z^2)`` with the
principal root.  The principal root is discontinuous only where
``1 - 4 rho / z^2`` is a nonpositive real, i.e. ``z^2 in (0, 4 rho]`` when
``rho > 0`` (the real segment ``[-2 sqrt(rho), 2 sqrt(rho)]``) and
``z^2 in [4 rho, 0)`` when ``rho < 0`` (the matching imaginary segment).
Both segments lie inside ``E_rho``, and the expression tends to ``z`` at
infinity.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BranchError, DomainError, NoOutlierPreimageError

__all__ = [
    "EllipseGeometry",
    "LimitFunctions",
    "OutlierPrediction",
    "StabilityReport",
    "in_ellipse",
    "dist_to_ellipse",
    "branch_sqrt",
    "m_of_z",
    "m2_of_z",
    "outlier_map",
    "inverse_outlier_map",
    "predict_outliers",
    "g_of_z",
    "branch_gap",
    "stability_check",
    "m_grid_rows",
    "write_m_grid_csv",
]

_BOUNDARY_TOL = 1e-12


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not -1.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [-1, 1], got {rho}")
    return rho


@dataclass(frozen=True)
class EllipseGeometry:
    rho: float
    semi_major: float = field(init=False)
    semi_minor: float = field(init=False)

    def __post_init__(self):
        rho = _check_rho(self.rho)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "semi_major", 1.0 + rho)
        object.__setattr__(self, "semi_minor", 1.0 - rho)

    @property
    def degenerate(self) -> bool:
        return abs(self.rho) == 1.0

    @property
    def area(self) -> float:
        return math.pi * self.semi_major * self.semi_minor

    def contains(self, z, delta: float = 0.0):
        if delta == 0.0:
            return in_ellipse(self.rho, z)
        return dist_to_ellipse(self.rho, z) <= delta

    def distance(self, z):
        return dist_to_ellipse(self.rho, z)

    def boundary(self, num: int = 256, scale: float = 1.0) -> np.ndarray:
        th = np.linspace(0.0, 2 * np.pi, num, endpoint=False)
        return scale * (self.semi_major * np.cos(th) + 1j * self.semi_minor * np.sin(th))


def _scalar_out(arr: np.ndarray, like):
    return arr.item() if np.ndim(like) == 0 else arr


def in_ellipse(rho: float, z, tol: float = _BOUNDARY_TOL):
    """Membership in the closed ellipse ``E_rho`` (boundary counts as inside)."""
    rho = _check_rho(rho)
    zz = np.asarray(z, dtype=complex)
    x, y = zz.real, zz.imag
    A, B = 1.0 + rho, 1.0 - rho
    if A == 0.0:
        out = (np.abs(x) <= tol) & (np.abs(y) <= 2.0 + tol)
    elif B == 0.0:
        out = (np.abs(y) <= tol) & (np.abs(x) <= 2.0 + tol)
    else:
        out = (x / A) ** 2 + (y / B) ** 2 <= 1.0 + tol
    return _scalar_out(np.asarray(out), z)


def dist_to_ellipse(rho: float, z, tol: float = 1e-12):
    """Euclidean distance from ``z`` to the filled ellipse (0 inside).

    Projection uses Newton's method on ``F(t) = (A p/(t+A^2))^2 + (B q/(t+B^2))^2 - 1``,
    a convex decreasing function on ``t >= 0``; started at ``t = 0`` the
    iterates increase monotonically to the root.  Non-converged points fall
    back to bisection on ``[0, max(A, B) |z|]``.  For ``|rho| = 1`` the
    distance is to the segment ``[-2, 2]`` or ``[-2i, 2i]``.
    """
    rho = _check_rho(rho)
    zz = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    p, q = np.abs(zz.real), np.abs(zz.imag)
    A, B = 1.0 + rho, 1.0 - rho
    if A == 0.0 or B == 0.0:
        # segment along the axis with the nonzero semi-axis
        along, across = (p, q) if B == 0.0 else (q, p)
        d = np.hypot(np.maximum(along - 2.0, 0.0), across)
        return _scalar_out(d.reshape(np.shape(z)), z)
    d = np.zeros_like(p)
    out = (p / A) ** 2 + (q / B) ** 2 > 1.0
    if np.any(out):
        po, qo = p[out], q[out]
        A2, B2 = A * A, B * B
        t = np.zeros_like(po)
        done = np.zeros(po.shape, dtype=bool)
        for _ in range(100):
            ua, ub = A * po / (t + A2), B * qo / (t + B2)
            F = ua * ua + ub * ub - 1.0
            dF = -2.0 * (ua * ua / (t + A2) + ub * ub / (t + B2))
            step = np.where(done, 0.0, F / dF)
            t = t - step
            done |= np.abs(step) <= tol * np.maximum(1.0, t)
            if done.all():
                break
        if not done.all():
            lo = np.zeros(int((~done).sum()))
            hi = max(A, B) * np.hypot(po[~done], qo[~done])
            pn, qn = po[~done], qo[~done]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                F = (A * pn / (mid + A2)) ** 2 + (B * qn / (mid + B2)) ** 2 - 1.0
                lo = np.where(F > 0, mid, lo)
                hi = np.where(F > 0, hi, mid)
            t[~done] = 0.5 * (lo + hi)
        xs, ys = A2 * po / (t + A2), B2 * qo / (t + B2)
        d[out] = np.hypot(po - xs, qo - ys)
    return _scalar_out(d.reshape(np.shape(z)), z)


def _on_cut(rho: float, zz: np.ndarray) -> np.ndarray:
    if rho > 0:
        return (zz.imag == 0) & (np.abs(zz.real) <= 2 * math.sqrt(rho))
    if rho < 0:
        return (zz.real == 0) & (np.abs(zz.imag) <= 2 * math.sqrt(-rho))
    return zz == 0


def branch_sqrt(rho: float, z):
    """Branch of ``sqrt(z^2 - 4 rho)`` asymptotic to ``z`` at infinity."""
    rho = _check_rho(rho)
    zz = np.asarray(z, dtype=complex)
    if rho == 0:
        return _scalar_out(zz.copy(), z)
    if np.any(_on_cut(rho, zz)):
        raise BranchError(f"z lies on the branch cut for rho={rho}")
    return _scalar_out(zz * np.sqrt(1.0 - 4.0 * rho / (zz * zz)), z)


def _require_outside(rho: float, z) -> None:
    if np.any(in_ellipse(rho, z)):
        raise DomainError(f"z must lie strictly outside E_rho (rho={rho})")


def _m_unchecked(rho: float, zz: np.ndarray) -> np.ndarray:
    if rho == 0:
        return -1.0 / zz
    s = zz * np.sqrt(1.0 - 4.0 * rho / (zz * zz))
    # (-z + s) / (2 rho) rewritten to avoid cancellation
    return -2.0 / (zz + s)


def m_of_z(rho: float, z):
    """``m(z)`` for ``z`` outside ``E_rho``; raises :class:`DomainError` otherwise."""
    rho = _check_rho(rho)
    _require_outside(rho, z)
    return _scalar_out(_m_unchecked(rho, np.asarray(z, dtype=complex)), z)


def m2_of_z(rho: float, z):
    """The other root ``(-z - sqrt(z^2 - 4 rho)) / (2 rho)``; undefined for ``rho = 0``."""
    rho = _check_rho(rho)
    if rho == 0:
        raise DomainError("the second branch does not exist for rho = 0")
    _require_outside(rho, z)
    zz = np.asarray(z, dtype=complex)
    s = zz * np.sqrt(1.0 - 4.0 * rho / (zz * zz))
    return _scalar_out((-zz - s) / (2.0 * rho), z)


def outlier_map(rho: float, lam):
    """``H(lambda) = lambda + rho / lambda``."""
    rho = _check_rho(rho)
    ll = np.asarray(lam, dtype=complex)
    if np.any(ll == 0):
        raise DomainError("outlier map undefined at lambda = 0")
    return _scalar_out(ll + rho / ll, lam)


def inverse_outlier_map(rho: float, z) -> complex:
    """Root of ``lambda^2 - z lambda + rho = 0`` with ``|lambda| > 1``.

    The product of the two roots is ``rho``, so at most one root can have
    modulus above 1.
    """
    rho = _check_rho(rho)
    z = complex(z)
    sq = np.sqrt(complex(z * z - 4.0 * rho))
    big = (z + sq) / 2 if abs(z + sq) >= abs(z - sq) else (z - sq) / 2
    if abs(big) <= 1.0:
        raise NoOutlierPreimageError(f"no root of modulus > 1 for z={z}, rho={rho}")
    return complex(big)


@dataclass(frozen=True)
class OutlierPrediction:
    """Predicted outlier locations for a set of perturbation eigenvalues.

    ``band_violation`` is set when some ``|lambda| > 1`` has
    ``H(lambda)`` in ``E_{rho,3 delta} minus E_{rho,delta}``; the outlier
    count guarantee does not apply at that ``delta``.
    """

    predicted: list[complex]
    j: int
    band_violation: bool
    sources: list[complex] = field(default_factory=list)
    in_band: list[complex] = field(default_factory=list)
    absorbed: list[complex] = field(default_factory=list)


def predict_outliers(rho: float, eigs: Iterable[complex], delta: float) -> OutlierPrediction:
    rho = _check_rho(rho)
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    predicted, sources, in_band, absorbed = [], [], [], []
    for lam in eigs:
        lam = complex(lam)
        if abs(lam) <= 1.0:
            continue
        h = lam + rho / lam
        d = float(dist_to_ellipse(rho, h))
        if d > 3 * delta:
            predicted.append(h)
            sources.append(lam)
        elif d > delta:
            in_band.append(lam)
        else:
            absorbed.append(lam)
    return OutlierPrediction(
        predicted=predicted,
        j=len(predicted),
        band_violation=bool(in_band),
        sources=sources,
        in_band=in_band,
        absorbed=absorbed,
    )


def g_of_z(rho: float, eigs: Sequence[complex], z):
    """``prod_i (1 + m(z) lambda_i)``."""
    m = np.asarray(m_of_z(rho, z))
    out = np.ones_like(m, dtype=complex)
    for lam in eigs:
        out = out * (1.0 + m * complex(lam))
    return _scalar_out(out, z)


def branch_gap(rho: float, z) -> float:
    """``|m(z) - m2(z)| = |sqrt(z^2 - 4 rho)| / |rho|``; ``inf`` for ``rho = 0``."""
    rho = _check_rho(rho)
    if rho == 0:
        return math.inf
    return float(abs(branch_sqrt(rho, complex(z)))) / abs(rho)


@dataclass(frozen=True)
class StabilityReport:
    m_abs: float
    branch_gap: float
    distance: float
    m_bounds_ok: bool
    gap_ok: bool


def stability_check(rho: float, z: complex, delta: float) -> StabilityReport:
    """Lower/upper bounds on ``|m|`` and separation of the two branches.

    Outside ``E_rho``, ``m = -1/lambda`` with ``lambda = H^{-1}(z)``, hence
    ``1/(1+|z|) <= |m| < 1``.  The branch gap should be at least ``delta/|rho|``.
    """
    rho = _check_rho(rho)
    z = complex(z)
    m = complex(m_of_z(rho, z))
    gap = branch_gap(rho, z)
    ma = abs(m)
    return StabilityReport(
        m_abs=ma,
        branch_gap=gap,
        distance=float(dist_to_ellipse(rho, z)),
        m_bounds_ok=1.0 / (1.0 + abs(z)) - 1e-14 <= ma < 1.0,
        gap_ok=rho == 0 or gap >= delta / abs(rho),
    )


@dataclass(frozen=True)
class LimitFunctions:
    """Bundle of the limit maps at a fixed ``rho``."""

    rho: float

    def m(self, z):
        return m_of_z(self.rho, z)

    def m2(self, z):
        return m2_of_z(self.rho, z)

    def H(self, lam):
        return outlier_map(self.rho, lam)

    def H_inv(self, z):
        return inverse_outlier_map(self.rho, z)

    def g(self, eigs, z):
        return g_of_z(self.rho, eigs, z)

    def residual(self, z):
        m = np.asarray(self.m(z))
        return np.abs(self.rho * m * m + np.asarray(z) * m + 1.0)


def m_grid_rows(rho: float, zs: Iterable[complex]) -> list[tuple[float, float, float, float, float]]:
    """Rows ``(re_z, im_z, re_m, im_m, residual)`` for points outside ``E_rho``."""
    zz = np.asarray(list(zs), dtype=complex)
    m = np.asarray(m_of_z(rho, zz))
    res = np.abs(rho * m * m + zz * m + 1.0)
    return [(z.real, z.imag, v.real, v.imag, float(r)) for z, v, r in zip(zz, m, res)]


def write_m_grid_csv(rho: float, zs: Iterable[complex], path) -> None:
    rows = m_grid_rows(rho, zs)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re_z", "im_z", "re_m", "im_m", "residual"])
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
