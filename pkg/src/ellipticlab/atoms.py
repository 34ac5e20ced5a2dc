"""Correlated atom pairs, diagonal atoms and their truncation.

An atom law is the joint law of ``(xi_1, xi_2)``: both coordinates have mean
zero and unit variance and ``E[xi_1 xi_2] = rho``.  Off-diagonal pairs
``(y_ij, y_ji)`` of an elliptic matrix are iid copies of it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate, stats

from .errors import ConfigurationError, TruncationLevelError

__all__ = [
    "FAMILIES",
    "DIAG_FAMILIES",
    "AtomPairSpec",
    "TruncatedAtomSpec",
    "AtomMoments",
    "sample_atom_pair",
    "sample_pairs",
    "sample_diagonal",
    "truncate_atoms",
    "atom_moments",
]

FAMILIES = ("gaussian", "rademacher_mixture", "uniform_pair", "custom_table")
DIAG_FAMILIES = ("same_as_offdiag_marginal", "zero", "gaussian")

_TABLE_TOL = 1e-12
_QUAD_TOL = 1e-10
_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class AtomPairSpec:
    """Joint law of an off-diagonal pair plus the law of diagonal entries.

    ``custom_table`` rows are ``(x, y, probability)``; the marginal moments
    are validated on construction and ``rho`` must equal the table's
    correlation.
    """

    family: str = "gaussian"
    rho: float = 0.0
    diag_family: str = "same_as_offdiag_marginal"
    table: tuple[tuple[float, float, float], ...] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown atom family {self.family!r}")
        if self.diag_family not in DIAG_FAMILIES:
            raise ConfigurationError(f"unknown diagonal family {self.diag_family!r}")
        rho = float(self.rho)
        if not -1.0 <= rho <= 1.0:
            raise ConfigurationError(f"rho must lie in [-1, 1], got {rho}")
        object.__setattr__(self, "rho", rho)
        if self.family == "custom_table":
            if not self.table:
                raise ConfigurationError("custom_table family requires a table")
            rows = tuple(tuple(float(v) for v in row) for row in self.table)
            if any(len(r) != 3 for r in rows):
                raise ConfigurationError("table rows must be (x, y, probability)")
            object.__setattr__(self, "table", rows)
            _validate_table(np.asarray(rows), rho)
        elif self.table is not None:
            raise ConfigurationError(f"family {self.family!r} takes no table")

    def to_dict(self) -> dict:
        d = {"family": self.family, "rho": self.rho, "diag_family": self.diag_family}
        if self.table is not None:
            d["table"] = [list(r) for r in self.table]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AtomPairSpec":
        table = d.get("table")
        return cls(
            family=d.get("family", "gaussian"),
            rho=d.get("rho", 0.0),
            diag_family=d.get("diag_family", "same_as_offdiag_marginal"),
            table=None if table is None else tuple(tuple(r) for r in table),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "AtomPairSpec":
        return cls.from_dict(json.loads(s))


def _validate_table(t: np.ndarray, rho: float) -> None:
    x, y, p = t[:, 0], t[:, 1], t[:, 2]
    if np.any(p < 0):
        raise ConfigurationError("table probabilities must be nonnegative")
    checks = {
        "total probability": (p.sum(), 1.0),
        "E[x]": (p @ x, 0.0),
        "E[y]": (p @ y, 0.0),
        "E[x^2]": (p @ x**2, 1.0),
        "E[y^2]": (p @ y**2, 1.0),
        "E[xy]": (p @ (x * y), rho),
    }
    for name, (got, want) in checks.items():
        if abs(got - want) > _TABLE_TOL:
            raise ConfigurationError(f"custom table: {name} = {got!r}, expected {want}")


class AtomMoments(NamedTuple):
    mean: float
    var: float
    rho: float
    m4: float


def atom_moments(spec: AtomPairSpec) -> AtomMoments:
    """Closed-form ``(mean, variance, rho, M4)`` of the pair law."""
    if spec.family == "gaussian":
        m4 = 3.0
    elif spec.family == "rademacher_mixture":
        m4 = 1.0
    elif spec.family == "uniform_pair":
        # E x^4 for uniform on [-sqrt3, sqrt3] is 3^2 / 5
        m4 = 9.0 / 5.0
    else:
        t = np.asarray(spec.table)
        m4 = float(max(t[:, 2] @ t[:, 0] ** 4, t[:, 2] @ t[:, 1] ** 4))
    return AtomMoments(0.0, 1.0, spec.rho, m4)


def sample_pairs(spec: AtomPairSpec, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` iid copies of ``(xi_1, xi_2)``."""
    rho = spec.rho
    if spec.family == "gaussian":
        g1 = rng.standard_normal(size)
        g2 = rng.standard_normal(size)
        return g1, rho * g1 + math.sqrt(max(0.0, 1.0 - rho * rho)) * g2
    if spec.family == "rademacher_mixture":
        x1 = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        same = rng.random(size) < (1.0 + rho) / 2.0
        return x1, np.where(same, x1, -x1)
    if spec.family == "uniform_pair":
        # coupled with probability |rho| (x2 = sign(rho) x1), else independent
        x1 = rng.uniform(-_SQRT3, _SQRT3, size)
        other = rng.uniform(-_SQRT3, _SQRT3, size)
        coupled = rng.random(size) < abs(rho)
        return x1, np.where(coupled, math.copysign(1.0, rho) * x1, other)
    if spec.family == "custom_table":
        t = np.asarray(spec.table)
        idx = rng.choice(len(t), size=size, p=t[:, 2] / t[:, 2].sum())
        return t[idx, 0].copy(), t[idx, 1].copy()
    raise ConfigurationError(f"unknown atom family {spec.family!r}")


def sample_atom_pair(spec: AtomPairSpec, rng: np.random.Generator) -> tuple[float, float]:
    """One draw of ``(xi_1, xi_2)``."""
    x1, x2 = sample_pairs(spec, rng, 1)
    return float(x1[0]), float(x2[0])


def sample_diagonal(spec: AtomPairSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    if spec.diag_family == "zero":
        return np.zeros(size)
    if spec.diag_family == "gaussian":
        return rng.standard_normal(size)
    return sample_pairs(spec, rng, size)[0]


@dataclass(frozen=True)
class TruncatedAtomSpec:
    """Truncated, recentred and rescaled version of a base atom law.

    A draw is ``xi_hat_i = scale_i * (xi_i 1{|xi_i| <= L} - center_i)``.
    Diagonal entries of a truncated ensemble are zero.
    """

    base: AtomPairSpec
    level_L: float
    center_1: float
    center_2: float
    scale_1: float
    scale_2: float
    rho_hat: float
    diag_family: str = field(default="zero", init=False)

    @property
    def rho(self) -> float:
        return self.rho_hat

    def sample_pairs(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        x1, x2 = sample_pairs(self.base, rng, size)
        L = self.level_L
        x1 = self.scale_1 * (np.where(np.abs(x1) <= L, x1, 0.0) - self.center_1)
        x2 = self.scale_2 * (np.where(np.abs(x2) <= L, x2, 0.0) - self.center_2)
        return x1, x2

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "level_L": self.level_L,
            "center_1": self.center_1,
            "center_2": self.center_2,
            "scale_1": self.scale_1,
            "scale_2": self.scale_2,
            "rho_hat": self.rho_hat,
        }


def _gauss_truncated_cross(rho: float, L: float) -> float:
    """E[g1 g2 1{|g1|<=L} 1{|g2|<=L}] for a standard normal pair with correlation rho."""
    s = math.sqrt(max(0.0, 1.0 - rho * rho))
    phi, Phi = stats.norm.pdf, stats.norm.cdf
    if s == 0.0:
        val, _ = integrate.quad(lambda x: x * x * phi(x), -L, L, epsabs=_QUAD_TOL, epsrel=1e-12)
        return rho * val

    def inner(x):
        # E[Z 1{|Z|<=L}] with Z ~ N(rho x, s^2)
        mu = rho * x
        hi, lo = (L - mu) / s, (-L - mu) / s
        return x * phi(x) * (mu * (Phi(hi) - Phi(lo)) + s * (phi(lo) - phi(hi)))

    val, _ = integrate.quad(inner, -L, L, epsabs=_QUAD_TOL, epsrel=1e-12, limit=200)
    return val


def truncate_atoms(spec: AtomPairSpec, L: float) -> TruncatedAtomSpec:
    """Centering/scaling constants and correlation of the truncated pair.

    Raises :class:`TruncationLevelError` when a truncated variance is below
    1/2, i.e. ``L`` is too small for the bounds of the truncated ensemble.
    """
    L = float(L)
    if not L > 0:
        raise ConfigurationError(f"truncation level must be positive, got {L}")
    fam = spec.family
    if fam == "gaussian":
        # E[g^2 1{|g|<=L}] = 2 Phi(L) - 1 - 2 L phi(L); symmetric, so no centering
        var = 2.0 * stats.norm.cdf(L) - 1.0 - 2.0 * L * stats.norm.pdf(L)
        c1 = c2 = 0.0
        v1 = v2 = var
        cross = _gauss_truncated_cross(spec.rho, L) if var >= 0.5 else 0.0
    elif fam == "rademacher_mixture":
        kept = 1.0 if L >= 1.0 else 0.0
        c1 = c2 = 0.0
        v1 = v2 = kept
        cross = spec.rho * kept
    elif fam == "uniform_pair":
        a = min(L, _SQRT3)
        var, _ = integrate.quad(lambda x: x * x / (2 * _SQRT3), -a, a, epsabs=_QUAD_TOL)
        c1 = c2 = 0.0
        v1 = v2 = var
        # only the coupled component (probability |rho|) contributes
        cross = spec.rho * var
    elif fam == "custom_table":
        t = np.asarray(spec.table)
        x, y, p = t[:, 0], t[:, 1], t[:, 2]
        xt = np.where(np.abs(x) <= L, x, 0.0)
        yt = np.where(np.abs(y) <= L, y, 0.0)
        c1, c2 = float(p @ xt), float(p @ yt)
        v1 = float(p @ (xt - c1) ** 2)
        v2 = float(p @ (yt - c2) ** 2)
        cross = float(p @ ((xt - c1) * (yt - c2)))
    else:
        raise ConfigurationError(f"unknown atom family {fam!r}")
    if min(v1, v2) < 0.5:
        raise TruncationLevelError(
            f"L={L} below L0: truncated variances ({v1:.3g}, {v2:.3g}) fall under 1/2"
        )
    s1, s2 = 1.0 / math.sqrt(v1), 1.0 / math.sqrt(v2)
    return TruncatedAtomSpec(
        base=spec,
        level_L=L,
        center_1=c1,
        center_2=c2,
        scale_1=s1,
        scale_2=s2,
        rho_hat=cross * s1 * s2,
    )
