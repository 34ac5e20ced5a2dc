"""Sampling of elliptic matrices, deterministic low-rank perturbations, Hermitization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .atoms import AtomPairSpec, TruncatedAtomSpec, sample_diagonal, sample_pairs
from .errors import ConfigurationError, DimensionError, RankError

__all__ = [
    "EllipticMatrix",
    "PerturbationSpec",
    "LowRankFactors",
    "sample_elliptic",
    "build_perturbation",
    "factor_low_rank",
    "hermitize",
    "row_generator",
]

AnySpec = Union[AtomPairSpec, TruncatedAtomSpec]

# spawn-key tags that separate the off-diagonal row streams from the diagonal
_ROW_STREAM = 0
_DIAG_STREAM = 1


def row_generator(seed: int, tag: int, index: int) -> np.random.Generator:
    """Independent stream keyed by ``(seed, tag, index)``, not by draw order."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(tag, index))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class EllipticMatrix:
    """A sampled ``Y_N`` together with everything needed to reproduce it.

    ``entries`` is read-only.  ``X`` is the normalized matrix ``Y / sqrt(n)``.
    """

    n: int
    entries: np.ndarray = field(repr=False)
    seed: int
    spec: AnySpec

    @cached_property
    def X(self) -> np.ndarray:
        out = self.entries / math.sqrt(self.n)
        out.setflags(write=False)
        return out

    def to_binary(self, path) -> None:
        """Write ``n`` as int64 followed by the row-major float64 entries."""
        with open(path, "wb") as fh:
            np.array([self.n], dtype="<i8").tofile(fh)
            np.ascontiguousarray(self.entries, dtype="<f8").tofile(fh)

    @staticmethod
    def read_binary(path) -> np.ndarray:
        raw = Path(path).read_bytes()
        n = int(np.frombuffer(raw[:8], dtype="<i8")[0])
        return np.frombuffer(raw[8:], dtype="<f8").reshape(n, n).copy()

    def to_csv(self, path) -> None:
        np.savetxt(path, self.entries, delimiter=",", fmt="%.17g")


def sample_elliptic(n: int, spec: AnySpec, seed: int) -> EllipticMatrix:
    """Sample an ``n x n`` elliptic matrix.

    Row ``i`` draws its pairs ``(y_ij, y_ji)``, ``j > i``, from a stream keyed
    by ``(seed, i)``, so the result does not depend on fill order.
    """
    n = int(n)
    if n < 1:
        raise DimensionError(f"n must be positive, got {n}")
    Y = np.empty((n, n), dtype=float)
    truncated = isinstance(spec, TruncatedAtomSpec)
    for i in range(n - 1):
        rng = row_generator(seed, _ROW_STREAM, i)
        m = n - 1 - i
        if truncated:
            x1, x2 = spec.sample_pairs(rng, m)
        else:
            x1, x2 = sample_pairs(spec, rng, m)
        Y[i, i + 1 :] = x1
        Y[i + 1 :, i] = x2
    if truncated:
        np.fill_diagonal(Y, 0.0)
    else:
        np.fill_diagonal(Y, sample_diagonal(spec, row_generator(seed, _DIAG_STREAM, 0), n))
    Y.setflags(write=False)
    return EllipticMatrix(n=n, entries=Y, seed=int(seed), spec=spec)


def _c2j(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _j2c(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


@dataclass(frozen=True)
class LowRankFactors:
    """``C = A @ B`` with ``A`` of shape ``(n, k)`` and ``B`` of shape ``(k, n)``."""

    A: np.ndarray
    B: np.ndarray

    @property
    def k(self) -> int:
        return self.A.shape[1]

    def product(self) -> np.ndarray:
        return self.A @ self.B


@dataclass(frozen=True)
class PerturbationSpec:
    """A bounded-rank deterministic perturbation.

    kinds:
      ``diagonal_eigs``  diag(eigs, 0, ..., 0)
      ``rank_one``       u v^*  (u, v given as complex vectors of length n)
      ``mean_shift``     every entry equal to mu / sqrt(n)
    """

    kind: str
    eigs: tuple[complex, ...] = ()
    u: tuple[complex, ...] | None = None
    v: tuple[complex, ...] | None = None
    mu: complex = 0j

    def __post_init__(self):
        if self.kind not in ("diagonal_eigs", "rank_one", "mean_shift"):
            raise ConfigurationError(f"unknown perturbation kind {self.kind!r}")
        object.__setattr__(self, "eigs", tuple(complex(e) for e in self.eigs))
        object.__setattr__(self, "mu", complex(self.mu))
        if self.kind == "rank_one":
            if self.u is None or self.v is None or len(self.u) != len(self.v):
                raise ConfigurationError("rank_one needs u and v of equal length")
            object.__setattr__(self, "u", tuple(complex(x) for x in self.u))
            object.__setattr__(self, "v", tuple(complex(x) for x in self.v))

    @property
    def k(self) -> int:
        if self.kind == "diagonal_eigs":
            return len(self.eigs)
        if self.kind == "rank_one":
            return 1
        return 1 if self.mu != 0 else 0

    def nonzero_eigenvalues(self, n: int) -> list[complex]:
        """Nonzero eigenvalues of ``C_N`` (used by the outlier predictor)."""
        if self.kind == "diagonal_eigs":
            return [e for e in self.eigs if e != 0]
        if self.kind == "rank_one":
            lam = complex(np.vdot(np.asarray(self.v), np.asarray(self.u)))
            return [lam] if lam != 0 else []
        return [self.mu * math.sqrt(n)] if self.mu != 0 else []

    def factors(self, n: int) -> LowRankFactors:
        """Exact factors without an SVD."""
        _check_fits(n, self)
        if self.kind == "diagonal_eigs":
            k = len(self.eigs)
            A = np.zeros((n, k), dtype=complex)
            B = np.zeros((k, n), dtype=complex)
            A[np.arange(k), np.arange(k)] = self.eigs
            B[np.arange(k), np.arange(k)] = 1.0
            return LowRankFactors(A, B)
        if self.kind == "rank_one":
            u = np.asarray(self.u, dtype=complex)
            v = np.asarray(self.v, dtype=complex)
            return LowRankFactors(u[:, None].copy(), v.conj()[None, :].copy())
        if self.mu == 0:
            return LowRankFactors(np.zeros((n, 0), complex), np.zeros((0, n), complex))
        phi = np.full(n, 1.0 / math.sqrt(n), dtype=complex)
        return LowRankFactors((self.mu * math.sqrt(n) * phi)[:, None], phi[None, :])

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "diagonal_eigs":
            d["eigs"] = [_c2j(e) for e in self.eigs]
        elif self.kind == "rank_one":
            d["u"] = [_c2j(x) for x in self.u]
            d["v"] = [_c2j(x) for x in self.v]
        else:
            d["mu"] = _c2j(self.mu)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PerturbationSpec":
        kind = d["kind"]
        if kind == "diagonal_eigs":
            return cls(kind, eigs=tuple(_j2c(e) for e in d.get("eigs", [])))
        if kind == "rank_one":
            return cls(kind, u=tuple(_j2c(x) for x in d["u"]), v=tuple(_j2c(x) for x in d["v"]))
        return cls(kind, mu=_j2c(d.get("mu", 0)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "PerturbationSpec":
        return cls.from_dict(json.loads(s))


def _check_fits(n: int, p: PerturbationSpec) -> None:
    if p.kind == "diagonal_eigs" and len(p.eigs) > n:
        raise DimensionError(f"{len(p.eigs)} eigenvalues do not fit in dimension {n}")
    if p.kind == "rank_one" and len(p.u) != n:
        raise DimensionError(f"rank_one vectors have length {len(p.u)}, expected {n}")


def build_perturbation(n: int, p: PerturbationSpec) -> np.ndarray:
    """Dense complex ``C_N``."""
    _check_fits(n, p)
    if p.kind == "diagonal_eigs":
        C = np.zeros((n, n), dtype=complex)
        k = len(p.eigs)
        C[np.arange(k), np.arange(k)] = p.eigs
        return C
    if p.kind == "rank_one":
        return np.outer(np.asarray(p.u, complex), np.asarray(p.v, complex).conj())
    return np.full((n, n), p.mu / math.sqrt(n), dtype=complex)


def factor_low_rank(C: np.ndarray, tol: float = 1e-12, k: int | None = None) -> LowRankFactors:
    """Truncated SVD factors ``A = U_r S_r``, ``B = V_r^*``.

    ``r`` is the numerical rank at relative tolerance ``tol``; a
    :class:`RankError` is raised if it exceeds ``k``.
    """
    C = np.asarray(C, dtype=complex)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {C.shape}")
    n = C.shape[0]
    U, s, Vh = np.linalg.svd(C)
    r = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    if k is not None and r > k:
        raise RankError(f"numerical rank {r} exceeds the bound k={k}")
    if r == 0:
        return LowRankFactors(np.zeros((n, 0), complex), np.zeros((0, n), complex))
    return LowRankFactors(U[:, :r] * s[:r], Vh[:r].copy())


def hermitize(X: np.ndarray, z: complex) -> np.ndarray:
    """The ``2n x 2n`` Hermitian matrix ``[[0, X - z], [(X - z)^*, 0]]``."""
    X = np.asarray(X)
    n = X.shape[0]
    M = X.astype(complex) - z * np.eye(n)
    H = np.zeros((2 * n, 2 * n), dtype=complex)
    H[:n, n:] = M
    H[n:, :n] = M.conj().T
    return H


def as_perturbation_eigs(values: Sequence[complex]) -> PerturbationSpec:
    return PerturbationSpec("diagonal_eigs", eigs=tuple(values))
