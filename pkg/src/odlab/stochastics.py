"""Deterministic random streams and small Gaussian utilities.

The random stream is counter based: output k depends only on (seed, k), so
any contiguous slice of the stream can be generated independently and
concurrent consumers stay reproducible as long as they use disjoint counter
ranges.  Standard normals come from the Box-Muller transform, two uniforms
per pair, so sample i of a 2-D draw consumes counters 2i and 2i+1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DecompositionError, InvalidParameterError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 2.0 ** -53


def _splitmix64(state: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on a uint64 state array (wraps mod 2**64)."""
    z = (state ^ (state >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class RngStream:
    """Value-semantics random stream: (seed, counter) fully determine output.

    Methods never mutate; use :meth:`advance` to obtain the follow-up stream
    after consuming draws.
    """

    seed: int
    counter: int = 0

    def __post_init__(self):
        if not (0 <= self.counter):
            raise InvalidParameterError("counter must be non-negative")

    def advance(self, n: int) -> "RngStream":
        return RngStream(self.seed, self.counter + int(n))

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles in [0, 1), from counters [counter, counter + n)."""
        if n < 0:
            raise InvalidParameterError("n must be non-negative")
        k = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        state = np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF) + k * _GOLDEN
        z = _splitmix64(state)
        return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def normal_pairs(self, n: int) -> np.ndarray:
        """n independent standard-normal pairs, shape (n, 2).

        Pair i consumes the two uniforms at counters (2i, 2i+1) relative to
        this stream, so the draw costs 2n counters.
        """
        u = self.uniforms(2 * n)
        u1, u2 = u[0::2], u[1::2]
        # 1 - u1 lies in (0, 1], keeping the log argument away from zero
        r = np.sqrt(-2.0 * np.log1p(-u1))
        ang = (2.0 * math.pi) * u2
        return np.column_stack((r * np.cos(ang), r * np.sin(ang)))

    def normals(self, n: int) -> np.ndarray:
        """n standard normals (consumes 2*ceil(n/2) counters)."""
        pairs = self.normal_pairs((n + 1) // 2)
        return pairs.reshape(-1)[:n]


# --- 2x2 symmetric linear algebra -----------------------------------------


def eig_sym2(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric 2x2 matrix.

    Returns (eigvals, eigvecs) with eigvals sorted descending and eigvecs
    holding the matching unit eigenvectors as columns.
    """
    m = np.asarray(m, dtype=float)
    a, b, c = m[0, 0], m[0, 1], m[1, 1]
    if not np.all(np.isfinite(m)):
        raise InvalidParameterError("matrix entries must be finite")
    if abs(m[0, 1] - m[1, 0]) > 1e-12 * (1.0 + abs(b)):
        raise InvalidParameterError("matrix must be symmetric")
    half_tr = 0.5 * (a + c)
    disc = math.hypot(0.5 * (a - c), b)
    lam1, lam2 = half_tr + disc, half_tr - disc
    if disc == 0.0:
        vecs = np.eye(2)
    elif abs(b) > 0.0:
        # both rows of (A - lam1*I) give an eigenvector; cancellation can
        # reduce either one to noise, so keep whichever has the larger norm
        cand_a = np.array([b, lam1 - a])
        cand_c = np.array([lam1 - c, b])
        na = cand_a[0] * cand_a[0] + cand_a[1] * cand_a[1]
        nc = cand_c[0] * cand_c[0] + cand_c[1] * cand_c[1]
        v1 = cand_a if na >= nc else cand_c
        v1 = v1 / math.hypot(v1[0], v1[1])
        vecs = np.column_stack((v1, np.array([-v1[1], v1[0]])))
    else:
        vecs = np.eye(2) if a >= c else np.array([[0.0, 1.0], [1.0, 0.0]])
    return np.array([lam1, lam2]), vecs


def sqrt_spd2(m: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor L of a 2x2 SPD matrix, L @ L.T = m."""
    m = np.asarray(m, dtype=float)
    a, b, c = m[0, 0], m[0, 1], m[1, 1]
    if not np.all(np.isfinite(m)):
        raise InvalidParameterError("matrix entries must be finite")
    if abs(m[0, 1] - m[1, 0]) > 1e-12 * (1.0 + abs(b)):
        raise InvalidParameterError("matrix must be symmetric")
    if a <= 0.0:
        raise DecompositionError("matrix is not positive definite (m[0,0] <= 0)")
    l11 = math.sqrt(a)
    l21 = b / l11
    rem = c - l21 * l21
    if rem <= 0.0:
        raise DecompositionError("matrix is not positive definite (Schur complement <= 0)")
    return np.array([[l11, 0.0], [l21, math.sqrt(rem)]])


# --- Bivariate Gaussian -----------------------------------------------------


@dataclass(frozen=True)
class Gaussian2D:
    """Bivariate normal with mean (2,) and SPD covariance (2, 2)."""

    mean: np.ndarray
    cov: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(2)
        cov = np.asarray(self.cov, dtype=float).reshape(2, 2)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidParameterError("mean and covariance must be finite")
        object.__setattr__(self, "_chol", sqrt_spd2(cov))  # validates SPD

    def pdf(self, x: np.ndarray) -> np.ndarray:
        """Density at points x of shape (..., 2)."""
        x = np.asarray(x, dtype=float)
        d = x - self.mean
        a, b, c = self.cov[0, 0], self.cov[0, 1], self.cov[1, 1]
        det = a * c - b * b
        quad = (c * d[..., 0] ** 2 - 2.0 * b * d[..., 0] * d[..., 1] + a * d[..., 1] ** 2) / det
        return np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))

    def log_pdf(self, x: np.ndarray) -> np.ndarray:
        """Log density at points x of shape (..., 2); finite far into the tails."""
        x = np.asarray(x, dtype=float)
        d = x - self.mean
        a, b, c = self.cov[0, 0], self.cov[0, 1], self.cov[1, 1]
        det = a * c - b * b
        quad = (c * d[..., 0] ** 2 - 2.0 * b * d[..., 0] * d[..., 1] + a * d[..., 1] ** 2) / det
        return -0.5 * quad - math.log(2.0 * math.pi) - 0.5 * math.log(det)

    def sample(self, n: int, rng: RngStream) -> np.ndarray:
        """n samples, shape (n, 2); consumes 2n counters of rng."""
        z = rng.normal_pairs(n)
        return self.mean + z @ self._chol.T


def sample_gaussian2d(g: Gaussian2D, n: int, rng: RngStream) -> np.ndarray:
    return g.sample(n, rng)


def pdf_gaussian2d(g: Gaussian2D, x: np.ndarray) -> np.ndarray:
    return g.pdf(x)
