"""Integer lattice point sets, interaction sums and the admissibility ratio."""

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError


@dataclass(frozen=True)
class Lattice:
    """Distinct integer points of Z^k, sorted lexicographically.

    Points live in R^k x {0}; ``embedded`` returns them padded to R^N and
    scaled by L.
    """

    k: int
    points: tuple
    L: float = 1.0
    selection: str = "explicit-list"
    radius: int = 0

    def __post_init__(self):
        if len(self.points) != len(set(self.points)):
            raise ConfigError("lattice points must be pairwise distinct (duplicate found)")

    @property
    def n(self):
        return len(self.points)

    def array(self):
        return np.array(self.points, dtype=np.float64).reshape(self.n, self.k)

    def embedded(self, N):
        out = np.zeros((self.n, N))
        out[:, : self.k] = self.L * self.array()
        return out

    def with_L(self, L):
        return Lattice(self.k, self.points, float(L), self.selection, self.radius)

    def mirror_map(self):
        """Index permutation under z -> -z, or None if the set is not symmetric."""
        where = {p: i for i, p in enumerate(self.points)}
        perm = []
        for p in self.points:
            q = tuple(-c for c in p)
            if q not in where:
                return None
            perm.append(where[q])
        return np.array(perm)


def _check_k(k, N, m):
    if N is None:
        return
    if not 1 <= k < 0.5 * (N - 2 * m):
        raise ConfigError(f"lattice dimension must satisfy 1 <= k < (N-2m)/2 = {0.5 * (N - 2 * m)}, got k={k}")


def generate(k, selection="full-box", radius=1, points=None, N=None, m=1, L=1.0):
    """Build a lattice.

    ``selection="full-box"`` gives every point of {-radius..radius}^k;
    ``selection="explicit-list"`` takes ``points`` (integer tuples).
    Passing N (and m) enforces 1 <= k < (N-2m)/2.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    _check_k(k, N, m)
    if selection == "full-box":
        if radius < 1:
            raise ConfigError(f"box radius must be >= 1, got {radius}")
        pts = list(itertools.product(range(-radius, radius + 1), repeat=k))
    elif selection == "explicit-list":
        if points is None:
            raise ConfigError("explicit-list selection needs points")
        pts = []
        for p in points:
            t = tuple(int(c) for c in np.atleast_1d(p))
            if len(t) != k:
                raise ConfigError(f"point {p} does not have k={k} coordinates")
            if any(int(c) != c for c in np.atleast_1d(p)):
                raise ConfigError(f"point {p} is not an integer vector")
            pts.append(t)
        if len(pts) != len(set(pts)):
            raise ConfigError("lattice points must be pairwise distinct (duplicate found)")
    else:
        raise ConfigError(f"unknown selection {selection!r}")
    return Lattice(k, tuple(sorted(pts)), float(L), selection, int(radius) if selection == "full-box" else 0)


def interaction_sums(lat, exponent, backend=None):
    """sum_{i != j} |P~_i - P~_j|^(-exponent) for every j."""
    return _kernels.pairwise_rowsums(lat.array(), exponent, backend=backend)


def admissibility_ratio(lat, tau):
    """max_j / min_j of the interaction sums with exponent tau."""
    if lat.n < 2:
        raise ValueError("admissibility ratio needs at least two points")
    if not tau > lat.k:
        raise ValueError(f"tau must exceed k={lat.k}, got {tau}")
    sums = interaction_sums(lat, tau)
    return float(sums.max() / sums.min())


@dataclass(frozen=True)
class InteractionMatrix:
    d: np.ndarray
    row_sums: np.ndarray

    @property
    def n(self):
        return self.d.shape[0]

    @property
    def c0(self):
        return float(self.row_sums.min())

    @property
    def c1(self):
        return float(self.row_sums.max())


def interaction_matrix(lat, N, m):
    """d_ij = |P~_i - P~_j|^-(N-2m), zero diagonal."""
    if not N > 2 * m:
        raise ConfigError(f"need N > 2m, got N={N}, m={m}")
    P = lat.array()
    diff = P[:, None, :] - P[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    with np.errstate(divide="ignore"):
        d = np.where(dist > 0, dist ** (-(N - 2 * m)), 0.0)
    rows = _kernels.pairwise_rowsums(P, N - 2 * m)
    return InteractionMatrix(d, rows)


def matrix_from_array(d):
    """Wrap an arbitrary symmetric nonnegative matrix with zero diagonal."""
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("interaction matrix must be square")
    if not np.allclose(d, d.T, rtol=0, atol=0):
        raise ValueError("interaction matrix must be symmetric")
    if np.any(np.diag(d) != 0):
        raise ValueError("interaction matrix must have zero diagonal")
    off = d[~np.eye(d.shape[0], dtype=bool)]
    if np.any(off <= 0):
        raise ValueError("off-diagonal interaction entries must be positive")
    return InteractionMatrix(d, d.sum(axis=1))


def tail_bound(k, exponent, R):
    """Upper bound for sum_{z in Z^k, |z|_inf > R} |z|^-exponent.

    Shell counting: the sup-norm shell at radius t has (2t+1)^k - (2t-1)^k
    points, each at Euclidean distance >= t. Summed to a cutoff, then an
    integral tail for the remainder.
    """
    if not exponent > k:
        raise ValueError(f"tail diverges unless exponent > k ({exponent} <= {k})")
    total = 0.0
    T = max(4 * R, R + 1000)
    for t in range(R + 1, T + 1):
        total += ((2 * t + 1) ** k - (2 * t - 1) ** k) * float(t) ** (-exponent)
    # shell count <= 2k (2t+1)^(k-1) * 2 <= 4k 3^(k-1) t^(k-1) for t >= 1
    const = 4 * k * 3 ** (k - 1)
    total += const * float(T) ** (k - exponent) / (exponent - k)
    return total


def periodic_row_sum(k, exponent, terms=200):
    """Epstein-type sum over Z^k minus origin of |z|^-exponent, by box truncation plus tail bound.

    Returns (value, error_bound).
    """
    P = generate(k, "full-box", radius=terms).array()
    dist = np.sqrt((P ** 2).sum(axis=1))
    vals = np.sort(dist[dist > 0] ** (-exponent))
    return float(np.sum(vals)), tail_bound(k, exponent, terms)
