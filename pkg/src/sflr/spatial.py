"""Lattice sites, isotropic covariance kernels and Gaussian field sampling."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional

import numpy as np
from scipy.spatial.distance import cdist

MAX_SITES = 50_000


class CovarianceNotPSDError(np.linalg.LinAlgError):
    """Raised when a covariance matrix cannot be factorised even with jitter."""


@dataclass(frozen=True, eq=False)
class SiteGrid:
    """Sites of ``{1, ..., n}^d`` in lexicographic order.

    ``sites`` has shape ``(n**d, d)``; row ``l`` is the ``l``-th site in
    lexicographic order.  ``extra`` holds optional off-lattice points such
    as a prediction target.
    """

    n: int
    d: int
    sites: np.ndarray
    extra: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    def __len__(self) -> int:
        return self.sites.shape[0]

    def with_extra(self, points) -> "SiteGrid":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.d:
            raise ValueError(f"extra sites must have dimension {self.d}")
        return SiteGrid(self.n, self.d, self.sites, pts)


def make_grid(n: int, d: int = 2, max_sites: int = MAX_SITES) -> SiteGrid:
    """Regular lattice ``{1..n}^d`` flattened in lexicographic order.

    >>> make_grid(2, 2).sites.tolist()
    [[1, 1], [1, 2], [2, 1], [2, 2]]
    """
    if n < 1 or d < 1:
        raise ValueError(f"n and d must be >= 1, got n={n}, d={d}")
    if n**d > max_sites:
        raise ValueError(f"grid of {n}^{d} = {n**d} sites exceeds the budget of {max_sites}")
    sites = np.array(list(itertools.product(range(1, n + 1), repeat=d)), dtype=int)
    sites.setflags(write=False)
    return SiteGrid(n=n, d=d, sites=sites)


def min_site_distance(a, b) -> float:
    """Smallest Euclidean distance between two nonempty site sets."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("site sets must be nonempty")
    return float(cdist(a, b).min())


@dataclass(frozen=True)
class CovarianceSpec:
    """Isotropic spatial covariance model.

    ``exponential``: ``sill * exp(-rate * h)``.
    ``constant``: every entry equal to ``level``.
    ``separable``: ``temporal(|t - u|) * spatial(h)`` with ``spatial(0) == 1``;
    only the spatial factor enters :func:`covariance_matrix`.
    """

    kind: Literal["exponential", "constant", "separable"] = "exponential"
    rate: float = 3.0
    level: float = 0.0
    sill: float = 1.0
    spatial: Optional[Callable] = None
    temporal: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in ("exponential", "constant", "separable"):
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if self.kind == "separable":
            if self.spatial is None or self.temporal is None:
                raise ValueError("separable covariance needs spatial and temporal kernels")
            if not np.isclose(float(self.spatial(0.0)), 1.0):
                raise ValueError("spatial kernel must satisfy spatial(0) == 1")

    @classmethod
    def exponential(cls, rate: float = 3.0, sill: float = 1.0) -> "CovarianceSpec":
        return cls(kind="exponential", rate=rate, sill=sill)

    @classmethod
    def constant(cls, level: float) -> "CovarianceSpec":
        return cls(kind="constant", level=level)

    def kernel(self, h):
        """Covariance as a function of distance ``h``."""
        h = np.asarray(h, dtype=float)
        if self.kind == "exponential":
            return self.sill * np.exp(-self.rate * h)
        if self.kind == "constant":
            return np.full(h.shape, float(self.level))
        return np.asarray(self.spatial(h), dtype=float) * np.ones(h.shape)


def covariance_matrix(spec: CovarianceSpec, grid, other=None) -> np.ndarray:
    """Covariance between sites of ``grid`` (and ``other`` if given).

    ``grid`` and ``other`` may be :class:`SiteGrid` instances or plain
    coordinate arrays.  With ``other`` omitted the result is exactly
    symmetric.
    """
    a = grid.sites if isinstance(grid, SiteGrid) else np.atleast_2d(grid)
    if len(a) == 0:
        raise ValueError("grid must be nonempty")
    if other is None:
        cov = spec.kernel(cdist(a, a))
        return 0.5 * (cov + cov.T)
    b = other.sites if isinstance(other, SiteGrid) else np.atleast_2d(other)
    return spec.kernel(cdist(a, b))


def separable_covariance(spec: CovarianceSpec, grid, times) -> np.ndarray:
    """Full space-time covariance ``g(|t-u|) Psi(h)`` ordered site-major."""
    if spec.kind != "separable":
        raise ValueError("separable_covariance requires a separable spec")
    times = np.asarray(times, dtype=float)
    g = np.asarray(spec.temporal(np.abs(times[:, None] - times[None, :])), dtype=float)
    return np.kron(covariance_matrix(spec, grid), g)


def summability_partial_sums(psi: Callable, d: int, terms: int = 1000) -> np.ndarray:
    """Partial sums of ``sum_t t^(d-1) psi(t)``, ``t = 1..terms``.

    A flattening tail suggests (but cannot prove) that the series converges.
    """
    t = np.arange(1, terms + 1, dtype=float)
    return np.cumsum(t ** (d - 1) * np.asarray(psi(t), dtype=float))


def as_generator(seed) -> np.random.Generator:
    """Coerce ``seed`` into a Philox-backed generator.

    Existing generators pass through unchanged; integers, sequences of
    integers and :class:`numpy.random.SeedSequence` objects seed a new one.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def stream(master_seed: int, *keys: int) -> np.random.Generator:
    """Independent generator keyed by ``(master_seed, *keys)``.

    Streams depend only on the key tuple, never on the order in which they
    are requested.
    """
    return as_generator(np.random.SeedSequence([int(master_seed), *map(int, keys)]))


def gaussian_factor(cov, max_escalations: int = 3) -> np.ndarray:
    """Lower Cholesky factor of ``cov``, adding diagonal jitter on failure.

    Jitter starts at ``1e-10 * trace / dim`` and grows by a factor 100 for
    up to ``max_escalations`` further attempts.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("covariance must be a square matrix")
    dim = cov.shape[0]
    if not np.any(cov):
        return np.zeros_like(cov)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-10 * abs(np.trace(cov)) / dim
    for _ in range(max_escalations + 1):
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(dim))
        except np.linalg.LinAlgError:
            jitter *= 100.0
    raise CovarianceNotPSDError("covariance not PSD: factorisation failed after jitter escalation")


def sample_gaussian(cov, seed, size: Optional[int] = None, factor=None) -> np.ndarray:
    """Draw mean-zero Gaussian vectors with covariance ``cov``.

    Parameters
    ----------
    cov : array_like, shape (k, k)
        Symmetric covariance matrix.
    seed : int, SeedSequence or Generator
        Randomness source; a generator is advanced in place.
    size : int, optional
        Number of independent draws. ``None`` returns a single vector.
    factor : ndarray, optional
        Precomputed output of :func:`gaussian_factor` for ``cov``.

    Returns
    -------
    ndarray of shape ``(k,)`` or ``(size, k)``.
    """
    rng = as_generator(seed)
    L = gaussian_factor(cov) if factor is None else factor
    k = L.shape[0]
    z = rng.standard_normal((1 if size is None else size, k))
    out = z @ L.T
    return out[0] if size is None else out
