"""Eigenvalue spectra of correlation matrices against random-matrix benchmarks.

Two null models are provided:

* the Marchenko-Pastur law for correlation matrices of uncorrelated data
  with ``Q = T / N`` samples per variable, and
* a constant-correlation Wishart ensemble, sampled by Monte Carlo, whose
  population correlation has one off-diagonal value ``x_bar`` (taken from
  a cluster centroid).
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import DiagnosticsError, NumericError, ShapeError, SpecError
from .returns import CorrelationMatrix, pearson_stack

logger = logging.getLogger(__name__)

DEFAULT_MP_BINS = (17, 8, 8, 5)
NEGATIVE_EIG_TOL = 1e-8


@dataclass(frozen=True)
class MpParams:
    q: float
    sigma2: float = 1.0

    def __post_init__(self):
        if self.q <= 0 or self.sigma2 <= 0:
            raise SpecError(f"MP parameters must be positive, got Q={self.q}, sigma2={self.sigma2}")

    @classmethod
    def from_geometry(cls, n_samples: int, n_variables: int, sigma2: float = 1.0) -> "MpParams":
        return cls(q=n_samples / n_variables, sigma2=sigma2)

    @property
    def support(self) -> tuple[float, float]:
        r = 1.0 / np.sqrt(self.q)
        return self.sigma2 * (1 - r) ** 2, self.sigma2 * (1 + r) ** 2

    @property
    def point_mass_at_zero(self) -> float:
        return max(0.0, 1.0 - self.q)


@dataclass(frozen=True)
class WishartEnsembleSpec:
    n: int
    t: int
    x_bar: float
    n_samples: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.t < 2:
            raise SpecError(f"need N >= 2 and T >= 2, got N={self.n}, T={self.t}")
        if self.n_samples < 1:
            raise SpecError("n_samples must be >= 1")
        if not (-1.0 / (self.n - 1) < self.x_bar < 1.0):
            raise SpecError(f"x_bar={self.x_bar} outside (-1/(N-1), 1) for N={self.n}")

    def population_matrix(self) -> np.ndarray:
        return (1 - self.x_bar) * np.eye(self.n) + self.x_bar * np.ones((self.n, self.n))


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    densities: np.ndarray

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.densities * self.widths))


@dataclass(frozen=True)
class EigenSpectrum:
    cluster_id: int
    eigenvalues: np.ndarray
    histogram: Histogram


@dataclass(frozen=True)
class ClusterSpectra:
    cluster_id: int
    n_members: int
    empirical: EigenSpectrum
    mp_params: MpParams
    mp_histogram: Histogram
    x_bar: float
    wishart_eigenvalues: np.ndarray
    wishart_histogram: Histogram
    axis_max: float


def eigenvalues(matrix) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending."""
    a = matrix.entries if isinstance(matrix, CorrelationMatrix) else np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got {a.shape}")
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asym > 1e-9:
        raise ShapeError(f"matrix not symmetric (max asymmetry {asym:g})")
    return np.linalg.eigvalsh(a)


def mean_offdiag(matrix) -> float:
    a = matrix.entries if isinstance(matrix, CorrelationMatrix) else np.asarray(matrix, dtype=float)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n or n < 2:
        raise ShapeError(f"need a square matrix with N >= 2, got {a.shape}")
    return float((a.sum() - np.trace(a)) / (n * (n - 1)))


def mp_density(lam, params: MpParams):
    """Continuous part of the MP density; the Q < 1 atom at zero is excluded."""
    lo, hi = params.support
    x = np.asarray(lam, dtype=float)
    inside = (x > lo) & (x < hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = params.q / (2 * np.pi * params.sigma2 * x) * np.sqrt(np.clip((hi - x) * (x - lo), 0.0, None))
    out = np.where(inside, rho, 0.0)
    return float(out) if out.ndim == 0 else out


def _mp_mass(params: MpParams, a: float, b: float) -> float:
    lo, hi = params.support
    a, b = max(a, lo), min(b, hi)
    if b <= a:
        return 0.0
    val, _ = integrate.quad(lambda x: mp_density(x, params), a, b, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def mp_cdf_at(x: float, params: MpParams) -> float:
    """Accurate CDF value (atom included) by adaptive quadrature."""
    if x < 0:
        return 0.0
    return params.point_mass_at_zero + _mp_mass(params, 0.0, x)


@lru_cache(maxsize=16)
def _cdf_grid(q: float, sigma2: float, points: int = 4001):
    params = MpParams(q, sigma2)
    lo, hi = params.support
    # cosine spacing concentrates nodes at the square-root edges
    grid = lo + (hi - lo) * (1 - np.cos(np.linspace(0, np.pi, points))) / 2
    pieces = [_mp_mass(params, a, b) for a, b in zip(grid[:-1], grid[1:])]
    cdf = params.point_mass_at_zero + np.concatenate([[0.0], np.cumsum(pieces)])
    return grid, cdf


def mp_cdf(x, params: MpParams):
    """Vectorised CDF via interpolation on a precomputed quadrature grid."""
    grid, cdf = _cdf_grid(params.q, params.sigma2)
    x = np.asarray(x, dtype=float)
    out = np.interp(x, grid, cdf, left=params.point_mass_at_zero, right=cdf[-1])
    out = np.where(x < 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def ks_distance_to_mp(values, params: MpParams) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF of ``values`` and MP."""
    xs = np.sort(np.asarray(values, dtype=float))
    n = xs.size
    f = mp_cdf(xs, params)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def wishart_ensemble_spectrum(spec: WishartEnsembleSpec, return_matrices: bool = False):
    """Eigenvalues of sample correlation matrices of constant-correlation Gaussian data.

    Each sample draws ``T`` vectors ``L g`` with ``L L^T`` the population
    matrix, from its own child of ``SeedSequence(seed)``, so the result is
    the same however the samples are scheduled. Eigenvalues of all samples
    are concatenated in sample order.
    """
    chol = np.linalg.cholesky(spec.population_matrix())
    children = np.random.SeedSequence(spec.seed).spawn(spec.n_samples)
    draws = np.empty((spec.n_samples, spec.n, spec.t))
    for s, child in enumerate(children):
        draws[s] = chol @ np.random.default_rng(child).standard_normal((spec.n, spec.t))
    corr, sigma = pearson_stack(draws)
    if np.any(sigma == 0):
        raise NumericError("degenerate Monte Carlo sample")
    ev = np.linalg.eigvalsh(corr).reshape(-1)
    if return_matrices:
        return ev, corr
    return ev


def _clamp_eigs(values: np.ndarray) -> np.ndarray:
    if values.size and values.min() < -NEGATIVE_EIG_TOL:
        raise NumericError(f"eigenvalue {values.min():g} below -{NEGATIVE_EIG_TOL}")
    return np.clip(values, 0.0, None)


def density_histogram(values, bins: int, upper: float) -> Histogram:
    """``counts / (total * width)`` over ``bins`` equal bins on ``[0, upper]``."""
    values = np.asarray(values, dtype=float)
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if values.size == 0:
        raise DiagnosticsError("cannot histogram an empty sample")
    edges = np.linspace(0.0, upper, bins + 1)
    counts, _ = np.histogram(values, bins=edges)
    return Histogram(edges=edges, densities=counts / (values.size * np.diff(edges)))


def mp_histogram(params: MpParams, bins: int, upper: float) -> Histogram:
    """Bin-averaged MP density on ``[0, upper]``; the atom, if any, goes in the first bin."""
    edges = np.linspace(0.0, upper, bins + 1)
    masses = np.array([_mp_mass(params, a, b) for a, b in zip(edges[:-1], edges[1:])])
    masses[0] += params.point_mass_at_zero
    return Histogram(edges=edges, densities=masses / np.diff(edges))


def _mp_bins_for(bins_mp, cluster_id: int, k: int) -> int:
    if isinstance(bins_mp, int):
        return bins_mp
    bins_mp = tuple(bins_mp)
    if len(bins_mp) == k:
        return int(bins_mp[cluster_id])
    return int(bins_mp[0])


def cluster_spectra(
    matrices,
    labels,
    window: int,
    centroids=None,
    bins_empirical: int = 32,
    bins_wishart: int = 24,
    bins_mp: int | Sequence[int] = DEFAULT_MP_BINS,
    n_samples: int = 2000,
    seed: int = 0,
    q: float | None = None,
    sigma2: float = 1.0,
) -> list[ClusterSpectra]:
    """Empirical, MP and Wishart spectra for every cluster id in ``0 .. max(label)``.

    ``window`` is the number of samples per matrix (T). The Wishart
    ensemble for cluster ``c`` uses the centroid's mean off-diagonal
    correlation and seed ``seed + c``. ``bins_mp`` is an int or a per-cluster
    sequence; a sequence whose length differs from k falls back to its
    first entry.
    """
    from .clustering import as_matrix_stack

    stack = as_matrix_stack(matrices)
    labels = np.asarray(labels)
    m, n, _ = stack.shape
    if labels.shape != (m,):
        raise ShapeError(f"{labels.size} labels for {m} matrices")
    k = int(labels.max()) + 1 if centroids is None else len(centroids)
    params = MpParams(q=window / n if q is None else q, sigma2=sigma2)
    lo_edge = -1.0 / (n - 1)
    out = []
    for c in range(k):
        members = stack[labels == c]
        if members.shape[0] == 0:
            raise DiagnosticsError(f"cluster {c} is empty")
        cent = members.mean(axis=0) if centroids is None else np.asarray(centroids[c])
        emp = _clamp_eigs(np.concatenate([eigenvalues(a) for a in members]))
        x_bar = mean_offdiag(cent)
        margin = 1e-6
        x_used = float(np.clip(x_bar, lo_edge + margin, 1 - margin))
        if x_used != x_bar:
            warnings.warn(f"cluster {c}: x_bar={x_bar} clipped to {x_used} for the Wishart ensemble", RuntimeWarning, stacklevel=2)
        wish = _clamp_eigs(
            wishart_ensemble_spectrum(WishartEnsembleSpec(n=n, t=window, x_bar=x_used, n_samples=n_samples, seed=seed + c))
        )
        upper = float(max(emp.max(), wish.max(), params.support[1]))
        out.append(
            ClusterSpectra(
                cluster_id=c,
                n_members=int(members.shape[0]),
                empirical=EigenSpectrum(c, emp, density_histogram(emp, bins_empirical, upper)),
                mp_params=params,
                mp_histogram=mp_histogram(params, _mp_bins_for(bins_mp, c, k), upper),
                x_bar=x_bar,
                wishart_eigenvalues=wish,
                wishart_histogram=density_histogram(wish, bins_wishart, upper),
                axis_max=upper,
            )
        )
        logger.debug("cluster %d: %d matrices, x_bar=%.4f", c, members.shape[0], x_bar)
    return out
